"""Monthly lease-payment records to left-truncated (X, Y) pairs.

A lease terminates at the first age that starts a run of ``zero_run``
consecutive zero payments.  The truncation time is ``Y = m + delta + 1 - T``
where ``T`` is the origination month index.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimation import PairSample
from .population import SupportFrame


class IngestError(ValueError):
    pass


class MalformedSeries(IngestError):
    pass


CENSOR_POLICIES = ("assign-last", "drop")


@dataclass(frozen=True)
class LeaseRecord:
    """One contract's payment history keyed by consecutive lease ages."""

    contract_id: str
    origination_month: int
    ages: tuple
    payments: tuple
    original_term: int | None = None

    def validate(self):
        if not self.ages:
            raise MalformedSeries(f"{self.contract_id}: empty payment series")
        if len(self.ages) != len(self.payments):
            raise MalformedSeries(f"{self.contract_id}: ages and payments differ in length")
        steps = np.diff(np.asarray(self.ages))
        if np.any(steps == 0):
            raise MalformedSeries(f"{self.contract_id}: duplicate ages")
        if np.any(steps != 1):
            i = int(np.flatnonzero(steps != 1)[0])
            raise MalformedSeries(
                f"{self.contract_id}: gap in ages after {self.ages[i]} (next {self.ages[i + 1]})"
            )
        if any(p < 0 for p in self.payments):
            raise MalformedSeries(f"{self.contract_id}: negative payment")


@dataclass(frozen=True)
class IngestConfig:
    delta: int
    m: int
    zero_run: int = 3
    t_base: int = 0
    censor: str = "assign-last"
    term: int | None = None

    def __post_init__(self):
        if self.zero_run < 1:
            raise ValueError("zero_run must be >= 1")
        if self.t_base not in (0, 1):
            raise ValueError("t_base must be 0 or 1")
        if self.censor not in CENSOR_POLICIES:
            raise ValueError(f"censor must be one of {CENSOR_POLICIES}")
        if self.delta < 0 or self.m < 1:
            raise ValueError("need delta >= 0 and m >= 1")

    @property
    def y_lo(self) -> int:
        return self.delta + 1

    @property
    def y_hi(self) -> int:
        return self.m + self.delta + 1 - self.t_base

    def truncation_time(self, origination_month: int) -> int:
        return self.m + self.delta + 1 - origination_month

    def to_dict(self) -> dict:
        return {
            "delta": self.delta, "m": self.m, "zero_run": self.zero_run,
            "t_base": self.t_base, "censor": self.censor, "term": self.term,
        }


@dataclass(frozen=True)
class Termination:
    """Outcome of :func:`detect_termination`.

    ``age`` is the termination age, or the last observed age when
    ``censored``.  ``trailing_zeros`` counts zero payments at the very end
    of a censored series (a run too short to count as termination).
    """

    age: int
    censored: bool
    trailing_zeros: int = 0


def detect_termination(ages, payments, zero_run: int = 3) -> Termination:
    """Find the first age that starts ``zero_run`` consecutive zero payments.

    Parameters
    ----------
    ages : sequence of int
        Consecutive lease ages.
    payments : sequence of float
        Payment amounts at those ages.
    zero_run : int
        Length of the zero run that marks termination.
    """
    ages = np.asarray(ages, dtype=np.int64)
    pay = np.asarray(payments, dtype=float)
    if ages.size == 0:
        raise MalformedSeries("empty payment series")
    if np.any(np.diff(ages) != 1):
        raise MalformedSeries("ages are not consecutive")
    run = 0
    for i, p in enumerate(pay):
        run = run + 1 if p == 0 else 0
        if run == zero_run:
            return Termination(int(ages[i - zero_run + 1]), False)
    return Termination(int(ages[-1]), True, run)


@dataclass
class IngestReport:
    input_records: int = 0
    terminated: int = 0
    censored_assigned: int = 0
    censored_dropped: int = 0
    filtered: int = 0
    rejected: int = 0
    flagged_trailing_zeros: list = field(default_factory=list)
    censored_ids: list = field(default_factory=list)
    rejections: list = field(default_factory=list)
    hard_errors: list = field(default_factory=list)
    frame: dict | None = None

    @property
    def ingested(self) -> int:
        return self.terminated + self.censored_assigned

    def balanced(self) -> bool:
        total = (self.terminated + self.censored_assigned + self.censored_dropped
                 + self.filtered + self.rejected)
        return total == self.input_records

    def to_dict(self) -> dict:
        return {
            "input_records": self.input_records,
            "ingested": self.ingested,
            "terminated": self.terminated,
            "censored_assigned": self.censored_assigned,
            "censored_dropped": self.censored_dropped,
            "filtered": self.filtered,
            "rejected": self.rejected,
            "censored_ids": sorted(self.censored_ids),
            "flagged_trailing_zeros": sorted(self.flagged_trailing_zeros),
            "rejections": sorted(self.rejections, key=lambda r: r["contract_id"]),
            "hard_errors": self.hard_errors,
            "frame": self.frame,
        }


def build_pair_sample(records, config: IngestConfig, hard_errors=()) -> tuple[PairSample, IngestReport]:
    """Convert lease records to a :class:`PairSample` and an ingest report.

    The lifetime support ends at the largest emitted ``X``.  Records are
    rejected (with a reason) for malformed series, an origination index
    outside ``{t_base, ..., m}``, or ``Y > X``.  ``hard_errors`` carries
    row-level parse problems from the reader into the report.
    """
    report = IngestReport(hard_errors=list(hard_errors))
    xs, ys = [], []
    # sort so the report does not depend on record order
    for rec in sorted(records, key=lambda r: r.contract_id):
        report.input_records += 1
        if config.term is not None and rec.original_term != config.term:
            report.filtered += 1
            continue
        try:
            rec.validate()
            t = rec.origination_month
            if not config.t_base <= t <= config.m:
                raise IngestError(
                    f"origination month {t} outside {{{config.t_base}..{config.m}}}"
                )
            y = config.truncation_time(t)
            term = detect_termination(rec.ages, rec.payments, config.zero_run)
        except IngestError as exc:
            report.rejected += 1
            report.rejections.append({"contract_id": rec.contract_id, "reason": str(exc)})
            if isinstance(exc, MalformedSeries):
                report.hard_errors.append({"contract_id": rec.contract_id, "error": str(exc)})
            continue
        if term.censored:
            if term.trailing_zeros:
                report.flagged_trailing_zeros.append(rec.contract_id)
            if config.censor == "drop":
                report.censored_dropped += 1
                report.censored_ids.append(rec.contract_id)
                continue
        x = term.age
        if y > x:
            report.rejected += 1
            report.rejections.append(
                {"contract_id": rec.contract_id, "reason": f"truncation time {y} exceeds lifetime {x}"}
            )
            continue
        if term.censored:
            report.censored_assigned += 1
            report.censored_ids.append(rec.contract_id)
        else:
            report.terminated += 1
        xs.append(x)
        ys.append(y)
    if not xs:
        raise IngestError("no records could be ingested")
    frame = SupportFrame.from_ranges(config.y_lo, max(max(xs), config.y_hi), config.y_lo, config.y_hi)
    report.frame = frame.to_dict()
    return PairSample.from_pairs(xs, ys, frame=frame), report


REQUIRED_COLUMNS = ("contract_id", "origination_month", "age", "payment")


def read_records_csv(path) -> tuple[list[LeaseRecord], list[dict]]:
    """Read a long-format payment CSV.

    Columns ``contract_id, origination_month, age, payment`` are required and
    ``original_term`` is optional.  Unparseable rows are skipped and returned
    as errors with their line numbers; a contract whose rows disagree on
    origination month or term is dropped with an error.
    """
    errors = []
    rows = defaultdict(list)
    meta = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        has_term = "original_term" in header
        for row in reader:
            line = reader.line_num
            try:
                cid = row["contract_id"].strip()
                if not cid:
                    raise ValueError("empty contract_id")
                t = int(row["origination_month"])
                age = int(row["age"])
                pay = float(row["payment"])
                term = int(row["original_term"]) if has_term and row["original_term"] not in ("", None) else None
            except (TypeError, ValueError) as exc:
                errors.append({"line": line, "error": f"malformed row: {exc}"})
                continue
            if cid in meta and meta[cid] != (t, term):
                errors.append({"line": line, "contract_id": cid,
                               "error": "origination_month/original_term differ from earlier rows"})
                meta[cid] = None
                continue
            meta.setdefault(cid, (t, term))
            rows[cid].append((age, pay))
    records = []
    for cid, items in rows.items():
        if meta.get(cid) is None:
            continue
        items.sort()
        t, term = meta[cid]
        records.append(LeaseRecord(cid, t, tuple(a for a, _ in items), tuple(p for _, p in items), term))
    return records, errors
