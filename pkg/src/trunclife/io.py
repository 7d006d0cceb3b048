"""Pair-sample CSV files: ``x,y`` (one pair per row) or weighted ``x,y,count``."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .estimation import PairSample, TruncationViolation
from .population import SupportError, SupportFrame


class PairFileError(ValueError):
    """Problems found while reading a pairs file; ``errors`` lists them by line."""

    def __init__(self, path, errors):
        self.errors = list(errors)
        head = "; ".join(f"line {e['line']}: {e['error']}" for e in self.errors[:5])
        more = f" (+{len(self.errors) - 5} more)" if len(self.errors) > 5 else ""
        super().__init__(f"{path}: {head}{more}")


def read_pairs_csv(path, frame: SupportFrame | None = None) -> PairSample:
    """Read a pairs file into a :class:`PairSample`.

    Every malformed row is collected before raising, so one run reports all
    of them with line numbers.
    """
    errors = []
    xs, ys, ws = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise PairFileError(path, [{"line": 1, "error": "empty file"}])
        cols = [h.strip().lower() for h in header]
        if cols[:2] != ["x", "y"] or cols[2:] not in ([], ["count"]):
            raise PairFileError(path, [{"line": 1, "error": f"expected header x,y[,count], got {header}"}])
        weighted = len(cols) == 3
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(cols):
                errors.append({"line": line, "error": f"expected {len(cols)} fields, got {len(row)}"})
                continue
            try:
                x, y = int(row[0]), int(row[1])
                w = float(row[2]) if weighted else 1.0
            except ValueError as exc:
                errors.append({"line": line, "error": str(exc)})
                continue
            if not np.isfinite(w) or w < 0:
                errors.append({"line": line, "error": f"count must be finite and >= 0, got {row[2]}"})
                continue
            if y > x:
                errors.append({"line": line, "error": f"pair violates y <= x: ({x}, {y})"})
                continue
            xs.append(x)
            ys.append(y)
            ws.append(w)
    if errors:
        raise PairFileError(path, errors)
    if not xs or sum(ws) <= 0:
        raise PairFileError(path, [{"line": 2, "error": "no pairs"}])
    try:
        return PairSample.from_pairs(xs, ys, frame=frame, weights=ws)
    except (SupportError, TruncationViolation) as exc:
        raise PairFileError(path, [{"line": 0, "error": str(exc)}]) from exc


def write_pairs_csv(sample: PairSample, path) -> Path:
    """Write the nonzero cells as ``x,y,count`` rows sorted by ``(x, y)``."""
    path = Path(path)
    fr = sample.frame
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "count"])
        for i, j in zip(*np.nonzero(sample.counts)):
            c = sample.counts[i, j]
            w.writerow([fr.x_lo + i, fr.y_lo + j, int(c) if c == int(c) else repr(float(c))])
    return path
