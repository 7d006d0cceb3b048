"""Command-line entry point: ``trunclife <command> [options]``.

Every command accepts ``--config FILE`` (a JSON object whose keys are option
names, e.g. ``{"n": 250, "pmf_x": "..."}``); explicit flags win over the
file.  Outputs default to the directory in ``$TRUNCLIFE_OUT`` (else the
working directory) and are accompanied by ``manifest.json``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import secrets
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .asymptotics import sigma_f, sigma_g
from .estimation import TruncationViolation
from .inference import ShapeTestError, q_statistic_uniform
from .ingest import IngestConfig, IngestError, build_pair_sample, read_records_csv
from .io import PairFileError, read_pairs_csv, write_pairs_csv
from .population import SupportError, SupportFrame, build_population, pmf_from_spec, population_tables
from .simulation import AcceptanceTooLow, SimulationPlan, run_replicates, write_simulation_outputs
from .tables import estimate_table

OUT_ENV = "TRUNCLIFE_OUT"


class CliError(Exception):
    def __init__(self, message, errors=()):
        self.errors = list(errors)
        super().__init__(message)


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    inputs: dict = field(default_factory=dict)
    version: str = __version__

    def write(self, directory: Path) -> Path:
        path = Path(directory) / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, default=str))
        return path


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "."))


def _frame_from_args(args) -> SupportFrame | None:
    given = [args.delta, args.m, args.omega]
    if all(v is None for v in given):
        return None
    if any(v is None for v in given):
        raise CliError("--delta, --m and --omega must be given together")
    return SupportFrame(args.delta, args.m, args.omega)


def _pmf(spec):
    try:
        return pmf_from_spec(spec)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise CliError(f"invalid pmf {spec!r}: {exc}") from exc


def _config_view(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "config")}


def cmd_estimate(args) -> int:
    sample = read_pairs_csv(args.pairs, frame=_frame_from_args(args))
    table = estimate_table(sample, level=args.level)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    table.write_csv(out / "estimates.csv")
    table.write_json(out / "estimates.json")
    RunManifest("estimate", _config_view(args), inputs={str(args.pairs): sha256(args.pairs)}).write(out)
    print(f"wrote {out / 'estimates.csv'} (n={sample.n:g}, frame={sample.frame})")
    return 0


def cmd_test_uniform(args) -> int:
    sample = read_pairs_csv(args.pairs, frame=_frame_from_args(args))
    result = q_statistic_uniform(sample, level=args.level, variance=args.variance)
    payload = result.to_dict()
    payload["variance"] = args.variance
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "test_uniform.json").write_text(text)
        RunManifest("test-uniform", _config_view(args), inputs={str(args.pairs): sha256(args.pairs)}).write(out)
    return 0


def cmd_simulate(args) -> int:
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}")
    plan = SimulationPlan(
        f=_pmf(args.pmf_x), g=_pmf(args.pmf_y), n=args.n, replicates=args.replicates,
        seed=seed, level=args.level, sampler=args.sampler, q_uniform=args.q_uniform,
        q_variance=args.q_variance, workers=args.workers,
    )
    result = run_replicates(plan)
    out = Path(args.out or _default_out())
    write_simulation_outputs(result, out)
    inputs = {s: sha256(s) for s in (args.pmf_x, args.pmf_y) if Path(s).is_file()}
    config = _config_view(args)
    config["seed"] = seed
    RunManifest("simulate", config, seed=seed, inputs=inputs).write(out)
    print(f"wrote simulation outputs to {out}")
    return 0


def cmd_ingest(args) -> int:
    config = IngestConfig(delta=args.delta, m=args.m, zero_run=args.zero_run,
                          t_base=args.t_base, censor=args.censor, term=args.term)
    records, row_errors = read_records_csv(args.records)
    sample, report = build_pair_sample(records, config, hard_errors=row_errors)
    out = Path(args.out) if args.out else _default_out() / "pairs.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pairs_csv(sample, out)
    report_path = out.with_name(out.stem + ".report.json")
    report_path.write_text(json.dumps(report.to_dict(), indent=2))
    RunManifest("ingest", _config_view(args), inputs={str(args.records): sha256(args.records)}).write(out.parent)
    print(f"wrote {out} ({report.ingested} pairs; {report.censored_assigned + report.censored_dropped} censored, "
          f"{report.rejected} rejected)")
    if report.hard_errors:
        print(json.dumps({"errors": report.hard_errors}, indent=2), file=sys.stderr)
        return 1
    return 0


def cmd_oracle(args) -> int:
    pop = build_population(_pmf(args.pmf_x), _pmf(args.pmf_y))
    tables = population_tables(pop)
    tables["lifetime"]["sigma_f"] = sigma_f(pop).tolist()
    tables["truncation"]["sigma_g"] = sigma_g(pop).tolist()
    tables["c"] = pop.c_matrix().tolist()
    text = json.dumps(tables, indent=2)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "oracle.json").write_text(text)
        inputs = {s: sha256(s) for s in (args.pmf_x, args.pmf_y) if Path(s).is_file()}
        RunManifest("oracle", _config_view(args), inputs=inputs).write(out)
    else:
        print(text)
    return 0


def _add_frame(p):
    p.add_argument("--delta", type=int, help="frame: truncation lower bound minus one")
    p.add_argument("--m", type=int, help="frame: number of truncation support points")
    p.add_argument("--omega", type=int, help="frame: largest lifetime")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trunclife", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file of option values")
        p.set_defaults(func=func)
        return p

    p = command("estimate", cmd_estimate, "estimate tables from a pairs file")
    p.add_argument("--pairs", required=True, help="CSV with header x,y or x,y,count")
    _add_frame(p)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", help="output directory")

    p = command("simulate", cmd_simulate, "Monte Carlo coverage study")
    p.add_argument("--pmf-x", required=True, help="lifetime pmf: JSON file or name:k=v,...")
    p.add_argument("--pmf-y", required=True, help="truncation pmf: JSON file or name:k=v,...")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int, help="master seed; generated and printed when omitted")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--sampler", choices=("direct", "rejection"), default="direct")
    p.add_argument("--q-uniform", action="store_true", help="also record the uniform-shape statistic")
    p.add_argument("--q-variance", choices=("null", "estimate"), default="null")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory")

    p = command("test-uniform", cmd_test_uniform, "chi-square test of a uniform truncation law")
    p.add_argument("--pairs", required=True)
    _add_frame(p)
    p.add_argument("--level", type=float, default=0.05, help="significance level")
    p.add_argument("--variance", choices=("null", "estimate"), default="null")
    p.add_argument("--out", help="output directory")

    p = command("ingest", cmd_ingest, "payment records to pairs")
    p.add_argument("--records", required=True)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--zero-run", type=int, default=3)
    p.add_argument("--t-base", type=int, choices=(0, 1), default=0)
    p.add_argument("--censor", choices=("assign-last", "drop"), default="assign-last")
    p.add_argument("--term", type=int, help="keep only contracts with this original term")
    p.add_argument("--out", help="output pairs CSV")

    p = command("oracle", cmd_oracle, "population quantities for given pmfs")
    p.add_argument("--pmf-x", required=True)
    p.add_argument("--pmf-y", required=True)
    p.add_argument("--out", help="output directory (default: print JSON)")
    return parser


def _apply_config(parser, argv):
    """Parse ``argv`` with values from ``--config`` installed as defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    subs = parser._subparsers._group_actions[0].choices
    if not known.config or known.command not in subs:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError("config file must hold a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    sub = subs[known.command]
    unknown = sorted(set(cfg) - {a.dest for a in sub._actions})
    if unknown:
        raise CliError(f"unknown config keys {unknown}")
    # flags supplied by the file are no longer required on the command line
    for action in sub._actions:
        if action.dest in cfg:
            action.required = False
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except PairFileError as exc:
        _report(str(exc), exc.errors)
    except CliError as exc:
        _report(str(exc), exc.errors)
    except (IngestError, ShapeTestError, SupportError, TruncationViolation,
            AcceptanceTooLow, ValueError, OSError) as exc:
        _report(f"{type(exc).__name__}: {exc}")
    return 1


def _report(message, errors=()):
    print(json.dumps({"error": message, "errors": list(errors)}, indent=2, default=str), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
