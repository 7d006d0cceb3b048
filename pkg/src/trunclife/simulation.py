"""Monte Carlo harness: samplers for observed pairs and replicate studies.

Replicate ``i`` draws from its own generator seeded by
``SeedSequence(seed, spawn_key=(i,))``, so results depend only on the plan and
never on how replicates are scheduled across worker processes.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asymptotics import ci_log_scale_array
from .estimation import PairSample, empirical_counts
from .inference import ShapeTestError, q_statistic_uniform
from .population import (
    DiscretePmf,
    TruncatedPopulation,
    build_population,
    frame_for,
    truncation_probability,
)
from .special import chi_square_cdf, two_sided_z


class AcceptanceTooLow(RuntimeError):
    pass


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_direct(pop: TruncatedPopulation, n: int, rng: np.random.Generator) -> PairSample:
    """Draw ``n`` pairs straight from ``h*`` by inverse-CDF over the flattened cells."""
    probs = pop.h.ravel()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    counts = np.bincount(idx, minlength=probs.size).reshape(pop.h.shape)
    return PairSample(pop.frame, counts.astype(float))


def _inverse_cdf(pmf: DiscretePmf, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(pmf.probs)
    cdf[-1] = 1.0
    return pmf.lo + np.searchsorted(cdf, u, side="right")


def sample_rejection(f: DiscretePmf, g: DiscretePmf, n: int, rng: np.random.Generator,
                     min_acceptance: float = 1e-3, batch: int | None = None) -> PairSample:
    """Draw ``X ~ f`` and ``Y ~ g`` independently and keep pairs with ``Y <= X``.

    Raises :class:`AcceptanceTooLow` when ``Pr(Y <= X)`` is below
    ``min_acceptance`` rather than spinning for a very long time.
    """
    frame = frame_for(f, g)
    alpha = truncation_probability(f.probs, g.probs, frame)
    if alpha < min_acceptance:
        raise AcceptanceTooLow(
            f"acceptance probability {alpha:.3g} is below the floor {min_acceptance:.3g}"
        )
    counts = np.zeros((frame.n_x, frame.n_y))
    need = n
    while need > 0:
        size = batch or max(64, int(1.2 * need / alpha) + 16)
        xs = _inverse_cdf(f, rng.random(size))
        ys = _inverse_cdf(g, rng.random(size))
        keep = np.flatnonzero(ys <= xs)[:need]
        np.add.at(counts, (xs[keep] - frame.x_lo, ys[keep] - frame.y_lo), 1.0)
        need -= keep.size
    return PairSample(frame, counts)


@dataclass(frozen=True)
class SimulationPlan:
    f: DiscretePmf
    g: DiscretePmf
    n: int
    replicates: int
    seed: int
    level: float = 0.95
    sampler: str = "direct"
    q_uniform: bool = False
    q_variance: str = "null"
    workers: int = 1

    def __post_init__(self):
        if self.n < 1 or self.replicates < 1:
            raise ValueError("n and replicates must be >= 1")
        if self.sampler not in ("direct", "rejection"):
            raise ValueError(f"unknown sampler {self.sampler!r}")

    def to_dict(self) -> dict:
        return {
            "f": self.f.to_dict(),
            "g": self.g.to_dict(),
            "n": self.n,
            "replicates": self.replicates,
            "seed": self.seed,
            "level": self.level,
            "sampler": self.sampler,
            "q_uniform": self.q_uniform,
            "q_variance": self.q_variance,
        }


def _one_replicate(plan: SimulationPlan, pop: TruncatedPopulation, index: int) -> dict:
    rng = replicate_rng(plan.seed, index)
    if plan.sampler == "direct":
        sample = sample_direct(pop, plan.n, rng)
    else:
        sample = sample_rejection(plan.f, plan.g, plan.n, rng)
    ec = empirical_counts(sample)
    lam = ec.lam
    beta = ec.beta
    with np.errstate(divide="ignore", invalid="ignore"):
        var_lam = lam ** 2 * (1.0 - lam) / ec.f_star
        var_beta = beta ** 2 * (1.0 - beta) / ec.g_star
    lam_lo, lam_hi = ci_log_scale_array(lam, var_lam, plan.n, plan.level, degenerate_na=False)
    beta_lo, beta_hi = ci_log_scale_array(beta, var_beta, plan.n, plan.level, degenerate_na=False)
    out = {
        "f_star": ec.f_star, "g_star": ec.g_star,
        "lam": lam, "beta": beta,
        "lam_lo": lam_lo, "lam_hi": lam_hi,
        "beta_lo": beta_lo, "beta_hi": beta_hi,
    }
    if plan.q_uniform:
        out["q_uniform"] = _q_uniform_or_nan(ec, plan.q_variance)
    return out


def _q_uniform_or_nan(ec, variance: str) -> float:
    try:
        return q_statistic_uniform(ec, variance=variance).statistic
    except ShapeTestError:
        return math.nan


def _run_chunk(args):
    plan, indices = args
    pop = build_population(plan.f, plan.g)
    return [_one_replicate(plan, pop, i) for i in indices]


@dataclass
class CoverageReport:
    """Per-point coverage of the log-scale intervals.

    ``coverage`` is a percentage over realized replicates only; ``unrealized``
    counts replicates where the point had no observations.
    """

    quantity: str
    points: np.ndarray
    truth: np.ndarray
    coverage: np.ndarray
    unrealized: np.ndarray
    mean_estimate: np.ndarray
    empirical_variance: np.ndarray
    asymptotic_variance: np.ndarray

    def rows(self):
        for i, p in enumerate(self.points):
            yield {
                "quantity": self.quantity,
                "point": int(p),
                "truth": float(self.truth[i]),
                "coverage_pct": float(self.coverage[i]),
                "unrealized": int(self.unrealized[i]),
                "mean_estimate": float(self.mean_estimate[i]),
                "empirical_variance": float(self.empirical_variance[i]),
                "asymptotic_variance": float(self.asymptotic_variance[i]),
            }


@dataclass
class SimulationResult:
    plan: SimulationPlan
    population: TruncatedPopulation
    lam: CoverageReport
    beta: CoverageReport
    lam_covariance: np.ndarray
    beta_covariance: np.ndarray
    bands: list = field(default_factory=list)
    q_uniform: np.ndarray | None = None
    replicates: dict = field(default_factory=dict, repr=False)

    def q_uniform_sup_distance(self) -> float:
        """Kolmogorov distance between the simulated statistics and chi-square."""
        if self.q_uniform is None:
            raise ValueError("plan did not request the uniform-null statistic")
        stats = np.sort(self.q_uniform[np.isfinite(self.q_uniform)])
        return ks_distance(stats, self.population.frame.n_y - 1)


def ks_distance(stats: np.ndarray, dof: int) -> float:
    stats = np.sort(np.asarray(stats, dtype=float))
    k = stats.size
    cdf = np.array([chi_square_cdf(s, dof) for s in stats])
    upper = np.arange(1, k + 1) / k - cdf
    lower = cdf - np.arange(0, k) / k
    return float(max(upper.max(), lower.max()))


def _coverage(quantity, points, truth, est, lo, hi, realized, n, asym_var) -> CoverageReport:
    R = est.shape[0]
    covered = (lo <= truth) & (truth <= hi) & realized
    n_real = realized.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        cp = 100.0 * covered.sum(axis=0) / n_real
        masked = np.where(realized, est, np.nan)
        mean = np.nanmean(masked, axis=0) if n_real.min() > 0 else _safe_nanmean(masked)
        dev = np.sqrt(n) * (masked - truth)
        emp_var = _safe_nanvar(dev)
    return CoverageReport(quantity, points, truth, cp, R - n_real, mean, emp_var, asym_var)


def _safe_nanmean(a):
    out = np.full(a.shape[1], np.nan)
    ok = np.isfinite(a).any(axis=0)
    out[ok] = np.nanmean(a[:, ok], axis=0)
    return out


def _safe_nanvar(a):
    out = np.full(a.shape[1], np.nan)
    ok = np.isfinite(a).sum(axis=0) > 1
    out[ok] = np.nanvar(a[:, ok], axis=0, ddof=1)
    return out


def _empirical_cov(est: np.ndarray, truth: np.ndarray, n: int) -> np.ndarray:
    dev = np.sqrt(n) * (est - truth)
    full = np.all(np.isfinite(dev), axis=1)
    if full.sum() < 2:
        return np.full((est.shape[1], est.shape[1]), np.nan)
    return np.atleast_2d(np.cov(dev[full], rowvar=False, ddof=1))


def run_replicates(plan: SimulationPlan) -> SimulationResult:
    """Run ``plan.replicates`` independent estimation replicates and aggregate them."""
    pop = build_population(plan.f, plan.g)
    fr = pop.frame
    indices = list(range(plan.replicates))
    if plan.workers > 1:
        chunks = [indices[i::plan.workers] for i in range(plan.workers)]
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            parts = list(pool.map(_run_chunk, [(plan, c) for c in chunks]))
        by_index = {}
        for chunk, res in zip(chunks, parts):
            by_index.update(zip(chunk, res))
        results = [by_index[i] for i in indices]
    else:
        results = [_one_replicate(plan, pop, i) for i in indices]

    stacked = {k: np.array([r[k] for r in results]) for k in results[0]}
    n = plan.n

    # the terminal hazard and first reverse hazard are identically 1
    lx = slice(0, fr.n_x - 1)
    by = slice(1, fr.n_y)
    lam_truth = pop.lam[lx]
    beta_truth = pop.beta[by]
    asym_lam = (pop.lam ** 2 * (1 - pop.lam) / pop.f_star)[lx]
    asym_beta = (pop.beta ** 2 * (1 - pop.beta) / pop.g_star)[by]

    lam_report = _coverage(
        "lambda", fr.x_support[lx], lam_truth, stacked["lam"][:, lx],
        stacked["lam_lo"][:, lx], stacked["lam_hi"][:, lx],
        stacked["f_star"][:, lx] > 0, n, asym_lam,
    )
    beta_report = _coverage(
        "beta", fr.y_support[by], beta_truth, stacked["beta"][:, by],
        stacked["beta_lo"][:, by], stacked["beta_hi"][:, by],
        stacked["g_star"][:, by] > 0, n, asym_beta,
    )
    lam_real = np.where(stacked["f_star"][:, lx] > 0, stacked["lam"][:, lx], np.nan)
    beta_real = np.where(stacked["g_star"][:, by] > 0, stacked["beta"][:, by], np.nan)

    bands = _bands("lambda", fr.x_support[lx], lam_truth, asym_lam, lam_real,
                   stacked["lam_lo"][:, lx], stacked["lam_hi"][:, lx], n, plan.level)
    bands += _bands("beta", fr.y_support[by], beta_truth, asym_beta, beta_real,
                    stacked["beta_lo"][:, by], stacked["beta_hi"][:, by], n, plan.level)

    return SimulationResult(
        plan=plan,
        population=pop,
        lam=lam_report,
        beta=beta_report,
        lam_covariance=_empirical_cov(lam_real, lam_truth, n),
        beta_covariance=_empirical_cov(beta_real, beta_truth, n),
        bands=bands,
        q_uniform=stacked.get("q_uniform"),
        replicates=stacked,
    )


def _bands(name, points, truth, asym_var, est, lo, hi, n, level):
    """Long-format rows ``(series, point, y, lo, hi)`` for plotting."""
    z = two_sided_z(level)
    with np.errstate(divide="ignore", invalid="ignore"):
        half = z * np.sqrt(asym_var / n) / truth
        true_lo = np.exp(np.log(truth) - half)
        true_hi = np.exp(np.log(truth) + half)
        mean_est = _safe_nanmean(est)
        mean_lo = _safe_nanmean(np.where(np.isfinite(est), lo, np.nan))
        mean_hi = _safe_nanmean(np.where(np.isfinite(est), hi, np.nan))
    tail = 100 * (1 - level) / 2
    rows = []
    for i, p in enumerate(points):
        col = est[:, i][np.isfinite(est[:, i])]
        if col.size:
            q_lo, q_hi = np.percentile(col, [tail, 100 - tail])
        else:
            q_lo = q_hi = math.nan
        rows.append((f"{name}_true", int(p), truth[i], true_lo[i], true_hi[i]))
        rows.append((f"{name}_mean_estimate", int(p), mean_est[i], mean_lo[i], mean_hi[i]))
        rows.append((f"{name}_empirical_band", int(p), mean_est[i], q_lo, q_hi))
    return rows


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "NA"
    return repr(float(v))


def write_simulation_outputs(result: SimulationResult, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = out_dir / "coverage.csv"
    with open(path, "w", newline="") as fh:
        rows = list(result.lam.rows()) + list(result.beta.rows())
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()})
    written.append(path)

    for name, cov, pts in (("lambda", result.lam_covariance, result.lam.points),
                           ("beta", result.beta_covariance, result.beta.points)):
        path = out_dir / f"covariance_{name}.csv"
        with open(path, "w") as fh:
            fh.write("point," + ",".join(str(int(p)) for p in pts) + "\n")
            for p, row in zip(pts, cov):
                fh.write(f"{int(p)}," + ",".join(_fmt(v) for v in row) + "\n")
        written.append(path)

    path = out_dir / "bands.csv"
    with open(path, "w") as fh:
        fh.write("series,x,y,lo,hi\n")
        for series, p, y, lo, hi in result.bands:
            fh.write(f"{series},{p},{_fmt(y)},{_fmt(lo)},{_fmt(hi)}\n")
    written.append(path)

    summary = {
        "plan": result.plan.to_dict(),
        "alpha": result.population.alpha,
        "frame": result.population.frame.to_dict(),
    }
    if result.q_uniform is not None:
        path = out_dir / "q_uniform.csv"
        with open(path, "w") as fh:
            fh.write("replicate,statistic\n")
            for i, q in enumerate(result.q_uniform):
                fh.write(f"{i},{_fmt(q)}\n")
        written.append(path)
        summary["q_uniform_dof"] = result.population.frame.n_y - 1
        summary["q_uniform_sup_distance"] = result.q_uniform_sup_distance()
    path = out_dir / "summary.json"
    path.write_text(json.dumps(summary, indent=2))
    written.append(path)
    return written
