"""Asymptotic covariances of the hazard-type estimators and log-scale intervals.

Every routine accepts either a :class:`~trunclife.population.TruncatedPopulation`
(true quantities) or an :class:`~trunclife.estimation.EmpiricalCounts`
(plug-in quantities).  Variances are on the ``sqrt(n)`` scale: the variance of
an estimate from a sample of size ``n`` is the entry divided by ``n``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimation import PairSample, empirical_counts
from .special import two_sided_z


class ZeroBracketError(ValueError):
    """A covariance entry needs ``C(x) > 0`` but the bracketing frequency is zero."""


def _source(source):
    if isinstance(source, PairSample):
        return empirical_counts(source)
    return source


def _check_brackets(C: np.ndarray, points: np.ndarray, strict: bool):
    zero = C <= 0
    if strict and zero.any():
        raise ZeroBracketError(f"C is zero at {points[zero].tolist()}")
    return zero


def sigma_c(source) -> np.ndarray:
    """Covariance of ``sqrt(n) (C_hat - C)`` over the lifetime support.

    Diagonal ``C(k)(1 - C(k))``, off-diagonal ``c(k', k) - C(k') C(k)``.
    """
    src = _source(source)
    C = np.asarray(src.C)
    return src.c_matrix() - np.outer(C, C)


def sigma_f(source, form: str = "bracket", strict: bool = True) -> np.ndarray:
    """Diagonal of the asymptotic covariance of the hazard estimates.

    ``form="bracket"`` evaluates ``f*(x) c(x, x+1) / C(x)^3``;
    ``form="hazard"`` evaluates ``lam(x)^2 (1 - lam(x)) / f*(x)``.  The two agree
    for true and for plug-in quantities alike.  The entry at omega is 0.
    Entries where ``C`` vanishes are NaN when ``strict`` is False.
    """
    src = _source(source)
    f_star = np.asarray(src.f_star, dtype=float)
    C = np.asarray(src.C, dtype=float)
    zero = _check_brackets(C, src.frame.x_support, strict)
    out = np.full(f_star.shape, np.nan)
    ok = ~zero
    with np.errstate(divide="ignore", invalid="ignore"):
        if form == "bracket":
            out[ok] = f_star[ok] * np.asarray(src.c_next)[ok] / C[ok] ** 3
        elif form == "hazard":
            lam = f_star[ok] / C[ok]
            out[ok] = lam ** 2 * (1.0 - lam) / f_star[ok]
        else:
            raise ValueError(f"unknown form {form!r}")
    out[-1] = 0.0
    return out


def sigma_g(source, form: str = "bracket", strict: bool = True) -> np.ndarray:
    """Diagonal of the asymptotic covariance of the reverse-hazard estimates.

    ``form="bracket"`` evaluates ``g*(y) c(y-1, y) / C(y)^3``; ``form="hazard"``
    evaluates ``beta(y)^2 (1 - beta(y)) / g*(y)``.  The first entry is 0.
    """
    src = _source(source)
    n_y = src.frame.n_y
    g_star = np.asarray(src.g_star, dtype=float)
    C = np.asarray(src.C, dtype=float)[:n_y]
    zero = _check_brackets(C, src.frame.y_support, strict)
    out = np.full(g_star.shape, np.nan)
    ok = ~zero
    with np.errstate(divide="ignore", invalid="ignore"):
        if form == "bracket":
            out[ok] = g_star[ok] * np.asarray(src.c_prev)[ok] / C[ok] ** 3
        elif form == "hazard":
            beta = g_star[ok] / C[ok]
            out[ok] = beta ** 2 * (1.0 - beta) / g_star[ok]
        else:
            raise ValueError(f"unknown form {form!r}")
    out[0] = 0.0
    return out


def _leave_one_out_products(factors: np.ndarray) -> np.ndarray:
    """``P[i, j] = prod_{k <= i, k != j} factors[k]`` for ``j <= i``, else 0."""
    size = factors.size
    out = np.zeros((size, size))
    for j in range(size):
        run = 1.0
        for i in range(size):
            if i != j:
                run *= factors[i]
            if i >= j:
                out[i, j] = run
    return out


def sigma_S(source, strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Asymptotic covariance of ``sqrt(n) (S_hat - S)``.

    Built as ``(RK) Sigma_f (RK)^T`` with ``R = diag(S)`` and ``K`` the
    lower-triangular matrix of ``-1 / (1 - lam(k))``.  The product ``RK`` is
    formed directly as leave-one-out survival products, which stays finite at
    ``lam(omega) = 1``.

    Returns
    -------
    cov : ndarray
        The covariance matrix; rows and columns at or after an interior point
        with ``lam = 1`` are NaN because the delta method breaks down there.
    undefined : ndarray of bool
        Mask of those rows.
    """
    src = _source(source)
    lam = np.asarray(src.lam, dtype=float)
    diag = sigma_f(src, strict=strict)
    n_x = lam.size
    undefined = np.zeros(n_x, dtype=bool)
    bad = np.flatnonzero((np.isnan(lam) | (lam >= 1.0))[:-1])
    if bad.size:
        undefined[bad[0]:] = True
    RK = -_leave_one_out_products(np.nan_to_num(1.0 - lam, nan=1.0))
    d = np.nan_to_num(diag, nan=0.0)
    cov = (RK * d) @ RK.T
    cov[undefined, :] = np.nan
    cov[:, undefined] = np.nan
    return cov, undefined


def sigma_G(source, strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Asymptotic covariance of ``sqrt(n) (G_hat - G)``.

    ``G(y)`` is the product of ``1 - beta(k)`` over ``k > y``, so the Jacobian
    of ``log G`` is strictly upper triangular; the top row (``G = 1``) is
    identically zero.  Rows at or below an interior ``beta = 1`` are NaN.
    """
    src = _source(source)
    beta = np.asarray(src.beta, dtype=float)
    diag = sigma_g(src, strict=strict)
    n_y = beta.size
    undefined = np.zeros(n_y, dtype=bool)
    bad = np.flatnonzero((np.isnan(beta) | (beta >= 1.0))[1:]) + 1
    if bad.size:
        undefined[: bad[-1]] = True
    factors = np.nan_to_num(1.0 - beta, nan=1.0)
    # WM[i, j] = -prod_{k > i, k != j} (1 - beta(k)) for j > i
    WM = np.zeros((n_y, n_y))
    for i in range(n_y):
        for j in range(i + 1, n_y):
            WM[i, j] = -np.prod(np.delete(factors[i + 1:], j - i - 1))
    d = np.nan_to_num(diag, nan=0.0)
    cov = (WM * d) @ WM.T
    cov[undefined, :] = np.nan
    cov[:, undefined] = np.nan
    return cov, undefined


def standard_errors(variance_diag: np.ndarray) -> np.ndarray:
    """Square roots of asymptotic variances (per-``sqrt(n)`` units)."""
    v = np.asarray(variance_diag, dtype=float)
    with np.errstate(invalid="ignore"):
        return np.sqrt(np.where(v < 0, np.nan, v))


def ci_log_scale(estimate: float, variance: float, n: float, level: float = 0.95):
    """Delta-method interval on the log scale, mapped back with ``exp``.

    ``variance`` is the asymptotic (``sqrt(n)``-scale) variance of the
    estimate; the log-scale standard error is ``sqrt(variance / n) / estimate``.
    For a hazard this reduces to ``sqrt((1 - lam) / (f* n))``.  Returns
    ``(nan, nan)`` when the estimate is 0, 1 or undefined, or the variance is
    unavailable.
    """
    lo, hi = ci_log_scale_array(np.array([estimate], dtype=float),
                                np.array([variance], dtype=float), n, level)
    return float(lo[0]), float(hi[0])


def ci_log_scale_array(estimate, variance, n: float, level: float = 0.95,
                       degenerate_na: bool = True):
    """Vectorized :func:`ci_log_scale`.

    With ``degenerate_na=False`` an estimate of exactly 1 yields the point
    interval ``[1, 1]`` instead of NaN (used when scoring coverage).
    """
    est = np.asarray(estimate, dtype=float)
    var = np.asarray(variance, dtype=float)
    z = two_sided_z(level)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        half = z * np.sqrt(var / n) / est
        lo = np.exp(np.log(est) - half)
        hi = np.exp(np.log(est) + half)
    bad = ~(est > 0) | np.isnan(var) | np.isnan(est)
    if degenerate_na:
        bad |= est >= 1.0
    lo[bad] = np.nan
    hi[bad] = np.nan
    return lo, hi


@dataclass(frozen=True)
class CovarianceSpec:
    """An exportable asymptotic covariance (``sqrt(n)`` scale)."""

    target: str
    matrix: np.ndarray
    n: float
    points: np.ndarray

    @property
    def is_diagonal(self) -> bool:
        m = self.matrix
        return bool(np.all(np.nan_to_num(m - np.diag(np.diag(m))) == 0))

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "n": None if not np.isfinite(self.n) else self.n,
            "points": self.points.tolist(),
            "matrix": [[None if np.isnan(v) else float(v) for v in row] for row in self.matrix],
        }

    def write_csv(self, path: Path):
        with open(path, "w") as fh:
            fh.write("point," + ",".join(str(p) for p in self.points) + "\n")
            for p, row in zip(self.points, self.matrix):
                fh.write(str(p) + "," + ",".join("NA" if np.isnan(v) else repr(float(v)) for v in row) + "\n")

    def write_json(self, path: Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def covariance(target: str, source) -> CovarianceSpec:
    src = _source(source)
    fr = src.frame
    n = float(getattr(src, "n", np.inf))
    if target == "C":
        return CovarianceSpec("C", sigma_c(src), n, fr.x_support)
    if target == "lambda":
        return CovarianceSpec("lambda", np.diag(sigma_f(src, strict=False)), n, fr.x_support)
    if target == "beta":
        return CovarianceSpec("beta", np.diag(sigma_g(src, strict=False)), n, fr.y_support)
    if target == "S":
        return CovarianceSpec("S", sigma_S(src, strict=False)[0], n, fr.x_support)
    if target == "G":
        return CovarianceSpec("G", sigma_G(src, strict=False)[0], n, fr.y_support)
    raise ValueError(f"unknown covariance target {target!r}")
