"""Empirical estimators from a sample of left-truncated pairs.

A sample is stored as a table of cell weights over the trapezoid, so raw pair
lists and weighted samples (``x, y, count``) share one code path.  All
frequencies are formed as cell sums first and divided by ``n`` last; with
integer counts this makes every estimate independent of accumulation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .population import SupportError, SupportFrame, TruncatedPopulation


class TruncationViolation(ValueError):
    """A pair with ``y > x`` (or outside the frame) was supplied."""


class UndefinedEstimateError(ValueError):
    """A product estimator hit a point where the bracketing frequency is zero."""

    def __init__(self, what: str, points: Sequence[int]):
        self.points = list(points)
        super().__init__(
            f"{what} undefined at {self.points} (no observed pair brackets these points); "
            f"pass skip_gaps=True to step over them"
        )


def bracket_table(cells: np.ndarray, frame: SupportFrame) -> np.ndarray:
    """Cumulative cell sums ``T[a, b] = sum_{x >= a, y <= b} cells[x, y]``.

    Both indices run over the lifetime support plus one trailing slot, so
    ``T[k + 1, k]`` (``x >= k + 1``) is always addressable and is zero at
    ``k = omega``.
    """
    n_x, n_y = frame.n_x, frame.n_y
    # y-levels over the lifetime support; levels beyond y_hi include every y
    padded = np.zeros((n_x + 1, n_x + 1))
    padded[:n_x, :n_y] = cells
    tail_x = np.cumsum(padded[::-1], axis=0)[::-1]
    return np.cumsum(tail_x, axis=1)


@dataclass(frozen=True)
class PairSample:
    """Observed pairs as cell weights over the trapezoid.

    ``counts[i, j]`` is the (possibly fractional) weight of the pair
    ``(x_lo + i, y_lo + j)``.
    """

    frame: SupportFrame
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float).copy()
        fr = self.frame
        if c.shape != (fr.n_x, fr.n_y):
            raise ValueError(f"counts must have shape {(fr.n_x, fr.n_y)}, got {c.shape}")
        if np.any(~np.isfinite(c)) or np.any(c < 0):
            raise ValueError("counts must be finite and nonnegative")
        if np.any(c[~fr.trapezoid_mask()] != 0):
            raise TruncationViolation("weight placed on a cell with y > x")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> float:
        return float(self.counts.sum())

    @classmethod
    def from_pairs(cls, x: Iterable[int], y: Iterable[int] | None = None,
                   frame: SupportFrame | None = None,
                   weights: Iterable[float] | None = None) -> "PairSample":
        """Build a sample from pairs.

        Either pass a sequence of ``(x, y)`` tuples as ``x`` or two parallel
        integer sequences.  With no ``frame`` the supports are inferred from
        the data: both start at the smallest ``y``, the lifetime support ends
        at the largest ``x`` and the truncation support at the largest ``y``.
        """
        if y is None:
            arr = np.asarray(list(x), dtype=np.int64).reshape(-1, 2)
            xs, ys = arr[:, 0], arr[:, 1]
        else:
            xs = np.asarray(list(x), dtype=np.int64)
            ys = np.asarray(list(y), dtype=np.int64)
        if xs.size == 0:
            raise ValueError("empty sample")
        if xs.shape != ys.shape:
            raise ValueError("x and y must have equal length")
        w = np.ones(xs.size) if weights is None else np.asarray(list(weights), dtype=float)
        if w.shape != xs.shape:
            raise ValueError("weights must match the number of pairs")

        bad = np.flatnonzero(ys > xs)
        if bad.size:
            i = int(bad[0])
            raise TruncationViolation(
                f"{bad.size} pair(s) violate y <= x, first at row {i}: ({xs[i]}, {ys[i]})"
            )
        if frame is None:
            lo = int(ys.min())
            frame = SupportFrame.from_ranges(lo, int(xs.max()), lo, int(ys.max()))
        else:
            out = (xs < frame.x_lo) | (xs > frame.x_hi) | (ys < frame.y_lo) | (ys > frame.y_hi)
            if out.any():
                i = int(np.flatnonzero(out)[0])
                raise SupportError(
                    f"{int(out.sum())} pair(s) fall outside {frame}, first ({xs[i]}, {ys[i]})"
                )
        counts = np.zeros((frame.n_x, frame.n_y))
        np.add.at(counts, (xs - frame.x_lo, ys - frame.y_lo), w)
        return cls(frame, counts)

    @classmethod
    def from_population(cls, pop: TruncatedPopulation, n: float = 1.0) -> "PairSample":
        """Weighted sample whose cell frequencies equal ``h*`` exactly."""
        return cls(pop.frame, pop.h * n)

    def pairs(self) -> np.ndarray:
        """Expand integer cell counts into an ``(n, 2)`` array of ``(x, y)`` rows."""
        if not np.allclose(self.counts, np.round(self.counts)):
            raise ValueError("weighted sample with fractional counts cannot be expanded")
        ix, iy = np.nonzero(self.counts)
        reps = np.round(self.counts[ix, iy]).astype(np.int64)
        xs = np.repeat(ix + self.frame.x_lo, reps)
        ys = np.repeat(iy + self.frame.y_lo, reps)
        return np.column_stack([xs, ys])


@dataclass(frozen=True)
class EmpiricalCounts:
    """Empirical frequencies of a sample (all divided by ``n``).

    Shares attribute names with :class:`TruncatedPopulation` so covariance
    routines accept either.
    """

    frame: SupportFrame
    n: float
    f_star: np.ndarray
    g_star: np.ndarray
    C: np.ndarray
    c_next: np.ndarray
    c_prev: np.ndarray
    brackets: np.ndarray

    @property
    def lam(self) -> np.ndarray:
        return _ratio(self.f_star, self.C)

    @property
    def beta(self) -> np.ndarray:
        return _ratio(self.g_star, self.C[: self.frame.n_y])

    def c_matrix(self) -> np.ndarray:
        k = np.arange(self.frame.n_x)
        return self.brackets[np.maximum.outer(k, k), np.minimum.outer(k, k)]


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.full(num.shape, np.nan)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def empirical_counts(sample: PairSample) -> EmpiricalCounts:
    fr = sample.frame
    n = sample.n
    if n <= 0:
        raise ValueError("empty sample")
    cells = sample.counts
    T = bracket_table(cells, fr)
    k = np.arange(fr.n_x)
    C = T[k, k]
    c_next = T[k + 1, k]
    ky = np.arange(fr.n_y)
    c_prev = np.where(ky > 0, T[ky, np.maximum(ky - 1, 0)], 0.0)
    c_prev[0] = 0.0
    return EmpiricalCounts(
        frame=fr,
        n=n,
        f_star=cells.sum(axis=1) / n,
        g_star=cells.sum(axis=0) / n,
        C=C / n,
        c_next=c_next / n,
        c_prev=c_prev / n,
        brackets=T / n,
    )


def _as_counts(source) -> EmpiricalCounts:
    if isinstance(source, EmpiricalCounts):
        return source
    if isinstance(source, PairSample):
        return empirical_counts(source)
    raise TypeError(f"expected a PairSample or EmpiricalCounts, got {type(source).__name__}")


def lambda_hat(sample) -> np.ndarray:
    """Hazard estimates over the lifetime support; NaN where no pair brackets the point."""
    ec = _as_counts(sample)
    return ec.lam


def beta_hat(sample) -> np.ndarray:
    """Reverse-hazard estimates over the truncation support; NaN where undefined."""
    ec = _as_counts(sample)
    return ec.beta


def _product(factors: np.ndarray, points: np.ndarray, what: str, skip_gaps: bool) -> np.ndarray:
    undefined = np.isnan(factors)
    if undefined.any():
        if not skip_gaps:
            raise UndefinedEstimateError(what, points[undefined].tolist())
        factors = np.where(undefined, 1.0, factors)
    return np.cumprod(factors)


def survival_hat(sample, skip_gaps: bool = False) -> np.ndarray:
    """Product-limit estimate of ``Pr(X > x)`` over the lifetime support."""
    ec = _as_counts(sample)
    return _product(1.0 - ec.lam, ec.frame.x_support, "lambda_hat", skip_gaps)


def cdf_F_hat(sample, skip_gaps: bool = False) -> np.ndarray:
    return 1.0 - survival_hat(sample, skip_gaps)


def cdf_G_hat(sample, skip_gaps: bool = False) -> np.ndarray:
    """Estimate of ``Pr(Y <= y)``: product of ``1 - beta_hat(k)`` over ``k > y``."""
    ec = _as_counts(sample)
    factors = (1.0 - ec.beta)[::-1]
    prod = _product(factors, ec.frame.y_support[::-1], "beta_hat", skip_gaps)
    # shift so that the top point gets the empty product
    return np.concatenate((prod[::-1][1:], [1.0]))


def pmf_hat_from_hazard(lam: np.ndarray) -> np.ndarray:
    """``f_hat(u) = lam(u) prod_{k<u} (1 - lam(k))``."""
    lam = np.asarray(lam, dtype=float)
    surv = np.concatenate(([1.0], np.cumprod(1.0 - lam)[:-1]))
    return lam * surv
