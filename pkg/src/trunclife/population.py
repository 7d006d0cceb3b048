"""Exact population quantities for a discrete lifetime under random left-truncation.

A lifetime ``X`` lives on ``{delta+1, ..., omega}`` and an independent
truncation time ``Y`` on ``{delta+1, ..., delta+m}``.  Only pairs with
``Y <= X`` are observed, so the observable law is the pmf ``h*`` over the
trapezoid of integer pairs ``(u, v)`` with ``v <= u``.  Everything here is
computed by direct enumeration of that trapezoid and serves as ground truth
for the estimators and the simulation harness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

PMF_TOL = 1e-12


class SupportError(ValueError):
    """Raised when a support point or support range is inconsistent."""


@dataclass(frozen=True)
class SupportFrame:
    """Integer geometry of the observable trapezoid.

    Parameters
    ----------
    delta : int
        Minimum-age offset; both supports start at ``delta + 1``.
    m : int
        Number of truncation support points.
    omega : int
        Largest lifetime.
    """

    delta: int
    m: int
    omega: int

    def __post_init__(self):
        if self.delta < 0:
            raise SupportError(f"delta must be >= 0, got {self.delta}")
        if self.m < 1:
            raise SupportError(f"m must be >= 1, got {self.m}")
        if self.delta + self.m > self.omega:
            raise SupportError(
                f"need delta + m <= omega, got {self.delta} + {self.m} > {self.omega}"
            )

    @classmethod
    def from_ranges(cls, x_lo: int, x_hi: int, y_lo: int, y_hi: int) -> "SupportFrame":
        if x_lo != y_lo:
            raise SupportError(
                f"lifetime and truncation supports must share their first point "
                f"(got {x_lo} and {y_lo})"
            )
        return cls(delta=x_lo - 1, m=y_hi - y_lo + 1, omega=x_hi)

    @property
    def x_lo(self) -> int:
        return self.delta + 1

    @property
    def x_hi(self) -> int:
        return self.omega

    @property
    def y_lo(self) -> int:
        return self.delta + 1

    @property
    def y_hi(self) -> int:
        return self.delta + self.m

    @property
    def n_x(self) -> int:
        return self.omega - self.delta

    @property
    def n_y(self) -> int:
        return self.m

    @property
    def x_support(self) -> np.ndarray:
        return np.arange(self.x_lo, self.x_hi + 1)

    @property
    def y_support(self) -> np.ndarray:
        return np.arange(self.y_lo, self.y_hi + 1)

    def trapezoid_mask(self) -> np.ndarray:
        """Boolean ``(n_x, n_y)`` array, True where ``y <= x``."""
        return self.y_support[None, :] <= self.x_support[:, None]

    def x_index(self, x: int) -> int:
        if not self.x_lo <= x <= self.x_hi:
            raise SupportError(f"lifetime point {x} outside {{{self.x_lo}..{self.x_hi}}}")
        return x - self.x_lo

    def y_index(self, y: int) -> int:
        if not self.y_lo <= y <= self.y_hi:
            raise SupportError(f"truncation point {y} outside {{{self.y_lo}..{self.y_hi}}}")
        return y - self.y_lo

    def to_dict(self) -> dict:
        return {"delta": self.delta, "m": self.m, "omega": self.omega}


@dataclass(frozen=True)
class DiscretePmf:
    """Probability mass vector over the consecutive integers ``lo, lo+1, ...``."""

    lo: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).copy()
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a nonempty 1-d vector")
        if np.any(~np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probs must be finite and nonnegative")
        if abs(p.sum() - 1.0) > PMF_TOL:
            raise ValueError(f"probs sum to {p.sum()!r}, not 1 (tolerance {PMF_TOL})")
        if p[0] <= 0 or p[-1] <= 0:
            raise ValueError("first and last support points must carry positive mass")
        p.setflags(write=False)
        object.__setattr__(self, "lo", int(self.lo))
        object.__setattr__(self, "probs", p)

    @classmethod
    def normalized(cls, lo: int, weights) -> "DiscretePmf":
        """Build a pmf from nonnegative weights, renormalizing explicitly."""
        w = np.asarray(weights, dtype=float)
        return cls(lo, w / w.sum())

    @property
    def hi(self) -> int:
        return self.lo + self.probs.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def __call__(self, u: int) -> float:
        if self.lo <= u <= self.hi:
            return float(self.probs[u - self.lo])
        return 0.0

    def to_dict(self) -> dict:
        return {"lo": self.lo, "probs": self.probs.tolist()}

    def __eq__(self, other):
        if not isinstance(other, DiscretePmf):
            return NotImplemented
        return self.lo == other.lo and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.lo, self.probs.tobytes()))


def truncated_geometric(p: float, lo: int = 1, hi: int = 24) -> DiscretePmf:
    """Geometric pmf ``p (1-p)^(x-lo)`` on ``{lo..hi}`` with the tail lumped at ``hi``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if hi < lo:
        raise ValueError("hi must be >= lo")
    k = np.arange(hi - lo + 1)
    probs = p * (1 - p) ** k
    probs[-1] = (1 - p) ** (hi - lo)
    return DiscretePmf(lo, probs)


def discrete_uniform(lo: int, hi: int) -> DiscretePmf:
    if hi < lo:
        raise ValueError("hi must be >= lo")
    size = hi - lo + 1
    return DiscretePmf(lo, np.full(size, 1.0 / size))


NAMED_PMFS = {
    "truncated-geometric": truncated_geometric,
    "discrete-uniform": discrete_uniform,
}


def pmf_from_spec(spec: Any) -> DiscretePmf:
    """Resolve a pmf from a JSON-like spec.

    Accepted forms are ``{"lo": int, "probs": [...]}``, a named built-in
    ``{"name": "truncated-geometric", "p": 0.2, "lo": 1, "hi": 24}``, a path
    to a JSON file holding either, or a compact string such as
    ``"discrete-uniform:lo=1,hi=10"``.
    """
    if isinstance(spec, DiscretePmf):
        return spec
    if isinstance(spec, (str, Path)):
        text = str(spec)
        name, _, params = text.partition(":")
        if name in NAMED_PMFS:
            kwargs = {}
            for item in filter(None, params.split(",")):
                key, _, value = item.partition("=")
                kwargs[key.strip()] = float(value) if key.strip() == "p" else int(value)
            return NAMED_PMFS[name](**kwargs)
        return pmf_from_spec(json.loads(Path(text).read_text()))
    if isinstance(spec, Mapping):
        if "probs" in spec:
            return DiscretePmf(int(spec["lo"]), spec["probs"])
        if "name" in spec:
            params = {k: v for k, v in spec.items() if k != "name"}
            try:
                builder = NAMED_PMFS[spec["name"]]
            except KeyError:
                raise ValueError(f"unknown pmf name {spec['name']!r}") from None
            return builder(**params)
    raise ValueError(f"cannot interpret pmf spec {spec!r}")


def recover_identifiable(f: DiscretePmf, floor: int) -> DiscretePmf:
    """Condition a lifetime pmf on ``X >= floor``.

    This is the largest part of the lifetime law that truncated data can
    reveal. Trailing support points are kept even if they carry zero mass
    after conditioning, which cannot happen for a valid input pmf.
    """
    if floor <= f.lo:
        return f
    if floor > f.hi:
        raise SupportError(f"all mass lies below the floor {floor}")
    kept = f.probs[floor - f.lo:]
    total = kept.sum()
    if total <= 0:
        raise SupportError(f"all mass lies below the floor {floor}")
    first = int(np.flatnonzero(kept > 0)[0])
    return DiscretePmf(floor + first, kept[first:] / total)


def frame_for(f: DiscretePmf, g: DiscretePmf) -> SupportFrame:
    """Infer the frame implied by a lifetime pmf and a truncation pmf."""
    if g.hi > f.hi:
        raise SupportError(
            f"truncation support reaches {g.hi} beyond the largest lifetime {f.hi}"
        )
    return SupportFrame.from_ranges(f.lo, f.hi, g.lo, g.hi)


class TruncatedPopulation:
    """Population law of observed pairs, with every derived table cached.

    Arrays over the lifetime support are indexed by ``x - frame.x_lo``;
    arrays over the truncation support by ``y - frame.y_lo``.

    Attributes
    ----------
    alpha : float
        ``Pr(Y <= X)``.
    h : ndarray, shape (n_x, n_y)
        Observable pmf; zero off the trapezoid.
    f_star, g_star : ndarray
        Marginals of ``h``.
    C : ndarray
        ``Pr(Y_i <= x <= X_i)`` over the lifetime support.
    lam, beta : ndarray
        Hazard of ``X`` and reverse hazard of ``Y``.
    S, G : ndarray
        ``Pr(X > x)`` and ``Pr(Y <= y)``.
    c_next : ndarray
        ``c(x, x+1)`` over the lifetime support; zero at omega.
    c_prev : ndarray
        ``c(y-1, y)`` over the truncation support; zero at delta+1.
    """

    def __init__(self, f: DiscretePmf, g: DiscretePmf, frame: SupportFrame | None = None):
        implied = frame_for(f, g)
        if frame is not None and frame != implied:
            raise SupportError(f"pmfs imply {implied}, not {frame}")
        self.frame = implied
        self.f = f
        self.g = g
        fr = self.frame

        fv = f.probs
        gv = g.probs
        # Pr(X >= x), Pr(Y <= y)
        self._x_tail = np.cumsum(fv[::-1])[::-1]
        self._y_cdf = np.cumsum(gv)

        mask = fr.trapezoid_mask()
        joint = np.outer(fv, gv) * mask
        alpha = float(joint.sum())
        if alpha <= 0:
            raise SupportError("Pr(Y <= X) is zero; nothing is observable")
        self.alpha = alpha
        self.h = joint / alpha

        self.f_star = self.h.sum(axis=1)
        self.g_star = self.h.sum(axis=0)

        # C(x) = sum_{v <= x <= u} h(u, v), accumulated from the trapezoid
        xs, ys = fr.x_support, fr.y_support
        C = np.empty(fr.n_x)
        for i, x in enumerate(xs):
            C[i] = self.h[i:, ys <= x].sum()
        self.C = C
        self.c_next = C - self.f_star
        self.c_next[-1] = 0.0
        self.c_prev = C[: fr.n_y] - self.g_star
        self.c_prev[0] = 0.0

        self.lam = fv / self._x_tail
        self.lam[-1] = 1.0
        self.beta = gv / self._y_cdf
        self.beta[0] = 1.0
        self.S = np.append(self._x_tail[1:], 0.0)
        self.G = self._y_cdf.copy()
        self.G[-1] = 1.0

        for arr in (self.h, self.f_star, self.g_star, self.C, self.c_next,
                    self.c_prev, self.lam, self.beta, self.S, self.G):
            arr.setflags(write=False)

    def __repr__(self):
        return f"TruncatedPopulation(frame={self.frame}, alpha={self.alpha:.6g})"

    @property
    def n(self) -> float:
        # lets a population stand in for an infinitely large weighted sample
        return math.inf

    def h_star(self, u: int, v: int) -> float:
        fr = self.frame
        if not (fr.x_lo <= u <= fr.x_hi and fr.y_lo <= v <= fr.y_hi) or v > u:
            return 0.0
        return float(self.h[u - fr.x_lo, v - fr.y_lo])

    def _x_ge(self, x: int) -> float:
        fr = self.frame
        if x <= fr.x_lo:
            return 1.0
        if x > fr.x_hi:
            return 0.0
        return float(self._x_tail[x - fr.x_lo])

    def _y_le(self, y: int) -> float:
        fr = self.frame
        if y < fr.y_lo:
            return 0.0
        if y >= fr.y_hi:
            return 1.0
        return float(self._y_cdf[y - fr.y_lo])

    def _check_pair(self, u: int, v: int):
        fr = self.frame
        for z in (u, v):
            if not fr.x_lo <= z <= fr.x_hi + 1:
                raise SupportError(f"point {z} outside {{{fr.x_lo}..{fr.x_hi + 1}}}")

    def c_pair(self, u: int, v: int) -> float:
        """``Pr(Y_i <= min(u,v), X_i >= max(u,v))``; ``omega + 1`` is allowed and gives 0."""
        self._check_pair(u, v)
        return self._y_le(min(u, v)) * self._x_ge(max(u, v)) / self.alpha

    def r_pair(self, u: int, v: int) -> float:
        """``Pr(X_i = max(u,v), Y_i <= min(u,v))``."""
        self._check_pair(u, v)
        return self.f(max(u, v)) * self._y_le(min(u, v)) / self.alpha

    def s_pair(self, u: int, v: int) -> float:
        """``Pr(Y_i = min(u,v), X_i >= max(u,v))``."""
        self._check_pair(u, v)
        return self.g(min(u, v)) * self._x_ge(max(u, v)) / self.alpha

    def c_matrix(self) -> np.ndarray:
        """``c(k', k)`` over the lifetime support, as an ``(n_x, n_x)`` array."""
        xs = self.frame.x_support
        lo = np.minimum.outer(xs, xs)
        hi = np.maximum.outer(xs, xs)
        y_le = np.array([self._y_le(int(z)) for z in xs])
        x_ge = np.array([self._x_ge(int(z)) for z in xs])
        return y_le[lo - xs[0]] * x_ge[hi - xs[0]] / self.alpha


def build_population(f: DiscretePmf, g: DiscretePmf) -> TruncatedPopulation:
    return TruncatedPopulation(f, g)


def hazard(pop: TruncatedPopulation, x: int) -> float:
    return float(pop.lam[pop.frame.x_index(x)])


def reverse_hazard(pop: TruncatedPopulation, y: int) -> float:
    return float(pop.beta[pop.frame.y_index(y)])


def _check_rates(rates, name: str) -> np.ndarray:
    r = np.asarray(rates, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError(f"{name} must be a nonempty vector")
    if np.any(~(r >= 0)) or np.any(r > 1):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return r


def survival_from_hazard(lam, x: int, lo: int = 1) -> float:
    """``Pr(X > x)`` as the product of ``1 - lam(k)`` for ``lo <= k <= x``.

    ``lam[0]`` is the hazard at ``lo``.  Points below the support give 1.
    """
    r = _check_rates(lam, "lam")
    if x > lo + r.size - 1:
        raise SupportError(f"{x} beyond the last support point {lo + r.size - 1}")
    if x < lo:
        return 1.0
    return float(np.prod(1.0 - r[: x - lo + 1]))


def cdf_from_reverse_hazard(beta, y: int, lo: int = 1) -> float:
    """``Pr(Y <= y)`` as the product of ``1 - beta(k)`` for ``y < k <= hi``."""
    r = _check_rates(beta, "beta")
    hi = lo + r.size - 1
    if y < lo:
        raise SupportError(f"{y} below the first support point {lo}")
    if y >= hi:
        return 1.0
    return float(np.prod(1.0 - r[y - lo + 1:]))


def pmf_from_hazard(lam) -> np.ndarray:
    """``f(u) = lam(u) * prod_{k<u} (1 - lam(k))``."""
    r = np.asarray(lam, dtype=float)
    surv = np.concatenate(([1.0], np.cumprod(1.0 - r)[:-1]))
    return r * surv


def hazard_from_pmf(f) -> np.ndarray:
    """``lam(u) = f(u) / (1 - sum_{k<u} f(k))``."""
    p = np.asarray(f, dtype=float)
    below = np.concatenate(([0.0], np.cumsum(p)[:-1]))
    with np.errstate(divide="ignore", invalid="ignore"):
        return p / (1.0 - below)


def pmf_from_reverse_hazard(beta) -> np.ndarray:
    """``g(v) = beta(v) * prod_{k>v} (1 - beta(k))``."""
    r = np.asarray(beta, dtype=float)
    above = np.concatenate((np.cumprod((1.0 - r)[::-1])[::-1][1:], [1.0]))
    return r * above


def reverse_hazard_from_pmf(g) -> np.ndarray:
    """``beta(v) = g(v) / (1 - sum_{k>v} g(k))``."""
    p = np.asarray(g, dtype=float)
    above = np.concatenate((np.cumsum(p[::-1])[::-1][1:], [0.0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        return p / (1.0 - above)


def population_tables(pop: TruncatedPopulation) -> dict:
    """Plain-data dump of the cached tables (used by the ``oracle`` command)."""
    fr = pop.frame
    return {
        "frame": fr.to_dict(),
        "alpha": pop.alpha,
        "lifetime": {
            "x": fr.x_support.tolist(),
            "f": pop.f.probs.tolist(),
            "f_star": pop.f_star.tolist(),
            "C": pop.C.tolist(),
            "c_next": pop.c_next.tolist(),
            "lambda": pop.lam.tolist(),
            "S": pop.S.tolist(),
        },
        "truncation": {
            "y": fr.y_support.tolist(),
            "g": pop.g.probs.tolist(),
            "g_star": pop.g_star.tolist(),
            "C": pop.C[: fr.n_y].tolist(),
            "c_prev": pop.c_prev.tolist(),
            "beta": pop.beta.tolist(),
            "G": pop.G.tolist(),
        },
    }


def truncation_probability(f, g, frame: SupportFrame) -> float:
    """``Pr(Y <= X) = sum_{v <= u} f(u) g(v)`` for raw mass vectors on ``frame``."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    return float((np.outer(f, g) * frame.trapezoid_mask()).sum())
