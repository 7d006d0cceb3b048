"""Conditional log-likelihood of observed pairs and its maximizer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import PairSample, empirical_counts
from .population import (
    SupportFrame,
    pmf_from_hazard,
    pmf_from_reverse_hazard,
    truncation_probability,
)


class PositivityError(ValueError):
    """Some support point has no observations, so the closed-form maximizer does not apply."""

    def __init__(self, empty_x, empty_y):
        self.empty_x = list(empty_x)
        self.empty_y = list(empty_y)
        super().__init__(
            f"every support point needs at least one observation; "
            f"empty lifetime points {self.empty_x}, empty truncation points {self.empty_y}"
        )


@dataclass(frozen=True)
class ParameterPoint:
    """Lifetime and truncation mass vectors on a frame.

    Boundary points (zero entries) are representable so that the likelihood
    can report ``-inf`` there.
    """

    frame: SupportFrame
    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if f.shape != (self.frame.n_x,) or g.shape != (self.frame.n_y,):
            raise ValueError("f and g must match the frame's supports")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def interior(self) -> bool:
        return bool(np.all(self.f > 0) and np.all(self.g > 0)
                    and np.all(self.f < 1) and np.all(self.g < 1))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.f, self.g])


def _cell_frequencies(sample: PairSample) -> np.ndarray:
    if sample.n <= 0:
        raise ValueError("empty sample")
    return sample.counts / sample.n


def log_likelihood(theta: ParameterPoint, sample: PairSample) -> float:
    """Per-observation conditional log-likelihood.

    ``-log alpha + sum_{(u,v)} h_hat(u,v) [log f(u) + log g(v)]``, where
    ``h_hat`` are the empirical cell frequencies.  Any zero parameter gives
    ``-inf``.
    """
    if theta.frame != sample.frame:
        raise ValueError("parameter and sample frames differ")
    if np.any(theta.f <= 0) or np.any(theta.g <= 0):
        return -np.inf
    h_hat = _cell_frequencies(sample)
    alpha = truncation_probability(theta.f, theta.g, theta.frame)
    return float(
        -np.log(alpha)
        + h_hat.sum(axis=1) @ np.log(theta.f)
        + h_hat.sum(axis=0) @ np.log(theta.g)
    )


def score(theta: ParameterPoint, sample: PairSample) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of :func:`log_likelihood` with respect to ``f`` and ``g``."""
    h_hat = _cell_frequencies(sample)
    mask = theta.frame.trapezoid_mask()
    alpha = truncation_probability(theta.f, theta.g, theta.frame)
    d_alpha_f = mask @ theta.g
    d_alpha_g = theta.f @ mask
    grad_f = h_hat.sum(axis=1) / theta.f - d_alpha_f / alpha
    grad_g = h_hat.sum(axis=0) / theta.g - d_alpha_g / alpha
    return grad_f, grad_g


def mle_from_sample(sample: PairSample) -> ParameterPoint:
    """Closed-form maximizer built from the hazard and reverse-hazard estimates."""
    ec = empirical_counts(sample)
    fr = ec.frame
    empty_x = fr.x_support[ec.f_star <= 0]
    empty_y = fr.y_support[ec.g_star <= 0]
    if empty_x.size or empty_y.size:
        raise PositivityError(empty_x.tolist(), empty_y.tolist())
    return ParameterPoint(fr, pmf_from_hazard(ec.lam), pmf_from_reverse_hazard(ec.beta))
