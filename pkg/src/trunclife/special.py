"""Normal and chi-square distribution functions.

The regularized incomplete gamma is evaluated with the usual split: a power
series for ``x < a + 1`` and a modified Lentz continued fraction for the upper
tail otherwise, so tiny tail probabilities keep full relative accuracy.
"""

from __future__ import annotations

import math

_EPS = 1e-16
_MAX_ITER = 10_000
_TINY = 1e-300


def _gamma_series_log(a: float, x: float) -> float:
    """log P(a, x) from the power series; valid for x < a + 1."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma series failed to converge (a={a}, x={x})")
    return math.log(total) - x + a * math.log(x) - math.lgamma(a)


def _gamma_cf_log(a: float, x: float) -> float:
    """log Q(a, x) from the continued fraction; valid for x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma fraction failed to converge (a={a}, x={x})")
    return math.log(h) - x + a * math.log(x) - math.lgamma(a)


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return math.exp(_gamma_series_log(a, x))
    return -math.expm1(_gamma_cf_log(a, x))


def gammainc_upper_log(a: float, x: float) -> float:
    """log of the regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return -math.inf
    if x < a + 1.0:
        return math.log1p(-math.exp(_gamma_series_log(a, x)))
    return _gamma_cf_log(a, x)


def _check_dof(dof: float):
    if not dof > 0:
        raise ValueError(f"degrees of freedom must be positive, got {dof}")


def chi_square_cdf(x: float, dof: float) -> float:
    _check_dof(dof)
    if x <= 0:
        return 0.0
    return gammainc_lower(dof / 2.0, x / 2.0)


def chi_square_logsf(x: float, dof: float) -> float:
    _check_dof(dof)
    if x <= 0:
        return 0.0
    return gammainc_upper_log(dof / 2.0, x / 2.0)


def chi_square_logcdf(x: float, dof: float) -> float:
    _check_dof(dof)
    if x <= 0:
        return -math.inf
    a, h = dof / 2.0, x / 2.0
    if h < a + 1.0:
        return _gamma_series_log(a, h)
    return math.log1p(-math.exp(_gamma_cf_log(a, h)))


def chi_square_sf(x: float, dof: float) -> float:
    """Upper tail ``Pr(chi2_dof > x)``; underflows to 0 only below ~1e-308."""
    return math.exp(chi_square_logsf(x, dof))


def _chi_square_logpdf(x: float, dof: float) -> float:
    k = dof / 2.0
    return (k - 1) * math.log(x) - x / 2.0 - k * math.log(2.0) - math.lgamma(k)


def chi_square_pdf(x: float, dof: float) -> float:
    _check_dof(dof)
    if x < 0:
        return 0.0
    k = dof / 2.0
    if x == 0:
        return 0.5 if k == 1 else (math.inf if k < 1 else 0.0)
    return math.exp(_chi_square_logpdf(x, dof))


def chi_square_quantile(p: float, dof: float) -> float:
    """Inverse of :func:`chi_square_cdf`.

    Newton steps on the log of whichever tail is smaller, safeguarded by
    bisection, so extreme probabilities keep full relative accuracy.
    """
    _check_dof(dof)
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    k = dof / 2.0
    lower = p < 0.5
    if lower:
        target = math.log(p)
        # P(k, x/2) ~ (x/2)^k / Gamma(k + 1) near zero
        small = 2.0 * math.exp((target + math.lgamma(k + 1.0)) / k)
    else:
        target = math.log1p(-p)
        small = 0.0
    z = normal_quantile(p)
    h = 2.0 / (9.0 * dof)
    wh = dof * max(1.0 - h + z * math.sqrt(h), 0.0) ** 3
    x = min(small, wh) if lower and small > 0 and wh > 0 else (wh or small)
    if x <= 0 or not math.isfinite(x):
        return 0.0

    def g(x):
        # increasing in x; zero at the quantile
        return chi_square_logcdf(x, dof) - target if lower else target - chi_square_logsf(x, dof)

    def slope(x):
        tail = chi_square_logcdf(x, dof) if lower else chi_square_logsf(x, dof)
        return math.exp(_chi_square_logpdf(x, dof) - tail)

    lo, hi = 0.0, max(2.0 * x, dof + 10.0 * math.sqrt(2.0 * dof) + 10.0)
    while g(hi) < 0:
        hi *= 2.0
    for _ in range(400):
        err = g(x)
        if err > 0:
            hi = x
        else:
            lo = x
        d = slope(x)
        candidate = x - err / d if d > 0 else math.nan
        if err == 0 or abs(candidate - x) <= 4e-16 * x:
            return x
        if not lo < candidate < hi:
            candidate = math.sqrt(lo * hi) if lo > 0 else hi / 16.0
        x = candidate
    return x


# Acklam's rational approximation; refined below with a Halley step
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    """Standard normal quantile, accurate to roughly 1e-15."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= 1 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    for _ in range(2):
        # compare in the smaller tail to avoid cancellation
        if x < 0:
            e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
        else:
            e = (1.0 - p) - 0.5 * math.erfc(x / math.sqrt(2.0))
        u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
        x = x - u / (1.0 + x * u / 2.0)
    return x


def two_sided_z(level: float) -> float:
    """Critical value ``z`` with ``Pr(|Z| <= z) = level``."""
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return normal_quantile(0.5 + level / 2.0)
