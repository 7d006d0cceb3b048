import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trunclife.special import (
    chi_square_cdf,
    chi_square_logsf,
    chi_square_quantile,
    chi_square_sf,
    normal_cdf,
    normal_quantile,
    two_sided_z,
)

mpmath.mp.dps = 40


def mp_cdf(x, k):
    return mpmath.gammainc(mpmath.mpf(k) / 2, 0, mpmath.mpf(x) / 2, regularized=True)


def mp_quantile(p, k):
    """Bisection on the high-precision cdf; independent of the package's Newton solver."""
    lo, hi = mpmath.mpf(0), mpmath.mpf(max(10, 10 * k))
    while mp_cdf(hi, k) < p:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if mp_cdf(mid, k) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class TestChiSquare:
    def test_cdf_at_zero(self):
        for k in (1, 2, 18):
            assert chi_square_cdf(0.0, k) == 0.0

    def test_known_quantiles(self):
        assert chi_square_quantile(0.95, 1) == pytest.approx(3.841459, abs=1e-6)
        assert chi_square_quantile(0.95, 18) == pytest.approx(28.8693, abs=1e-4)

    def test_tiny_upper_tail(self):
        assert chi_square_cdf(1530.6, 18) == 1.0
        assert chi_square_sf(1530.6, 18) < 1e-200
        expected = float(mpmath.log(mpmath.gammainc(9, 1530.6 / 2, mpmath.inf, regularized=True)))
        assert chi_square_logsf(1530.6, 18) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("k", [1, 2, 3, 9, 18, 50, 200])
    @pytest.mark.parametrize("x", [1e-6, 0.1, 1.0, 5.0, 17.3, 40.0, 300.0])
    def test_cdf_against_mpmath(self, x, k):
        assert chi_square_cdf(x, k) == pytest.approx(float(mp_cdf(x, k)), abs=1e-12)

    @pytest.mark.parametrize("k", [1, 4, 18, 100])
    @pytest.mark.parametrize("p", [1e-6, 0.025, 0.5, 0.95, 0.999999])
    def test_quantile_against_mpmath(self, p, k):
        assert chi_square_quantile(p, k) == pytest.approx(float(mp_quantile(p, k)), rel=1e-9)

    def test_domain(self):
        with pytest.raises(ValueError):
            chi_square_cdf(1.0, 0)
        with pytest.raises(ValueError):
            chi_square_quantile(1.0, 3)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 500.0), st.integers(1, 60))
def test_cdf_monotone(x, k):
    assert chi_square_cdf(x, k) <= chi_square_cdf(x + 0.5, k) + 1e-15


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-8, 1 - 1e-8), st.integers(1, 60))
def test_quantile_inverts_cdf(p, k):
    assert chi_square_cdf(chi_square_quantile(p, k), k) == pytest.approx(p, abs=1e-8)


class TestNormal:
    @pytest.mark.parametrize("p", [1e-10, 1e-4, 0.025, 0.3, 0.5, 0.8, 0.975, 1 - 1e-9])
    def test_quantile_against_mpmath(self, p):
        expected = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))
        assert normal_quantile(p) == pytest.approx(expected, abs=1e-9)

    def test_cdf_round_trip(self):
        # the upper tail loses digits in 1 - p, so stay where the round trip is well conditioned
        for z in np.linspace(-8, 4, 25):
            assert normal_quantile(normal_cdf(z)) == pytest.approx(z, abs=1e-9)

    def test_two_sided(self):
        assert two_sided_z(0.95) == pytest.approx(1.959963984540054, abs=1e-12)
        assert math.isclose(two_sided_z(0.90), normal_quantile(0.95), abs_tol=1e-15)
