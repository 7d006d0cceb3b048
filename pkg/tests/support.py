"""Shared oracles and reference values for the test suite."""

from pathlib import Path

import numpy as np
from hypothesis import strategies as st

from trunclife.population import DiscretePmf

FIXTURES = Path(__file__).parent / "fixtures"
MBALT_RECORDS = FIXTURES / "mbalt_records.csv"


class Enumeration:
    """Brute-force population quantities by looping over every (u, v) pair.

    Deliberately naive: no cumulative sums, no closed forms.
    """

    def __init__(self, f_lo, f, g_lo, g):
        self.xs = list(range(f_lo, f_lo + len(f)))
        self.ys = list(range(g_lo, g_lo + len(g)))
        self.f = dict(zip(self.xs, f))
        self.g = dict(zip(self.ys, g))
        self.alpha = sum(self.f[u] * self.g[v] for u in self.xs for v in self.ys if v <= u)

    def h(self, u, v):
        if v > u or u not in self.f or v not in self.g:
            return 0.0
        return self.f[u] * self.g[v] / self.alpha

    def _sum(self, pred):
        return sum(self.h(u, v) for u in self.xs for v in self.ys if pred(u, v))

    def f_star(self, x):
        return self._sum(lambda u, v: u == x)

    def g_star(self, y):
        return self._sum(lambda u, v: v == y)

    def C(self, x):
        return self._sum(lambda u, v: v <= x <= u)

    def c(self, a, b):
        lo, hi = min(a, b), max(a, b)
        return self._sum(lambda u, v: v <= lo and u >= hi)

    def r(self, a, b):
        lo, hi = min(a, b), max(a, b)
        return self._sum(lambda u, v: u == hi and v <= lo)

    def s(self, a, b):
        lo, hi = min(a, b), max(a, b)
        return self._sum(lambda u, v: v == lo and u >= hi)


def random_pmf(rng, size, floor=0.02):
    w = rng.random(size) + floor
    return w / w.sum()


def project_to_simplex(v, floor=1e-12):
    """Euclidean projection onto {w >= floor, sum w = 1} (sort-based)."""
    shifted = v - floor
    target = 1.0 - floor * v.size
    u = np.sort(shifted)[::-1]
    css = np.cumsum(u) - target
    rho = np.nonzero(u - css / np.arange(1, v.size + 1) > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(shifted - theta, 0.0) + floor


def projected_ascent(sample, step=2e-3, tol=1e-9, max_iter=2_000_000):
    """Maximize the truncated log-likelihood by fixed-step projected gradient ascent.

    Gradient written out from scratch: alpha = sum_{v <= u} f_u g_v.
    """
    fr = sample.frame
    h = sample.counts / sample.counts.sum()
    fs, gs = h.sum(axis=1), h.sum(axis=0)
    xs, ys = fr.x_support, fr.y_support
    f = np.full(fr.n_x, 1.0 / fr.n_x)
    g = np.full(fr.n_y, 1.0 / fr.n_y)
    for _ in range(max_iter):
        alpha = sum(f[i] * g[j] for i, u in enumerate(xs) for j, v in enumerate(ys) if v <= u)
        da_df = np.array([sum(g[j] for j, v in enumerate(ys) if v <= u) for u in xs])
        da_dg = np.array([sum(f[i] for i, u in enumerate(xs) if v <= u) for v in ys])
        f_new = project_to_simplex(f + step * (fs / f - da_df / alpha))
        g_new = project_to_simplex(g + step * (gs / g - da_dg / alpha))
        moved = max(np.abs(f_new - f).max(), np.abs(g_new - g).max())
        f, g = f_new, g_new
        if moved < tol:
            break
    return f, g


def random_pair(rng, max_delta=3, max_m=5, max_extra=4):
    """A random (f, g) on a small frame; plain-numpy twin of ``pmf_pairs``."""
    delta = int(rng.integers(0, max_delta + 1))
    m = int(rng.integers(1, max_m + 1))
    omega = delta + m + int(rng.integers(0, max_extra + 1))
    return DiscretePmf(delta + 1, random_pmf(rng, omega - delta)), DiscretePmf(delta + 1, random_pmf(rng, m))


@st.composite
def pmf_pairs(draw):
    delta = draw(st.integers(0, 3))
    m = draw(st.integers(1, 5))
    omega = delta + m + draw(st.integers(0, 4))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return DiscretePmf(delta + 1, random_pmf(rng, omega - delta)), DiscretePmf(delta + 1, random_pmf(rng, m))


# Reference 95% coverage (percent) at n = 10,000: lambda at x = 1..23, beta at y = 2..10.
TABLE1_LAMBDA_CP = [95.6, 94.9, 95.8, 93.9, 95.8, 95.8, 95.4, 95.2, 93.0, 93.3, 93.8, 95.1,
                    96.2, 94.6, 95.7, 94.4, 95.1, 94.8, 94.8, 95.8, 95.0, 94.7, 94.8]
TABLE1_BETA_CP = [96.0, 95.5, 95.7, 94.2, 95.5, 94.8, 95.1, 96.2, 95.4]


# Integer counts behind the reference MBALT estimate table.
MBALT_Y_COUNTS = {4: 49, 5: 36, 6: 42, 7: 29, 8: 26, 9: 20, 10: 34, 11: 21, 12: 27, 13: 37,
                  14: 46, 15: 60, 16: 93, 17: 71, 18: 75, 19: 84, 20: 69, 21: 46, 22: 1}
MBALT_X_COUNTS = dict(zip(range(4, 38), [0, 0, 0, 0, 1, 0, 0, 1, 2, 1, 2, 3, 7, 7, 12, 19, 35, 50,
                                         59, 68, 115, 344, 35, 35, 17, 13, 8, 16, 5, 6, 2, 2, 0, 1]))

# Reference rows (three decimals): age -> (f_star, lambda, se) and age -> (g_star, beta, se); None = NA.
TABLE2_LIFETIME = {
    4: (0, 0, 0), 5: (0, 0, 0), 6: (0, 0, 0), 7: (0, 0, 0), 8: (0.001, 0.005, 0.161),
    9: (0, 0, 0), 10: (0, 0, 0), 11: (0.001, 0.004, 0.115), 12: (0.002, 0.007, 0.147),
    13: (0.001, 0.003, 0.093), 14: (0.002, 0.006, 0.115), 15: (0.003, 0.007, 0.121),
    16: (0.008, 0.014, 0.152), 17: (0.008, 0.012, 0.135), 18: (0.014, 0.019, 0.157),
    19: (0.022, 0.027, 0.177), 20: (0.040, 0.046, 0.223), 21: (0.058, 0.065, 0.260),
    22: (0.068, 0.081, 0.298), 23: (0.079, 0.102, 0.345), 24: (0.133, 0.192, 0.474),
    25: (0.397, 0.711, 0.607), 26: (0.040, 0.250, 1.077), 27: (0.040, 0.333, 1.354),
    28: (0.020, 0.243, 1.508), 29: (0.015, 0.245, 1.739), 30: (0.009, 0.200, 1.861),
    31: (0.018, 0.500, 2.601), 32: (0.006, 0.313, 3.410), 33: (0.007, 0.545, 4.418),
    34: (0.002, 0.400, 6.447), 35: (0.002, 0.667, 8.009), 36: (0, 0, 0), 37: (0.001, 1, None),
}
TABLE2_TRUNCATION = {
    4: (0.057, 1, None), 5: (0.042, 0.424, 1.577), 6: (0.048, 0.331, 1.229),
    7: (0.033, 0.186, 0.917), 8: (0.030, 0.143, 0.763), 9: (0.023, 0.100, 0.621),
    10: (0.039, 0.145, 0.675), 11: (0.024, 0.082, 0.505), 12: (0.031, 0.096, 0.516),
    13: (0.043, 0.117, 0.531), 14: (0.053, 0.127, 0.515), 15: (0.069, 0.143, 0.502),
    16: (0.107, 0.182, 0.503), 17: (0.082, 0.124, 0.404), 18: (0.087, 0.117, 0.373),
    19: (0.097, 0.118, 0.355), 20: (0.080, 0.090, 0.305), 21: (0.053, 0.059, 0.250),
    22: (0.001, 0.001, 0.041),
}


def table2_mismatches(table, est_tol=0.0005 + 1e-9, se_tol=0.005):
    """Entries of an estimate table that disagree with the reference rows.

    Estimates must round to the printed three decimals (a half-unit slack
    admits printed ties such as 0.3125 -> 0.313); standard errors are
    allowed ``se_tol``.  ``None`` in a reference row means NA.
    """
    out = []
    fr = table.frame
    checks = (
        (TABLE2_LIFETIME, fr.x_support, table.lifetime, ("f_star", "lambda", "se_lambda")),
        (TABLE2_TRUNCATION, fr.y_support, table.truncation, ("g_star", "beta", "se_beta")),
    )
    for published, support, cols, names in checks:
        for age, printed in published.items():
            i = int(np.flatnonzero(support == age)[0])
            for name, want, tol in zip(names, printed, (est_tol, est_tol, se_tol)):
                got = float(cols[name][i])
                if want is None:
                    ok = np.isnan(got)
                else:
                    ok = np.isfinite(got) and abs(got - want) <= tol
                if not ok:
                    out.append((name, age, got, want))
    return out
