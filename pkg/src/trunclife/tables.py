"""Per-support-point estimate tables in the MBALT layout."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .asymptotics import ci_log_scale_array, sigma_f, sigma_g, standard_errors
from .estimation import EmpiricalCounts, PairSample, empirical_counts
from .population import SupportFrame

LIFETIME_COLUMNS = ("f_star", "C", "lambda", "se_lambda", "lambda_lo", "lambda_hi", "S", "F")
TRUNCATION_COLUMNS = ("g_star", "C_y", "beta", "se_beta", "beta_lo", "beta_hi", "G")


@dataclass(frozen=True)
class EstimateTable:
    """Estimates, standard errors and log-scale intervals at each support point.

    NaN marks an undefined entry (written as ``NA``):

    * a hazard is undefined where no pair brackets the point;
    * standard errors are NA where the estimate is undefined or equal to 1,
      and for the reverse hazard at the first truncation point;
    * intervals are NA where the estimate is 0, 1 or undefined.

    Standard errors are per-``sqrt(n)`` (``sqrt`` of the asymptotic variance);
    zero-count cells therefore carry an estimate of 0 with s.e. 0.
    """

    frame: SupportFrame
    n: float
    level: float
    lifetime: dict
    truncation: dict

    @property
    def undefined_lambda(self) -> list:
        return self.frame.x_support[np.isnan(self.lifetime["lambda"])].tolist()

    @property
    def undefined_beta(self) -> list:
        return self.frame.y_support[np.isnan(self.truncation["beta"])].tolist()

    def rows(self):
        fr = self.frame
        for i, age in enumerate(fr.x_support):
            row = {"age": int(age)}
            row.update({c: self.lifetime[c][i] for c in LIFETIME_COLUMNS})
            j = age - fr.y_lo
            in_y = 0 <= j < fr.n_y
            row.update({c: (self.truncation[c][j] if in_y else None) for c in TRUNCATION_COLUMNS})
            yield row

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("age",) + LIFETIME_COLUMNS + TRUNCATION_COLUMNS)
            for row in self.rows():
                w.writerow([row["age"]] + [_cell(row[c]) for c in LIFETIME_COLUMNS + TRUNCATION_COLUMNS])

    def to_dict(self) -> dict:
        def clean(d):
            return {k: [None if not math.isfinite(v) else float(v) for v in arr] for k, arr in d.items()}

        return {
            "n": self.n,
            "level": self.level,
            "frame": self.frame.to_dict(),
            "lifetime": {"age": self.frame.x_support.tolist(), **clean(self.lifetime)},
            "truncation": {"age": self.frame.y_support.tolist(), **clean(self.truncation)},
            "undefined": {"lambda": self.undefined_lambda, "beta": self.undefined_beta},
        }

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def _cell(v) -> str:
    if v is None:
        return ""
    if not math.isfinite(v):
        return "NA"
    return repr(float(v))


def _nan_cumprod(factors: np.ndarray) -> np.ndarray:
    # once a factor is undefined every later product is too
    out = np.cumprod(np.nan_to_num(factors, nan=1.0))
    bad = np.isnan(factors)
    if bad.any():
        out[np.argmax(bad):] = np.nan
    return out


def estimate_table(source, level: float = 0.95) -> EstimateTable:
    """Assemble an :class:`EstimateTable` from a sample or its counts."""
    ec = source if isinstance(source, EmpiricalCounts) else empirical_counts(source)
    fr, n = ec.frame, ec.n

    lam = ec.lam
    var_f = sigma_f(ec, strict=False)
    se_lam = standard_errors(var_f)
    se_lam[~(lam < 1.0)] = np.nan
    lam_lo, lam_hi = ci_log_scale_array(lam, var_f, n, level)
    lam_lo[lam <= 0] = np.nan
    lam_hi[lam <= 0] = np.nan
    S = _nan_cumprod(1.0 - lam)

    beta = ec.beta
    var_g = sigma_g(ec, strict=False)
    se_beta = standard_errors(var_g)
    se_beta[~(beta < 1.0)] = np.nan
    se_beta[0] = np.nan
    beta_lo, beta_hi = ci_log_scale_array(beta, var_g, n, level)
    beta_lo[beta <= 0] = np.nan
    beta_hi[beta <= 0] = np.nan
    G = _nan_cumprod((1.0 - beta)[::-1])[::-1]
    G = np.concatenate((G[1:], [1.0]))

    lifetime = {
        "f_star": ec.f_star, "C": ec.C, "lambda": lam, "se_lambda": se_lam,
        "lambda_lo": lam_lo, "lambda_hi": lam_hi, "S": S, "F": 1.0 - S,
    }
    truncation = {
        "g_star": ec.g_star, "C_y": ec.C[: fr.n_y], "beta": beta, "se_beta": se_beta,
        "beta_lo": beta_lo, "beta_hi": beta_hi, "G": G,
    }
    return EstimateTable(fr, n, level, lifetime, truncation)
