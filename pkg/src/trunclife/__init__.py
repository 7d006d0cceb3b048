"""Nonparametric estimation for discrete, doubly bounded, left-truncated lifetimes."""

from .asymptotics import (
    CovarianceSpec,
    ZeroBracketError,
    ci_log_scale,
    ci_log_scale_array,
    covariance,
    sigma_c,
    sigma_f,
    sigma_g,
    sigma_G,
    sigma_S,
    standard_errors,
)
from .estimation import (
    EmpiricalCounts,
    PairSample,
    TruncationViolation,
    UndefinedEstimateError,
    beta_hat,
    cdf_F_hat,
    cdf_G_hat,
    empirical_counts,
    lambda_hat,
    survival_hat,
)
from .inference import (
    ShapeTestError,
    ShapeTestResult,
    q_statistic_general,
    q_statistic_uniform,
    uniform_null_beta,
)
from .ingest import IngestConfig, LeaseRecord, build_pair_sample, detect_termination, read_records_csv
from .io import PairFileError, read_pairs_csv, write_pairs_csv
from .likelihood import ParameterPoint, log_likelihood, mle_from_sample, score
from .population import (
    DiscretePmf,
    SupportError,
    SupportFrame,
    TruncatedPopulation,
    build_population,
    discrete_uniform,
    pmf_from_spec,
    truncated_geometric,
)
from .simulation import SimulationPlan, run_replicates, sample_direct, sample_rejection
from .special import chi_square_cdf, chi_square_quantile, chi_square_sf
from .tables import EstimateTable, estimate_table

__version__ = "0.1.0"
