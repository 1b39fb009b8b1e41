"""Langevin and simplified manifold Langevin MCMC for stochastic volatility models.

The model is ``y_t = beta exp(h_t/2) eps_t`` with a stationary AR(1)
log-variance ``h_t`` and Gaussian, GED or unit-variance Student-t errors.
"""

from .diagnostics import PosteriorSummary, acf, ess, summarize, summarize_chain
from .distributions import ErrorFamily, Family, ged_logpdf, normal_logpdf, sample_error, student_logpdf
from .exceptions import DataError, DomainError, NumericalError
from .experiment import McExperiment, McResult, run_mc
from .geometry import fd_gradient, grad_h, grad_theta, metric_h, metric_theta
from .io import describe, load_series
from .linalg import SymTridiag, chol_tridiag, factor_with_jitter
from .model import (
    ModelParams,
    ReturnSeries,
    TransformedParams,
    from_unconstrained,
    log_joint,
    log_prior,
    simulate,
    to_unconstrained,
)
from .risk import VarBacktest, VarForecast, rolling_backtest, var_one_step
from .samplers import (
    ChainOutput,
    McmcConfig,
    default_init,
    hybrid_sweep,
    mala_step,
    mmala_simplified_step,
    prior_medians,
    run_chain,
)

__version__ = "0.1.0"

__all__ = [
    "ChainOutput",
    "DataError",
    "DomainError",
    "ErrorFamily",
    "Family",
    "McExperiment",
    "McResult",
    "McmcConfig",
    "ModelParams",
    "NumericalError",
    "PosteriorSummary",
    "ReturnSeries",
    "SymTridiag",
    "TransformedParams",
    "VarBacktest",
    "VarForecast",
    "acf",
    "chol_tridiag",
    "default_init",
    "describe",
    "ess",
    "factor_with_jitter",
    "fd_gradient",
    "from_unconstrained",
    "ged_logpdf",
    "grad_h",
    "grad_theta",
    "hybrid_sweep",
    "load_series",
    "log_joint",
    "log_prior",
    "mala_step",
    "metric_h",
    "metric_theta",
    "mmala_simplified_step",
    "normal_logpdf",
    "prior_medians",
    "rolling_backtest",
    "run_chain",
    "run_mc",
    "sample_error",
    "simulate",
    "student_logpdf",
    "summarize",
    "summarize_chain",
    "to_unconstrained",
    "var_one_step",
]
