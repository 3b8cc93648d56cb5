"""Python interface to the adaflow C++ core."""

from ._core import (
    ConfigError,
    DomainError,
    Error,
    NumericalError,
    Problem,
    Schedule,
    adam_a,
    clt_covariance,
    finite_sum_ls_random,
    optimize,
    quadratic_diag,
    run_cli,
    saddle_quartic,
    trap_analysis,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "NumericalError",
    "Problem",
    "Schedule",
    "adam_a",
    "clt_covariance",
    "finite_sum_ls_random",
    "optimize",
    "quadratic_diag",
    "run_cli",
    "saddle_quartic",
    "trap_analysis",
]
