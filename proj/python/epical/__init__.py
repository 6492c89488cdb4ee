"""Covariate-dependent SIR calibration with joint Gaussian-process priors."""

from ._core import (
    Chain,
    EpicalError,
    beta_true,
    cli,
    correlation,
    gamma_true,
    inv_logit,
    logit,
    make_synthetic,
    mean_curve,
    predict,
    rate_means,
    run_chain,
    sir_step,
    sobol_indices,
)

__all__ = [
    "Chain",
    "EpicalError",
    "beta_true",
    "cli",
    "correlation",
    "gamma_true",
    "inv_logit",
    "logit",
    "make_synthetic",
    "mean_curve",
    "predict",
    "rate_means",
    "run_chain",
    "sir_step",
    "sobol_indices",
]
