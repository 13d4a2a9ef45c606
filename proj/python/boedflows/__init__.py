"""Batch Bayesian experimental design with Wasserstein gradient flows."""

from ._core import (
    ConfigError,
    Constraint,
    EstimatorError,
    FlowError,
    ModelError,
    constraint_of,
    design_uniform,
    eig_exact_torus,
    eig_nmc,
    eig_quadrature_toy,
    is_feasible,
    model_names,
    repair,
    run_experiment,
    wrap_torus,
)

__all__ = [
    "ConfigError",
    "Constraint",
    "EstimatorError",
    "FlowError",
    "ModelError",
    "constraint_of",
    "design_uniform",
    "eig_exact_torus",
    "eig_nmc",
    "eig_quadrature_toy",
    "is_feasible",
    "model_names",
    "repair",
    "run_experiment",
    "wrap_torus",
]
