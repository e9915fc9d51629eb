"""Affine Wealth Model: solvers, simulators, Lorenz analytics and fitting."""

__version__ = "0.1.0"

from .core import (
    CanonicalDensity,
    LorenzCurve,
    ParameterVector,
    Potentials,
    awm_lorenz,
    compute_potentials,
    density_from_lorenz,
    dual_lorenz,
    gini,
    gini_density_form,
    kappa_to_lambda,
    lambda_to_kappa,
    lorenz_from_density,
    oligarchy_fraction,
    scale_density,
    shift_density,
)
from .errors import (
    AWMError,
    ConvergenceError,
    DegenerateError,
    DomainError,
    FitError,
    InputError,
    ParseError,
    UnsupportedError,
)
from .solver import SolverConfig, eysm_lorenz, model_lorenz, solve_model, solve_steady_subcritical

__all__ = [
    "AWMError",
    "CanonicalDensity",
    "ConvergenceError",
    "DegenerateError",
    "DomainError",
    "FitError",
    "InputError",
    "LorenzCurve",
    "ParameterVector",
    "ParseError",
    "Potentials",
    "SolverConfig",
    "UnsupportedError",
    "awm_lorenz",
    "compute_potentials",
    "density_from_lorenz",
    "dual_lorenz",
    "eysm_lorenz",
    "gini",
    "gini_density_form",
    "kappa_to_lambda",
    "lambda_to_kappa",
    "lorenz_from_density",
    "model_lorenz",
    "oligarchy_fraction",
    "scale_density",
    "shift_density",
    "solve_model",
    "solve_steady_subcritical",
]
