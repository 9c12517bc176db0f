"""Locate the plateau boundary of a hyper-parameter grid.

Given metric values on a set of hyper-parameter configurations, fit a
boundary that separates a low-metric region from a high-metric one by
maximizing a sigmoid-softened profile log-likelihood, then pick one
configuration on that boundary.
"""

from .boundary import NNParams, QPParams, init_params, params_from_dict, params_from_vector
from .estimator import LogStandardScaler, PlateauBoundary
from .exceptions import InputError, MethodError, PlateauError
from .grid import (
    Direction,
    EvalGrid,
    SynthSpec,
    TransformSpec,
    fit_transform,
    generate_synthetic,
    lattice,
    load_grid,
    write_grid,
)
from .likelihood import (
    hard_profile_loglik,
    objective_and_gradient,
    soft_mle,
    soft_profile_loglik,
    soft_weights,
    zhu_ghodsi_1d,
)
from .optimize import FitResult, OptimOptions, adam_maximize, bfgs_maximize, multi_start_fit
from .representative import (
    boundary_intersection,
    cog,
    nearest_grid_point,
    partition,
    representative_point,
)

__version__ = "0.1.0"

__all__ = [
    "Direction",
    "EvalGrid",
    "FitResult",
    "InputError",
    "LogStandardScaler",
    "MethodError",
    "NNParams",
    "OptimOptions",
    "PlateauBoundary",
    "PlateauError",
    "QPParams",
    "SynthSpec",
    "TransformSpec",
    "adam_maximize",
    "bfgs_maximize",
    "boundary_intersection",
    "cog",
    "fit_transform",
    "generate_synthetic",
    "hard_profile_loglik",
    "init_params",
    "lattice",
    "load_grid",
    "multi_start_fit",
    "nearest_grid_point",
    "objective_and_gradient",
    "params_from_dict",
    "params_from_vector",
    "partition",
    "representative_point",
    "soft_mle",
    "soft_profile_loglik",
    "soft_weights",
    "write_grid",
    "zhu_ghodsi_1d",
]
