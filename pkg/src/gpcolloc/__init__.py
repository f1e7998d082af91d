"""Gaussian-process collocation for linear boundary value problems."""
from .kernel import SEKernel
from .operators import LinearDiffOperator, MultiIndex, apply_to_kernel, check_boundary_order
from .geometry import Interval, UnitDisk, StarShaped, BoundaryDatum, Discretization
from .gp import (
    ProblemSpec,
    PosteriorField,
    assemble,
    condition,
    log_marginal_likelihood,
    select_lengthscale,
    LengthscaleGrid,
)

__version__ = "0.1.0"
