"""Kernel density and distribution function estimation for current status data."""

from .bandwidth import (
    BetaParams,
    MomentEstimates,
    beta_mom,
    h_opt,
    mise_expansion,
    mise_functionals,
    moment_estimates,
    reference_bandwidth,
    rule_of_thumb,
)
from .cdf import CdfEstimate, F_combined, F_minus, F_plus, validate_bandwidth_coupling
from .density import (
    GEstimate,
    TheoreticalExpansion,
    default_grid,
    expansion_bias,
    f_combined,
    f_final,
    f_minus,
    f_plus,
    g_hat,
    g_hat_deriv,
    optimal_t,
)
from .errors import (
    BetaFitInfeasible,
    DataError,
    DegenerateBandwidth,
    DegenerateObservationDensity,
    KernelCapabilityError,
    KernelValidationError,
)
from .families import Family, parse_family
from .kernels import Kernel, biweight, kernel_functionals, make_kernel
from .observation import Q_FLOOR, ObservationDensity, analytic_density, uniform_density
from .pipeline import estimate_curves
from .qestimate import estimated_observation_density, f_final_unknown_q, q_hat, q_hat_derivs
from .transform import CurrentStatusSample, TransformedSample, transform, true_g, untransform

__version__ = "0.1.0"
