"""Solver and Monte Carlo convergence lab for stochastic time-fractional
diffusion on the unit interval.

The model is a diffusion equation with a Caputo derivative of order
alpha in (0,1) in time, driven by additive Gaussian noise under a
Riemann-Liouville integral of order gamma in [0,1], with alpha + gamma > 1/2.
Discretization: linear finite elements in space, Grunwald-Letnikov
convolution quadrature in time, truncated Karhunen-Loeve noise.
"""

from .errors import CapabilityError, ConfigurationError, DomainError
from .fem import (
    EigenBasis,
    FemSpace,
    build_space,
    generalized_eigs,
    l2_norm,
    l2_project,
    prolong,
    sine_load,
)
from .mlf import MlfParams, mittag_leffler
from .noise import (
    IncrementMatrix,
    NoiseModel,
    StreamKey,
    coarsen_increments,
    noise_load,
    sample_increments,
)
from .quadrature import WeightTable, conv_quad, gl_weights
from .reference import (
    ModalProblem,
    deterministic_reference,
    kernel_E,
    kernel_Ebar,
    modal_recursion,
    smoothing_probe,
)
from .stepper import ModelConfig, SolveResult, solve_trajectory, weak_functional
from .studies import (
    ErrorReport,
    StudyPlan,
    fit_rate,
    holder_probe,
    predicted_rates,
    run_study,
    strong_error,
    weak_error,
)

__version__ = "0.1.0"
