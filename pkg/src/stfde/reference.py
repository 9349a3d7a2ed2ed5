"""Independent spectral reference solutions and decay probes.

On the discrete spectrum the solution operators act mode by mode:

    homogeneous kernel   E(t;lambda)    = E_{alpha,1}(-lambda t^alpha)
    forced kernel        Ebar(t;lambda) = t^{alpha+gamma-1}
                                          E_{alpha,alpha+gamma}(-lambda t^alpha)

so the exact semidiscrete solution of the homogeneous problem and the
operator-norm decay exponents (expected slope (1-kappa/2)alpha + gamma - 1
for || A_h^{kappa/2} Ebar(t) ||) are available without time stepping.  The
scalar modal recursion below is the diagonalized form of the fully discrete
scheme and must agree with the matrix stepper to round-off; that agreement
is the core correctness gate of the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fem import EigenBasis, FemSpace
from .mlf import mittag_leffler
from .quadrature import gl_weights
from .stepper import ModelConfig

__all__ = [
    "ModalProblem",
    "kernel_E",
    "kernel_Ebar",
    "deterministic_reference",
    "modal_recursion",
    "smoothing_probe",
    "operator_norm_Ebar",
    "probe_grid",
    "fit_loglog_slope",
]


@dataclass(frozen=True)
class ModalProblem:
    """One eigenmode of the diffusion operator under fractional orders."""

    lam: float
    alpha: float
    gamma: float

    def __post_init__(self):
        if self.lam <= 0:
            raise DomainError(f"eigenvalue must be positive, got {self.lam}")


def kernel_E(problem: ModalProblem, t: float) -> float:
    """Modal action of the homogeneous solution operator at time t >= 0."""
    if t < 0:
        raise DomainError(f"time must be nonnegative, got t={t}")
    if t == 0.0:
        return 1.0
    return mittag_leffler(problem.alpha, 1.0, -problem.lam * t**problem.alpha)


def kernel_Ebar(problem: ModalProblem, t: float) -> float:
    """Modal action of the forced solution operator at time t > 0."""
    if t <= 0:
        raise DomainError(f"time must be positive, got t={t}")
    a, g = problem.alpha, problem.gamma
    return t ** (a + g - 1.0) * mittag_leffler(a, a + g, -problem.lam * t**a)


def deterministic_reference(
    config: ModelConfig,
    space: FemSpace,
    eigen: EigenBasis,
    u0: np.ndarray,
    t: float,
) -> np.ndarray:
    """Exact semidiscrete homogeneous solution at time t, spectrally.

    Expands u0 in the mass-orthonormal eigenbasis and damps each coefficient
    with the homogeneous kernel.
    """
    c = eigen.coeffs(space, u0)
    if t == 0.0:
        return eigen.synth(c)
    ta = t**config.alpha
    damp = np.array(
        [mittag_leffler(config.alpha, 1.0, -lam * ta) for lam in eigen.values]
    )
    return eigen.synth(damp * c)


def modal_recursion(
    config: ModelConfig,
    lam: float,
    modal_noise: np.ndarray,
    u0: float = 0.0,
) -> np.ndarray:
    """Scalar run of the fully discrete scheme on one eigenmode.

    modal_noise holds q^1..q^N, the eigen-coordinates of the noise load
    vectors.  Returns u^0..u^N.  Algebraically identical to the matrix
    stepper expressed in the eigenbasis.
    """
    q = np.asarray(modal_noise, dtype=np.float64)
    N = q.shape[0]
    if N != config.N:
        raise ValueError(f"modal noise has {N} entries, config expects {config.N}")
    tau = config.tau
    b_alpha = gl_weights(config.alpha, N).weights
    b_gamma = gl_weights(-config.gamma, N).weights
    noise_scale = tau ** (config.alpha + config.gamma - 1.0)
    denom = 1.0 + tau**config.alpha * lam

    u = np.empty(N + 1)
    u[0] = u0
    hist = np.empty(N)  # hist[k] = u^k - u^0
    for n in range(1, N + 1):
        rhs = u0 + noise_scale * np.dot(b_gamma[n - 1 :: -1], q[:n])
        if n > 1:
            rhs -= np.dot(b_alpha[n - 1 : 0 : -1], hist[1:n])
        u[n] = rhs / denom
        if n < N:
            hist[n] = u[n] - u0
    return u


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Ordinary least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def operator_norm_Ebar(
    eigen: EigenBasis, alpha: float, gamma: float, kappa: float, t: float
) -> float:
    """|| A_h^{kappa/2} Ebar_h(t) || on the discrete spectrum (selfadjoint,
    so the norm is a maximum over modes)."""
    ta = t**alpha
    vals = eigen.values
    kern = np.array(
        [mittag_leffler(alpha, alpha + gamma, -lam * ta) for lam in vals]
    )
    return float(np.max(vals ** (kappa / 2.0) * np.abs(kern))) * t ** (
        alpha + gamma - 1.0
    )


def smoothing_probe(
    space: FemSpace,
    eigen: EigenBasis,
    alpha: float,
    gamma: float,
    kappa: float,
    t_grid: np.ndarray,
) -> float:
    """Fitted decay exponent of || A_h^{kappa/2} Ebar_h(t) || over t_grid.

    The grid should be log-spaced inside (0,1] and sit where the extreme
    modes do not saturate: lambda_min t^alpha well below 1 at the top end
    for kappa < 2, lambda_max t^alpha well above 1 at the bottom for
    kappa > 0.  Expected slope: (1 - kappa/2) alpha + gamma - 1.
    """
    if not 0.0 <= kappa <= 2.0:
        raise DomainError(f"kappa must lie in [0,2], got {kappa}")
    t_grid = np.asarray(t_grid, dtype=float)
    norms = [operator_norm_Ebar(eigen, alpha, gamma, kappa, t) for t in t_grid]
    return fit_loglog_slope(t_grid, np.array(norms))


def probe_grid(eigen: EigenBasis, alpha: float, points_per_decade: int = 9) -> np.ndarray:
    """A log-spaced grid in the clean scaling window of the discrete spectrum.

    Chosen so lambda_1 t^alpha <= 0.05 at the top and lambda_max t^alpha >= 100
    at the bottom, spanning at least two decades.
    """
    lam_min, lam_max = eigen.values[0], eigen.values[-1]
    t_hi = (0.05 / lam_min) ** (1.0 / alpha)
    t_lo = (100.0 / lam_max) ** (1.0 / alpha)
    lo, hi = np.log10(t_lo), np.log10(t_hi)
    if hi - lo < 2.0:
        mid = 0.5 * (lo + hi)
        lo, hi = mid - 1.0, mid + 1.0
    n = max(int(np.ceil((hi - lo) * points_per_decade)) + 1, 2)
    return np.logspace(lo, hi, n)
