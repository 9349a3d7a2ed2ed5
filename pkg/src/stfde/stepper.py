"""Fully discrete scheme: GL time stepping of the FEM system with
fractionally integrated noise.

Testing the equation against the P1 basis and multiplying by tau^alpha turns
each time step into one constant-coefficient tridiagonal solve:

    (mass + tau^alpha stiffness) U^n
        = mass U^0
          - sum_{k=1}^{n-1} b^{(alpha)}_{n-k} mass (U^k - U^0)
          + tau^{alpha+gamma-1} sum_{k=1}^{n} b^{(-gamma)}_{n-k} g^k,

where g^k is the load vector of the projected increment P_h DeltaW^k and
f^0 = 0 by convention.  The system matrix is factored once per
(config, space); history sums are evaluated naively, O(N^2) per trajectory,
which is tractable at desk scale and keeps the kernel auditable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ConfigurationError
from .fem import FemSpace, TridiagFactor, l2_project
from .noise import IncrementMatrix, NoiseModel, StreamKey, noise_load_matrix
from .quadrature import gl_weights

__all__ = ["ModelConfig", "SolveResult", "solve_trajectory", "weak_functional"]

InitialData = Union[str, Callable[[np.ndarray], np.ndarray], np.ndarray, None]

_NAMED_U0 = {
    "zero": None,
    "sinpi": lambda x: np.sin(np.pi * x),
}


@dataclass(frozen=True)
class ModelConfig:
    """Problem instance: fractional orders, horizon, step count, initial data.

    u0 may be None/"zero", a named profile ("sinpi"), a callable on (0,1),
    or a nodal vector.
    """

    alpha: float
    gamma: float
    T: float
    N: int
    u0: InitialData = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0,1), got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0,1], got {self.gamma}")
        if self.alpha + self.gamma <= 0.5:
            raise ConfigurationError(
                "well-posedness requires alpha + gamma > 1/2, got "
                f"alpha={self.alpha}, gamma={self.gamma}"
            )
        if self.N < 1:
            raise ConfigurationError(f"step count must be >= 1, got N={self.N}")
        if self.T <= 0:
            raise ConfigurationError(f"horizon must be positive, got T={self.T}")

    @property
    def tau(self) -> float:
        return self.T / self.N


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Trajectory states: row n of `states` holds U^n, n = 0..N."""

    states: np.ndarray
    config: ModelConfig
    key: StreamKey

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def initial_vector(config: ModelConfig, space: FemSpace) -> np.ndarray:
    """Projected initial data U^0 = P_h u0."""
    u0 = config.u0
    if isinstance(u0, str):
        try:
            u0 = _NAMED_U0[u0]
        except KeyError:
            raise ConfigurationError(f"unknown initial data name {config.u0!r}") from None
    if u0 is None:
        return np.zeros(space.dim)
    if callable(u0):
        return l2_project(space, u0)
    vec = np.asarray(u0, dtype=np.float64)
    if vec.shape != (space.dim,):
        raise ConfigurationError(
            f"nodal initial data has shape {vec.shape}, expected ({space.dim},)"
        )
    return vec.copy()


def solve_trajectory(
    config: ModelConfig,
    space: FemSpace,
    model: NoiseModel,
    incs: IncrementMatrix,
) -> SolveResult:
    """Run the scheme for one trajectory and return the full state history."""
    if incs.N != config.N:
        raise ConfigurationError(
            f"increment matrix has {incs.N} steps, config expects {config.N}"
        )
    if not np.isclose(incs.tau, config.tau, rtol=1e-12, atol=0.0):
        raise ConfigurationError(
            f"increment step {incs.tau} does not match config step {config.tau}"
        )

    N, tau = config.N, config.tau
    b_alpha = gl_weights(config.alpha, N).weights
    b_gamma = gl_weights(-config.gamma, N).weights
    system = TridiagFactor(
        space.mass_diag + tau**config.alpha * space.stiff_diag,
        space.mass_off + tau**config.alpha * space.stiff_off,
    )

    loads = noise_load_matrix(model, incs, space)          # (M-1) x N, col k-1 = g^k
    noise_scale = tau ** (config.alpha + config.gamma - 1.0)

    u0 = initial_vector(config, space)
    mass_u0 = space.apply_mass(u0)

    states = np.empty((N + 1, space.dim))
    states[0] = u0
    # hist[k] caches mass (U^k - U^0) so history terms are weighted vector sums
    hist = np.empty((N, space.dim))

    for n in range(1, N + 1):
        rhs = mass_u0 + noise_scale * (loads[:, :n] @ b_gamma[n - 1 :: -1])
        if n > 1:
            rhs -= b_alpha[n - 1 : 0 : -1] @ hist[1:n]
        u = system.solve(rhs)
        states[n] = u
        if n < N:
            hist[n] = space.apply_mass(u - u0)

    states.flags.writeable = False
    return SolveResult(states=states, config=config, key=incs.key)


def weak_functional(space: FemSpace, v: np.ndarray) -> float:
    """Phi(v) = integral of v^2 over (0,1) = v^T mass v, the weak-error test
    functional."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != space.dim:
        raise ValueError(f"length {v.shape[0]} does not match dimension {space.dim}")
    return float(np.dot(v, space.apply_mass(v)))
