"""Truncated Karhunen-Loeve Q-Wiener increments and their FEM load vectors.

The driving noise is W(t) = sum_l gamma_l^{1/2} e_l beta_l(t) with
eigenpairs gamma_l = l^{-m}, e_l = sqrt(2) sin(l pi x) shared with the
diffusion operator, truncated at L modes (default: the FEM dimension).

Randomness is counter-based and keyed per (seed, trajectory, mode):
every mode draws its increment row from its own Philox stream, so results
are bit-reproducible under any parallel schedule, enlarging L keeps the
existing rows, and coarser meshes see a prefix of a finer mesh's noise.
Normal variates use numpy's Generator.standard_normal (ziggurat), fixed
here as the build-time choice; it is platform-independent for a given
numpy release.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DomainError
from .fem import FemSpace, sine_load

__all__ = [
    "NoiseModel",
    "StreamKey",
    "IncrementMatrix",
    "sample_increments",
    "truncate_modes",
    "coarsen_increments",
    "noise_load",
    "noise_load_matrix",
    "kl_load_matrix",
    "dump_increments",
    "load_increments",
]

_MAGIC = b"SFNZ1"
_HEADER = struct.Struct("<5sIIdQI")


@dataclass(frozen=True)
class NoiseModel:
    """Covariance eigenvalue decay gamma_l = l^{-m}, truncated at L modes."""

    m: float
    L: int

    def __post_init__(self):
        if self.m < 0:
            raise DomainError(f"decay exponent must be >= 0, got m={self.m}")
        if self.L < 1:
            raise DomainError(f"truncation level must be >= 1, got L={self.L}")

    def eigenvalues(self) -> np.ndarray:
        return np.arange(1, self.L + 1, dtype=np.float64) ** (-self.m)


@dataclass(frozen=True)
class StreamKey:
    seed: int
    trajectory: int


@dataclass(frozen=True, eq=False)
class IncrementMatrix:
    """Brownian increments delta beta_l^k, shape L x N, entry ~ N(0, tau)."""

    increments: np.ndarray
    tau: float
    key: StreamKey

    @property
    def L(self) -> int:
        return self.increments.shape[0]

    @property
    def N(self) -> int:
        return self.increments.shape[1]


def _mode_rng(key: StreamKey, mode: int) -> np.random.Generator:
    # Philox key is 2x64 bits: seed in one word, (trajectory, mode) packed in
    # the other.  Counter-based, so streams are independent by construction.
    packed = (np.uint64(key.trajectory) << np.uint64(32)) | np.uint64(mode)
    bits = np.random.Philox(key=np.array([np.uint64(key.seed), packed], dtype=np.uint64))
    return np.random.Generator(bits)


def sample_increments(model: NoiseModel, N: int, tau: float, key: StreamKey) -> IncrementMatrix:
    """Draw the L x N increment matrix for one trajectory.

    Row l comes from the substream keyed (seed, trajectory, l), l = 1..L.
    """
    if N < 1:
        raise ConfigurationError(f"need at least one step, got N={N}")
    if tau <= 0:
        raise ConfigurationError(f"step size must be positive, got tau={tau}")
    rows = np.empty((model.L, N), dtype=np.float64)
    root = np.sqrt(tau)
    for ell in range(1, model.L + 1):
        rows[ell - 1] = root * _mode_rng(key, ell).standard_normal(N)
    rows.flags.writeable = False
    return IncrementMatrix(increments=rows, tau=float(tau), key=key)


def truncate_modes(incs: IncrementMatrix, L: int) -> IncrementMatrix:
    """Keep the first L mode rows; exact because streams are keyed per mode."""
    if not 1 <= L <= incs.L:
        raise ConfigurationError(f"cannot keep {L} of {incs.L} modes")
    if L == incs.L:
        return incs
    rows = incs.increments[:L]
    return IncrementMatrix(increments=rows, tau=incs.tau, key=incs.key)


def coarsen_increments(fine: IncrementMatrix, factor: int) -> IncrementMatrix:
    """Aggregate adjacent increments so both grids ride the same Brownian path."""
    if factor == 1:
        return fine
    if factor < 1 or fine.N % factor != 0:
        raise ConfigurationError(
            f"coarsening factor {factor} does not divide step count {fine.N}"
        )
    coarse = fine.increments.reshape(fine.L, fine.N // factor, factor).sum(axis=2)
    coarse.flags.writeable = False
    return IncrementMatrix(increments=coarse, tau=fine.tau * factor, key=fine.key)


@lru_cache(maxsize=32)
def _kl_load_cached(model: NoiseModel, space: FemSpace) -> np.ndarray:
    cols = np.empty((space.dim, model.L))
    roots = np.sqrt(model.eigenvalues())
    for ell in range(1, model.L + 1):
        cols[:, ell - 1] = roots[ell - 1] * sine_load(space, ell)
    cols.flags.writeable = False
    return cols

def kl_load_matrix(model: NoiseModel, space: FemSpace) -> np.ndarray:
    """Columns gamma_l^{1/2} (e_l, phi_i), l = 1..L; cached per (model, space)."""
    return _kl_load_cached(model, space)


def noise_load(model: NoiseModel, incs: IncrementMatrix, k: int, space: FemSpace) -> np.ndarray:
    """Load vector g^k of the projected increment P_h DeltaW^k.

    g^k_i = sum_l gamma_l^{1/2} (e_l, phi_i) delta beta_l^k, so the scheme's
    right-hand side datum is mass * f^k = g^k / tau.  Step indices start at
    1; the k = 0 slot is the f^0 = 0 convention and must not be requested.
    """
    if not 1 <= k <= incs.N:
        raise ValueError(f"step index must be in 1..{incs.N}, got k={k}")
    if incs.L != model.L:
        raise ConfigurationError(
            f"increment matrix has {incs.L} modes, model expects {model.L}"
        )
    return kl_load_matrix(model, space) @ incs.increments[:, k - 1]


def noise_load_matrix(model: NoiseModel, incs: IncrementMatrix, space: FemSpace) -> np.ndarray:
    """All load vectors at once: column k-1 is g^k.  Shape (M-1) x N."""
    if incs.L != model.L:
        raise ConfigurationError(
            f"increment matrix has {incs.L} modes, model expects {model.L}"
        )
    return kl_load_matrix(model, space) @ incs.increments


def dump_increments(incs: IncrementMatrix, path) -> None:
    """Binary audit dump: header (magic, L, N, tau, seed, trajectory), then
    row-major little-endian float64 increments."""
    header = _HEADER.pack(
        _MAGIC, incs.L, incs.N, incs.tau, incs.key.seed, incs.key.trajectory
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(incs.increments, dtype="<f8").tobytes())


def load_increments(path) -> IncrementMatrix:
    with open(path, "rb") as fh:
        magic, L, N, tau, seed, trajectory = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError(f"not an increment dump (magic {magic!r})")
        data = np.frombuffer(fh.read(8 * L * N), dtype="<f8").reshape(L, N).copy()
    data.flags.writeable = False
    return IncrementMatrix(
        increments=data, tau=tau, key=StreamKey(seed=seed, trajectory=trajectory)
    )
