"""Linear finite elements on (0,1) with zero Dirichlet boundary.

Uniform mesh of M intervals, interior hat functions phi_1..phi_{M-1}.
Boundary nodes are eliminated, so mass and stiffness are symmetric positive
definite tridiagonal operators:

    mass:      diag 2h/3,  off-diag h/6
    stiffness: diag 2/h,   off-diag -1/h

The discrete Laplacian A_h = mass^{-1} stiffness is never formed; every use
goes through tridiagonal solves against the mass operator or through the
generalized eigenbasis of the (stiffness, mass) pencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import CapabilityError, ConfigurationError, DomainError

__all__ = [
    "FemSpace",
    "EigenBasis",
    "TridiagFactor",
    "build_space",
    "l2_project",
    "load_vector",
    "sine_load",
    "generalized_eigs",
    "prolong",
    "l2_norm",
    "apply_operator",
]

_EIG_DIM_CAP = 4096

# 3-point Gauss-Legendre on [0,1]: exact for polynomials up to degree 5.
_GAUSS_X = np.array([0.5 - np.sqrt(15.0) / 10.0, 0.5, 0.5 + np.sqrt(15.0) / 10.0])
_GAUSS_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


class TridiagFactor:
    """LDL^T factorization of a symmetric tridiagonal matrix, reusable solves."""

    def __init__(self, diag: np.ndarray, off: np.ndarray):
        n = diag.shape[0]
        d = np.empty(n)
        l = np.empty(max(n - 1, 0))
        d[0] = diag[0]
        for i in range(n - 1):
            l[i] = off[i] / d[i]
            d[i + 1] = diag[i + 1] - l[i] * off[i]
        if np.any(d <= 0.0):
            raise ValueError("matrix is not positive definite")
        self._d = d
        self._l = l

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        d, l = self._d, self._l
        n = d.shape[0]
        x = np.array(rhs, dtype=np.float64, copy=True)
        for i in range(1, n):
            x[i] -= l[i - 1] * x[i - 1]
        x /= d
        for i in range(n - 2, -1, -1):
            x[i] -= l[i] * x[i + 1]
        return x


@dataclass(frozen=True, eq=False)
class FemSpace:
    """Interior degrees of freedom of the P1 space on a uniform mesh."""

    intervals: int
    h: float
    nodes: np.ndarray          # interior coordinates i*h, i=1..M-1
    mass_diag: np.ndarray
    mass_off: np.ndarray
    stiff_diag: np.ndarray
    stiff_off: np.ndarray
    _mass_factor: TridiagFactor = field(repr=False, compare=False, default=None)

    @property
    def dim(self) -> int:
        return self.intervals - 1

    def apply_mass(self, v: np.ndarray) -> np.ndarray:
        return _tridiag_matvec(self.mass_diag, self.mass_off, v)

    def apply_stiffness(self, v: np.ndarray) -> np.ndarray:
        return _tridiag_matvec(self.stiff_diag, self.stiff_off, v)

    def mass_solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._mass_factor.solve(rhs)


def _tridiag_matvec(diag: np.ndarray, off: np.ndarray, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    d = diag if v.ndim == 1 else diag[:, None]
    o = off if v.ndim == 1 else off[:, None]
    out = d * v
    if v.shape[0] > 1:
        out[:-1] += o * v[1:]
        out[1:] += o * v[:-1]
    return out


def build_space(M: int) -> FemSpace:
    """Assemble the interior mass/stiffness operators for mesh size h = 1/M."""
    if M < 2:
        raise ConfigurationError(f"need at least 2 intervals, got M={M}")
    h = 1.0 / M
    n = M - 1
    nodes = h * np.arange(1, M, dtype=np.float64)
    mass_diag = np.full(n, 2.0 * h / 3.0)
    mass_off = np.full(max(n - 1, 0), h / 6.0)
    stiff_diag = np.full(n, 2.0 / h)
    stiff_off = np.full(max(n - 1, 0), -1.0 / h)
    for a in (nodes, mass_diag, mass_off, stiff_diag, stiff_off):
        a.flags.writeable = False
    factor = TridiagFactor(mass_diag, mass_off)
    return FemSpace(M, h, nodes, mass_diag, mass_off, stiff_diag, stiff_off, factor)


def load_vector(space: FemSpace, f) -> np.ndarray:
    """(f, phi_i) for all interior hats, by 3-point Gauss per element."""
    M, h = space.intervals, space.h
    xl = h * np.arange(M)[:, None]                       # element left ends
    xq = xl + h * _GAUSS_X[None, :]                      # quadrature points
    fq = f(xq) * _GAUSS_W[None, :] * h
    # hat phi_i rises on element i-1 (local coord) and falls on element i
    rising = fq * _GAUSS_X[None, :]
    falling = fq * (1.0 - _GAUSS_X[None, :])
    load = np.zeros(M - 1)
    load += rising[:-1].sum(axis=1)
    load += falling[1:].sum(axis=1)
    return load


def l2_project(space: FemSpace, f) -> np.ndarray:
    """Nodal coefficients of the L2 projection of f onto the space."""
    return space.mass_solve(load_vector(space, f))


def sine_load(space: FemSpace, ell: int) -> np.ndarray:
    """(e_ell, phi_i) with e_ell(x) = sqrt(2) sin(ell*pi*x), in closed form.

    The exact integral of the sine against a hat of width h centred at x_i is
    2(1 - cos(ell*pi*h)) sin(ell*pi*x_i) / (ell*pi)^2 / h; quadrature would
    under-resolve the integrand once ell approaches the number of intervals.
    """
    if ell < 1:
        raise DomainError(f"mode index must be >= 1, got ell={ell}")
    h = space.h
    w = ell * np.pi
    amp = np.sqrt(2.0) * 2.0 * (1.0 - np.cos(w * h)) / (w * w * h)
    return amp * np.sin(w * space.nodes)


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Mass-orthonormal eigenpairs of the (stiffness, mass) pencil.

    vectors[:, j] is the j-th generalized eigenvector; ascending values.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def coeffs(self, space: FemSpace, v: np.ndarray) -> np.ndarray:
        """Eigen-coordinates (v, phi_j)_mass of a nodal vector."""
        return self.vectors.T @ space.apply_mass(v)

    def synth(self, c: np.ndarray) -> np.ndarray:
        """Nodal vector with the given eigen-coordinates."""
        return self.vectors @ c

    def fractional_norm(self, space: FemSpace, v: np.ndarray, s: float) -> float:
        """Spectral norm || A_h^{s/2} v || = (sum lambda_j^s c_j^2)^{1/2}."""
        c = self.coeffs(space, v)
        return float(np.sqrt(np.sum(self.values**s * c * c)))


def generalized_eigs(space: FemSpace) -> EigenBasis:
    """Full dense eigendecomposition of the pencil; desk scale only."""
    n = space.dim
    if n > _EIG_DIM_CAP:
        raise CapabilityError(
            f"eigendecomposition capped at dimension {_EIG_DIM_CAP}, got {n}"
        )
    S = (
        np.diag(space.stiff_diag)
        + np.diag(space.stiff_off, 1)
        + np.diag(space.stiff_off, -1)
    )
    B = (
        np.diag(space.mass_diag)
        + np.diag(space.mass_off, 1)
        + np.diag(space.mass_off, -1)
    )
    # scipy reduces via the Cholesky factor of B, then solves the symmetric
    # standard problem; eigenvectors come back B-orthonormal.
    values, vectors = scipy.linalg.eigh(S, B)
    values.flags.writeable = False
    vectors.flags.writeable = False
    return EigenBasis(values=values, vectors=vectors)


def prolong(coarse: np.ndarray, coarse_space: FemSpace, fine_space: FemSpace) -> np.ndarray:
    """Re-express a coarse nodal vector on a nested finer mesh, exactly.

    Nested uniform meshes embed the coarse P1 space in the fine one, so this
    is plain linear interpolation of the coarse function at the fine nodes.
    """
    Mc, Mf = coarse_space.intervals, fine_space.intervals
    if Mf % Mc != 0:
        raise ConfigurationError(
            f"fine mesh {Mf} is not a refinement of coarse mesh {Mc}"
        )
    r = Mf // Mc
    if r == 1:
        return np.array(coarse, dtype=np.float64, copy=True)
    padded = np.zeros(Mc + 1)
    padded[1:-1] = coarse
    k = np.arange(1, Mf)
    q, rem = np.divmod(k, r)
    t = rem / r
    return (1.0 - t) * padded[q] + t * padded[q + 1]


def l2_norm(space: FemSpace, v: np.ndarray) -> float:
    """|| v || in L2(0,1) for a nodal vector: sqrt(v^T mass v)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != space.dim:
        raise ValueError(f"length {v.shape[0]} does not match dimension {space.dim}")
    return float(np.sqrt(np.dot(v, space.apply_mass(v))))


def apply_operator(space: FemSpace, v: np.ndarray) -> np.ndarray:
    """A_h v realized as mass^{-1} (stiffness v), without forming A_h."""
    return space.mass_solve(space.apply_stiffness(v))
