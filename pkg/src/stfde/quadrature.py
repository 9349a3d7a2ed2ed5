"""Grunwald-Letnikov convolution quadrature.

The weights b_j of order beta are the power-series coefficients of
(1 - z)**beta.  Convolving a sample sequence with them and scaling by
tau**(-beta) discretizes the Riemann-Liouville fractional integral
(beta < 0) or derivative (beta > 0) on a uniform grid of step tau:

    I^gamma v(t_n)  ~=  tau**gamma * sum_k b_{n-k}^{(-gamma)} v_k.

Weights are generated by the stable two-term recursion

    b_0 = 1,    b_j = b_{j-1} * (j - 1 - beta) / j,

which is exact in the same sense as the binomial series; the direct
Gamma-function formula is reserved for test oracles because it overflows
for large j.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = ["WeightTable", "gl_weights", "conv_quad"]


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Convolution weights b_0..b_N for one exponent.

    beta: exponent of (1 - z)**beta; beta = alpha for the derivative side,
        beta = -gamma for the integral side.
    tau: time step the table will be applied with.
    weights: the N+1 coefficients, read-only.
    """

    beta: float
    tau: float
    weights: np.ndarray

    def __len__(self) -> int:
        return self.weights.shape[0]


@lru_cache(maxsize=64)
def _weights_cached(beta: float, count: int) -> np.ndarray:
    j = np.arange(1, count + 1, dtype=np.float64)
    b = np.empty(count + 1, dtype=np.float64)
    b[0] = 1.0
    np.cumprod((j - 1.0 - beta) / j, out=b[1:])
    b.flags.writeable = False
    return b

def gl_weights(beta: float, count: int, tau: float = 1.0) -> WeightTable:
    """Weight table of (1 - z)**beta with entries b_0..b_count.

    Tables are cached per (beta, count) and shared; the array is immutable.
    """
    if not abs(beta) < 1.0:
        raise DomainError(f"beta must satisfy |beta| < 1, got beta={beta}")
    if count < 1:
        raise DomainError(f"count must be >= 1, got count={count}")
    return WeightTable(beta=beta, tau=tau, weights=_weights_cached(float(beta), int(count)))


def conv_quad(table: WeightTable, samples: np.ndarray) -> np.ndarray:
    """Apply the discrete fractional operator to samples v_0..v_n.

    Entry n of the result is tau**(-beta) * sum_{k<=n} b_{n-k} v_k.  Direct
    O(n^2) summation; adequate at desk scale and easy to audit.
    """
    v = np.asarray(samples, dtype=np.float64)
    n = v.shape[0]
    if n > len(table):
        raise ValueError(
            f"samples length {n} exceeds weight table length {len(table)}"
        )
    b = table.weights
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = np.dot(b[i::-1], v[: i + 1])
    out *= table.tau ** (-table.beta)
    return out
