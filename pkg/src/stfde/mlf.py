"""Two-parameter Mittag-Leffler function E_{a,b}(x) on the negative real axis.

E_{a,b}(x) = sum_{k>=0} x^k / Gamma(a k + b) is the kernel of the modal
solution operators: the homogeneous propagator acts on an eigenmode as
E_{a,1}(-lambda t^a) and the forced one as t^{a+b'-1} E_{a,a+b'}(-lambda t^a).
Only x <= 0, a in (0,1], b in (0,4] are supported; target accuracy is 1e-10
absolute, a few digits tighter than anything it certifies.

Evaluation regimes (thresholds validated against an arbitrary-precision
Taylor oracle over |x| in [0, 1e6]):

  * |x| <= 5 with small alternating-series cancellation: float64 Taylor.
  * a = 1: Kummer's function, E_{1,b}(x) = M(1, b, x)/Gamma(b).
  * large |x|: the algebraic asymptotic series -sum_{k>=1} x^{-k}/Gamma(b-ak),
    truncated at the minimum of its smooth envelope
    r^{-k} Gamma(1+ak-b)/pi (the raw terms dip spuriously near Gamma poles);
    accepted only when envelope minimum plus the exponentially small
    background exp(r^{1/a} cos(pi/a)) (present as a -> 1) is below 5e-12.
  * otherwise: real-axis integral representation

        E_{a,b}(-r) = (1/pi) int_0^inf u^{a-b} e^{-u}
                      [u^a sin(pi(1-b)) + r sin(pi(1-b+a))]
                      / (u^{2a} + 2 u^a r cos(pi a) + r^2) du,

    valid for b <= 1; larger b is reduced first through
    E_{a,b}(x) = (E_{a,b-a}(x) - 1/Gamma(b-a)) / x.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gammaln, hyp1f1, rgamma

from .errors import DomainError

__all__ = ["MlfParams", "mittag_leffler"]

_TAYLOR_CROSSOVER = 5.0
_TAYLOR_PEAK_LOG10 = 2.5      # max tolerated log10 of the largest Taylor term
_ASYM_ACCEPT = 5e-12


@dataclass(frozen=True)
class MlfParams:
    """Validated exponent pair (a, b)."""

    a: float
    b: float

    def __post_init__(self):
        if not 0.0 < self.a <= 1.0:
            raise DomainError(f"first exponent must lie in (0,1], got a={self.a}")
        if not 0.0 < self.b <= 4.0:
            raise DomainError(f"second exponent must lie in (0,4], got b={self.b}")

    def eval(self, x: float) -> float:
        return mittag_leffler(self.a, self.b, x)


def _peak_log10(a: float, b: float, r: float) -> float:
    """log10 of the largest term of the Taylor series at argument -r."""
    if r <= 1.0:
        return 0.1
    u = math.exp(math.log(r) / a)          # stationary point: a k + b ~ r^(1/a)
    k = max((u - b) / a, 0.0)
    return (k * math.log(r) - gammaln(a * k + b)) / math.log(10.0)


def _taylor(a: float, b: float, r: float) -> float:
    x = -r
    kstar = (r ** (1.0 / a) - b) / a if r > 1.0 else 0.0
    s = 0.0
    xk = 1.0
    for k in range(600):
        t = xk * rgamma(a * k + b)
        s += t
        xk *= x
        if k >= 100 and k > kstar and abs(t) <= 1e-17 * max(1.0, abs(s)):
            break
    return s


def _asymptotic(a: float, b: float, r: float):
    """Envelope-truncated asymptotic value, or None if not accurate enough."""
    lnr = math.log(r)
    kmax = int(min(420.0, (r ** (1.0 / a) + 2.0 - b) / a + 30.0))
    ks = np.arange(1, kmax + 1, dtype=np.float64)
    arg = b - a * ks
    env = np.where(
        arg >= 0.5,
        np.exp(-ks * lnr - gammaln(np.maximum(arg, 0.5))),
        np.exp(-ks * lnr + gammaln(np.maximum(1.0 - arg, 0.5))) / math.pi,
    )
    imin = int(np.argmin(env))
    bound = env[imin]
    if a > 2.0 / 3.0:
        bound += math.exp(r ** (1.0 / a) * math.cos(math.pi / a))
    if bound > _ASYM_ACCEPT:
        return None
    below = np.nonzero(env[: imin + 1] < 1e-16)[0]
    istop = int(below[0]) if below.size else imin
    kk = ks[: istop + 1]
    terms = -((-r) ** (-kk)) * rgamma(b - a * kk)
    return float(terms.sum())


def _integral_core(a: float, b: float, r: float) -> float:
    # substitution u = chi^{1/a} of the spectral integral; e^{-u} tail,
    # integrable u^{a-b} endpoint, denominator bounded below by r^2 sin^2(pi a)
    sin1 = math.sin(math.pi * (1.0 - b))
    sin2 = math.sin(math.pi * (1.0 - b + a))
    cosa = math.cos(math.pi * a)

    def f(u):
        ua = u**a
        num = ua * sin1 + r * sin2
        den = ua * ua + 2.0 * ua * r * cosa + r * r
        return (1.0 / math.pi) * u ** (a - b) * math.exp(-u) * num / den

    u0 = r ** (1.0 / a)
    hi = max(60.0, min(u0, 200.0) + 40.0)
    # denominator minimum sits near u0 once cos(pi a) < 0; flag it for quad
    pts = [u0] if (cosa < 0.0 and 1.0 < u0 < hi) else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        v1, _ = quad(f, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=300)
        v2, _ = quad(f, 1.0, hi, epsabs=1e-15, epsrel=1e-13, limit=300, points=pts)
    return v1 + v2


def _integral(a: float, b: float, r: float) -> float:
    if b <= 1.0:
        return _integral_core(a, b, r)
    steps = math.ceil((b - 1.0) / a - 1e-12)
    c = b - steps * a                      # lands in (1-a, 1]
    val = _integral_core(a, c, r)
    for _ in range(steps):
        val = (val - rgamma(c)) / (-r)
        c += a
    return val


def mittag_leffler(a: float, b: float, x: float) -> float:
    """E_{a,b}(x) for x <= 0, absolute error below 1e-10."""
    MlfParams(a, b)
    if x > 0.0:
        raise DomainError(f"argument must satisfy x <= 0, got x={x}")
    if x == 0.0:
        return float(rgamma(b))
    r = -x
    if a == 1.0:
        return float(hyp1f1(1.0, b, x) * rgamma(b))
    if r <= _TAYLOR_CROSSOVER and _peak_log10(a, b, r) <= _TAYLOR_PEAK_LOG10:
        return _taylor(a, b, r)
    asy = _asymptotic(a, b, r)
    if asy is not None:
        return asy
    return _integral(a, b, r)
