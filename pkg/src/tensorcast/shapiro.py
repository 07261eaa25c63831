"""Shapiro-Wilk W normality test, Royston's AS R94 approximation.

Valid for sample sizes 3..5000.  The W statistic is the squared correlation
between the ordered sample and expected normal order statistics; the p-value
comes from Royston's normalizing transforms of 1 - W.
"""

from __future__ import annotations

import math

import numpy as np

from ._kernels import ndtri
from .errors import NumericalError

__all__ = ["shapiro_wilk"]

_MIN_N = 3
_MAX_N = 5000

# Polynomial adjustments for the two largest coefficients (highest degree first).
_C1 = (-2.706056, 4.434685, -2.071190, -0.147981, 0.221157, 0.0)
_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)
# Normalizing transform of 1 - W: mean/sd polynomials in n (4 <= n <= 11)...
_C3 = (-0.0006714, 0.025054, -0.39978, 0.5440)
_C4 = (-0.0020322, 0.062767, -0.77857, 1.3822)
# ... and in log(n) (n >= 12).
_C5 = (0.0038915, -0.083751, -0.31082, -1.5861)
_C6 = (0.0030302, -0.082676, -0.4803)
_G = (0.459, -2.273)

_PI6 = 1.90985931710274  # 6/pi
_STQR = 1.04719755119660  # arcsin(sqrt(3/4))


def _coefficients(n: int) -> np.ndarray:
    if n == 3:
        return np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    i = np.arange(1, n + 1, dtype=np.float64)
    m = ndtri((i - 0.375) / (n + 0.25))
    msq = float(np.sum(m * m))
    c = m / math.sqrt(msq)
    u = 1.0 / math.sqrt(n)
    a = c.copy()
    a[-1] = float(np.polyval(_C1, u)) + c[-1]
    a[0] = -a[-1]
    if n > 5:
        a[-2] = float(np.polyval(_C2, u)) + c[-2]
        a[1] = -a[-2]
        phi = (msq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
            1.0 - 2.0 * a[-1] ** 2 - 2.0 * a[-2] ** 2
        )
        a[2:-2] = m[2:-2] / math.sqrt(phi)
    else:
        phi = (msq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a[-1] ** 2)
        a[1:-1] = m[1:-1] / math.sqrt(phi)
    return a


def shapiro_wilk(x) -> tuple[float, float]:
    """Return (W, p-value) for the null hypothesis of normality.

    Raises NumericalError for out-of-range sample sizes or zero range.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = x.size
    if n < _MIN_N or n > _MAX_N:
        raise NumericalError(f"Shapiro-Wilk supports {_MIN_N} <= n <= {_MAX_N}, got {n}")
    if not np.isfinite(x).all():
        raise NumericalError("sample contains non-finite values")
    if x[-1] - x[0] <= 0.0:
        raise NumericalError("zero sample range: W is undefined for constant data")

    a = _coefficients(n)
    centered = x - x.mean()
    ssq = float(np.sum(centered * centered))
    if ssq <= 0.0:
        raise NumericalError("zero sample variance: W is undefined")
    w = float(np.dot(a, x)) ** 2 / ssq
    w = min(w, 1.0)

    if n == 3:
        p = _PI6 * (math.asin(math.sqrt(w)) - _STQR)
        return w, min(max(p, 0.0), 1.0)

    w1 = 1.0 - w
    if n <= 11:
        gamma = float(np.polyval(_G, n))
        if gamma - math.log(w1) <= 0.0:
            return w, 1e-19  # deep in the rejection tail
        y = -math.log(gamma - math.log(w1))
        mean = float(np.polyval(_C3, n))
        sd = math.exp(float(np.polyval(_C4, n)))
    else:
        ln_n = math.log(n)
        y = math.log(w1)
        mean = float(np.polyval(_C5, ln_n))
        sd = math.exp(float(np.polyval(_C6, ln_n)))

    z = (y - mean) / sd
    p = 0.5 * math.erfc(z / math.sqrt(2.0))  # 1 - Phi(z)
    return w, min(max(p, 0.0), 1.0)
