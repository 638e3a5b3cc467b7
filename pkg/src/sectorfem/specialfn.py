"""Special functions for exact solutions and test oracles.

Covers the power kernel t**(alpha-1)/Gamma(alpha), the one-parameter
Mittag-Leffler function on the negative real axis, Bessel functions of the
first kind of real order, and their first positive zeros.  All functions
are pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

from .contour import laplace_invert_scalar


@dataclass(frozen=True)
class MLEvalConfig:
    """Evaluation controls for the Mittag-Leffler backends.

    The Taylor series is used for arguments up to ``series_cutoff`` while it
    is numerically safe, terminating once terms drop below ``series_tol``;
    otherwise the value comes from inverting its Laplace transform on a
    hyperbolic contour with ``contour_M`` quadrature nodes.
    """

    series_cutoff: float = 5.0
    series_tol: float = 1e-15
    contour_M: int = 24

    def __post_init__(self):
        if self.series_cutoff <= 0:
            raise ValueError("series_cutoff must be positive")
        if self.series_tol > 1e-14:
            raise ValueError("series_tol must be <= 1e-14")


_DEFAULT_ML_CONFIG = MLEvalConfig()

# Largest |term| the float64 series may visit before cancellation starts
# eating into the 1e-10 accuracy contract; beyond it we fall back to the
# contour backend even below the cutoff (relevant for small alpha).
_SERIES_PEAK_LIMIT = 1e4


def omega_kernel(alpha: float, t):
    """Power kernel t**(alpha-1)/Gamma(alpha) for t > 0, 0 < alpha <= 2."""
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("omega kernel requires t > 0")
    out = t ** (alpha - 1.0) / math.gamma(alpha)
    return float(out) if out.ndim == 0 else out


def _ml_series(alpha: float, x: float, tol: float):
    """Kahan-summed Taylor series of E_alpha(-x); returns (value, peak |term|)."""
    total = 0.0
    comp = 0.0
    peak = 0.0
    lx = math.log(x)
    prev = math.inf
    for p in range(0, 100000):
        term = math.exp(p * lx - math.lgamma(1.0 + alpha * p))
        if p % 2:
            term = -term
        mag = abs(term)
        peak = max(peak, mag)
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
        if mag < tol and mag <= prev:
            break
        prev = mag
    return total, peak


def _ml_contour(alpha: float, x: float, M: int) -> float:
    # E_alpha(-x) = L^{-1}{ z**(alpha-1)/(z**alpha + x) } evaluated at t = 1
    return laplace_invert_scalar(lambda z: z ** (alpha - 1.0) / (z ** alpha + x), 1.0, M)


def mittag_leffler_neg(alpha: float, x: float, config: MLEvalConfig | None = None) -> float:
    """E_alpha(-x) = sum_p (-x)**p / Gamma(1 + p*alpha) for 0 < alpha <= 1, x >= 0.

    The result lies in [0, 1] and is accurate to about 1e-10 absolute for
    x in [0, 50].
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if x < 0:
        raise ValueError(f"argument must be >= 0, got {x}")
    if x == 0.0:
        return 1.0
    cfg = config if config is not None else _DEFAULT_ML_CONFIG
    if x <= cfg.series_cutoff:
        value, peak = _ml_series(alpha, x, cfg.series_tol)
        if peak <= _SERIES_PEAK_LIMIT:
            return min(1.0, max(0.0, value))
    return min(1.0, max(0.0, _ml_contour(alpha, x, cfg.contour_M)))


def bessel_j(nu: float, x):
    """Bessel function J_nu for orders 0 <= nu <= 2 and arguments 0 <= x <= 20."""
    if not 0 <= nu <= 2:
        raise ValueError(f"order must lie in [0, 2], got {nu}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 20):
        raise ValueError("argument must lie in [0, 20]")
    out = jv(nu, x)
    return float(out) if out.ndim == 0 else out


def first_bessel_zero(nu: float) -> float:
    """Smallest positive zero of J_nu for 0 < nu <= 2, to 1e-12.

    Brackets the first sign change on a fine grid (the first zero of any
    order <= 2 lies below 6) and polishes it with Brent's method.
    """
    if not 0 < nu <= 2:
        raise ValueError(f"order must lie in (0, 2], got {nu}")
    xs = np.linspace(1e-3, 6.0, 1201)
    vals = jv(nu, xs)
    sign_change = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if sign_change.size == 0:
        raise RuntimeError(f"no sign change found for J_{nu} on (0, 6]")
    k = sign_change[0]
    return brentq(lambda x: jv(nu, x), xs[k], xs[k + 1], xtol=1e-14, rtol=8.9e-16)
