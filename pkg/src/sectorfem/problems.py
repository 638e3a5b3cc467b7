"""Concrete problem instances on the unit sector.

Two time-dependent benchmark problems and one static elliptic problem, each
bundling exact solution, initial data, Laplace-domain source and the
diffusivity normalization that makes the smallest eigenvalue of -K*Laplace
equal to 1.

All fields are vectorized callables of numpy coordinate arrays and are pure,
so ProblemSpec values can be evaluated concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fem import DIRICHLET, MIXED
from .specialfn import bessel_j, first_bessel_zero, mittag_leffler_neg


@dataclass(frozen=True)
class ProblemSpec:
    """Time-dependent diffusion problem with known exact solution.

    ``u0(x, y)`` is the initial data, ``fhat(z)`` maps a Laplace variable to
    the transformed source as a pointwise (complex) field, or is None for a
    homogeneous problem, and ``exact(x, y, t)`` evaluates the solution.
    """

    label: str
    alpha: float
    beta: float
    bc_kind: str
    K: float
    u0: Callable
    fhat: Callable | None
    exact: Callable


@dataclass(frozen=True)
class EllipticSpec:
    """Static problem -K*Laplace(u) = f with homogeneous Dirichlet data."""

    label: str
    beta: float
    K: float
    f: Callable
    exact: Callable
    exact_grad: Callable


def _polar(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    theta = np.where(theta < 0, theta + 2 * math.pi, theta)
    return r, theta


def normalize_K(beta: float, bc_kind: str) -> float:
    """Diffusivity making the smallest eigenvalue of -K*Laplace equal 1.

    The sector eigenfunctions are J_nu(sqrt(lambda/K) r) times an angular
    factor; the first eigenvalue is K*j^2 with j the first positive zero of
    J_beta (all-Dirichlet) or J_{beta/2} (Dirichlet on theta=0 and the arc,
    Neumann on theta=pi/beta).
    """
    if bc_kind == DIRICHLET:
        return 1.0 / first_bessel_zero(beta) ** 2
    if bc_kind == MIXED:
        return 1.0 / first_bessel_zero(beta / 2) ** 2
    raise ValueError(f"unknown bc_kind {bc_kind!r}")


def _singular_part(beta: float):
    """g = r**beta (1-r) sin(beta theta), vanishing on the whole boundary."""

    def g(x, y):
        r, theta = _polar(x, y)
        return r ** beta * (1.0 - r) * np.sin(beta * theta)

    return g


def _singular_part_laplacian(beta: float, K: float):
    """A g = -K*Laplace(g) = K (2 beta + 1) r**(beta-1) sin(beta theta).

    Follows from r**beta sin(beta theta) being harmonic while
    Laplace(r**(beta+1) sin(beta theta)) = (2 beta + 1) r**(beta-1)
    sin(beta theta).
    """

    def Ag(x, y):
        r, theta = _polar(x, y)
        return K * (2 * beta + 1) * r ** (beta - 1.0) * np.sin(beta * theta)

    return Ag


def example1(alpha: float, beta: float = 2.0 / 3.0) -> ProblemSpec:
    """Manufactured singular solution with Dirichlet conditions.

    The solution is ``(1 + t**alpha/Gamma(1+alpha)) * r**beta (1-r)
    sin(beta theta)``; the matching source has the Laplace transform
    ``fhat(z) = z**-alpha g + (z**-alpha + z**-2alpha) A g``.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    K = normalize_K(beta, DIRICHLET)
    g = _singular_part(beta)
    Ag = _singular_part_laplacian(beta, K)

    def time_factor(t):
        return 1.0 + t ** alpha / math.gamma(1.0 + alpha)

    def exact(x, y, t):
        return time_factor(t) * g(x, y)

    def fhat(z):
        z = complex(z)
        za = z ** -alpha
        z2a = z ** (-2.0 * alpha)

        def field(x, y):
            return za * g(x, y) + (za + z2a) * Ag(x, y)

        return field

    return ProblemSpec("example1", alpha, beta, DIRICHLET, K, g, fhat, exact)


def example2(alpha: float, beta: float = 2.0 / 3.0) -> ProblemSpec:
    """Decay of the first mixed-condition eigenfunction (homogeneous source).

    Dirichlet on theta=0 and the arc, Neumann on theta=pi/beta.  The initial
    data is the first eigenfunction ``J_{beta/2}(w r) sin(beta theta / 2)``
    with w its Bessel zero, so the solution decays by the Mittag-Leffler
    factor ``E_alpha(-t**alpha)``.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    K = normalize_K(beta, MIXED)
    w = first_bessel_zero(beta / 2)

    def u0(x, y):
        r, theta = _polar(x, y)
        return bessel_j(beta / 2, w * r) * np.sin(0.5 * beta * theta)

    def exact(x, y, t):
        return mittag_leffler_neg(alpha, t ** alpha) * u0(x, y)

    return ProblemSpec("example2", alpha, beta, MIXED, K, u0, None, exact)


def elliptic_singular(beta: float = 2.0 / 3.0) -> EllipticSpec:
    """Static singular benchmark: exact u in H1 but not H2.

    ``u = r**beta (1-r) sin(beta theta)`` with source
    ``f = K (2 beta + 1) r**(beta-1) sin(beta theta)``, which is in L2 but
    drives the corner singularity.
    """
    K = normalize_K(beta, DIRICHLET)
    g = _singular_part(beta)
    f = _singular_part_laplacian(beta, K)

    def exact_grad(x, y):
        r, theta = _polar(x, y)
        r = np.maximum(r, 1e-300)
        dur = (beta * r ** (beta - 1.0) - (beta + 1.0) * r ** beta) * np.sin(beta * theta)
        dut_over_r = beta * (r ** (beta - 1.0) - r ** beta) * np.cos(beta * theta)
        ct, st = np.cos(theta), np.sin(theta)
        return dur * ct - dut_over_r * st, dur * st + dut_over_r * ct

    return EllipticSpec("elliptic_singular", beta, K, f, g, exact_grad)
