"""Closed-form kernels and the bridge-density asymptotics built from them.

The slit strip is ``S_eps = R x (0, 2)`` minus the line ``Im w = 1`` with the
gap ``|Re w| < eps`` kept open.  ``strip_map`` sends it onto the upper half
plane; the gap point ``eps + i`` goes to 0 and ``-eps + i`` to infinity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .types import GapLine

ALPHA_MIN = 5.0 / 8.0
LAMBDA_GUARD = 1e-6
ASYMPTOTIC_RATIO_WARN = 0.2


def _upper(z) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"point {z} is not in the open upper half plane")
    return z


def halfplane_poisson_kernel(z, x: float) -> float:
    """(1/pi) Im z / |z - x|^2."""
    z = _upper(z)
    return z.imag / (math.pi * abs(z - x) ** 2)


def halfplane_poisson_kernel_from_infinity(x: float) -> float:
    # limit of y * H(iy, x) as y -> infinity, independent of x
    return 1.0 / math.pi


def _strip_w(eps, z):
    z = np.asarray(z, dtype=np.complex128)
    a, b = math.exp(math.pi * eps), math.exp(-math.pi * eps)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        left = z.real < 0
        e = np.exp(np.pi * np.where(left, z, -z))
        # divide through by exp(pi z) on the right to avoid overflow
        w = np.where(left, (e + a) / (e + b), (1 + a * e) / (1 + b * e))
    return w


def strip_map(eps: float, z):
    """Conformal map of the slit strip onto the upper half plane.

    ``w = (e^{pi z} + e^{pi eps}) / (e^{pi z} + e^{-pi eps})`` covers the plane
    minus ``[0, inf)``; the square-root branch ``i sqrt(-w)`` lands in H.  On
    this branch the real axis goes to the negative reals (``f -> -1`` as
    ``Re z -> +inf``) and the top line ``Im z = 2`` to the positive reals.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    zz = np.asarray(z, dtype=np.complex128)
    pole = np.isclose(zz, -eps + 1j, rtol=0, atol=1e-15)
    if np.any(pole):
        raise ZeroDivisionError("strip_map has a pole at -eps + i")
    w = _strip_w(eps, zz)
    f = 1j * np.sqrt(-w)
    # the two horizontal boundary lines sit on opposite sides of the cut of sqrt(-w)
    on_bottom = zz.imag <= 0
    on_top = zz.imag >= 2
    root = np.sqrt(np.abs(w.real))
    f = np.where(on_bottom, -root + 0j, np.where(on_top, root + 0j, f))
    return f if np.ndim(z) else complex(f)


def strip_map_derivative(eps: float, x):
    """|f_eps'(x)| on the real axis, closed form."""
    x = np.asarray(x, dtype=np.float64)
    f = np.abs(strip_map(eps, x + 0j))
    # e^{pi x} / (e^{pi x} + e^{-pi eps})^2 written without overflow
    ex = np.exp(-np.abs(np.pi * x))
    frac = np.where(x < 0,
                    ex / (ex + math.exp(-math.pi * eps)) ** 2,
                    ex / (1.0 + math.exp(-math.pi * eps) * ex) ** 2)
    out = 2 * math.pi * math.sinh(math.pi * eps) * frac / (2 * f)
    return out if out.ndim else float(out)


def strip_kernel_exact(eps: float, lam: float, x: float) -> float:
    """Poisson kernel of the slit strip from the gap point ``lam*eps + i`` to boundary point ``x``."""
    if abs(lam) > 1 - LAMBDA_GUARD:
        raise ValueError(f"|lam|={abs(lam)} is within {LAMBDA_GUARD} of a gap endpoint")
    fz = strip_map(eps, complex(lam * eps, 1.0))
    fx = strip_map(eps, complex(x, 0.0))
    return strip_map_derivative(eps, x) * fz.imag / (math.pi * abs(fz - fx) ** 2)


def strip_kernel_asymptotic(eps: float, lam: float, x: float) -> float:
    if abs(lam) > 1:
        raise ValueError("|lam| must be <= 1")
    return math.pi * math.sqrt(1 - lam * lam) * eps / (8 * math.cosh(math.pi * x / 2) ** 2)


def integrated_strip_kernel(eps: float, x: float, exact: bool = True) -> float:
    """(eps/pi) * integral over lam in (-1, 1) of the strip kernel.

    Uses ``lam = sin(theta)`` so the square-root endpoints become smooth.
    """
    kern = strip_kernel_exact if exact else strip_kernel_asymptotic
    lim = math.asin(1 - LAMBDA_GUARD) if exact else math.pi / 2
    val, _ = integrate.quad(lambda th: kern(eps, math.sin(th), x) * math.cos(th), -lim, lim,
                            epsabs=0, epsrel=1e-10, limit=200)
    return eps / math.pi * val


def bridge_density_U(z) -> float:
    """pi / (16 y^2 cosh^2(pi x / 2)) for z = y (x + i)."""
    z = _upper(z)
    y = z.imag
    x = z.real / y
    return math.pi / (16 * y * y * math.cosh(math.pi * x / 2) ** 2)


def one_point_phi_asymptotic(gap: GapLine) -> float:
    ratio = gap.half_width / gap.height
    if ratio > ASYMPTOTIC_RATIO_WARN:
        warnings.warn(f"eps/Im z = {ratio:.3g} > {ASYMPTOTIC_RATIO_WARN}; small-gap asymptotic is unreliable",
                      stacklevel=2)
    return bridge_density_U(gap.center) * gap.half_width ** 2


def two_point_phi_scale(z, w, eps_z: float, eps_w: float) -> float:
    """U(z - w) U(w) eps_z^2 eps_w^2, the comparison scale for passing two gaps.

    Order-of-magnitude only: no constant is claimed between this and the true value.
    """
    z, w = complex(z), complex(w)
    if not z.imag > w.imag > 0:
        raise ValueError("need Im z > Im w > 0")
    return bridge_density_U(z - w) * bridge_density_U(w) * eps_z ** 2 * eps_w ** 2


def avoidance_probability(phi_prime: float, alpha: float) -> float:
    """phi'_A(0)^alpha: probability that the alpha-restriction hull misses A."""
    if not 0.0 <= phi_prime <= 1.0:
        raise ValueError("phi_prime must lie in [0, 1]")
    if alpha < ALPHA_MIN:
        raise ValueError(f"alpha must be >= {ALPHA_MIN}")
    return phi_prime ** alpha


@dataclass(frozen=True)
class RestrictionParams:
    alpha: float
    kappa: float
    loop_intensity: float


def restriction_params(alpha: float) -> RestrictionParams:
    if alpha < ALPHA_MIN:
        raise ValueError(f"restriction measures need alpha >= {ALPHA_MIN}, got {alpha}")
    kappa = 6.0 / (2.0 * alpha + 1.0)
    return RestrictionParams(alpha, kappa, (8.0 - 3.0 * kappa) * alpha)


def conditioned_avoidance(phiA: float, phiAS: float, phiS: float, alpha: float) -> float:
    """(phiA^a - phiAS^a) / (1 - phiS^a), clamped into [0, 1].

    Probability of avoiding A given that the hull hits S.  Monte-Carlo inputs
    can push the ratio slightly outside [0, 1]; that is clamped with a warning.
    """
    for name, v in (("phiA", phiA), ("phiAS", phiAS), ("phiS", phiS)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")
    if phiS == 1.0:
        raise ZeroDivisionError("conditioning on an event of probability 0 (phiS = 1)")
    val = (phiA ** alpha - phiAS ** alpha) / (1.0 - phiS ** alpha)
    if not 0.0 <= val <= 1.0:
        warnings.warn(f"conditioned avoidance {val:.4g} clamped into [0, 1]", stacklevel=2)
        val = min(max(val, 0.0), 1.0)
    return val
