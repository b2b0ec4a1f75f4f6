"""Poisson-type kernel for the degenerate heat extension and its transforms.

The kernel density in time,

    psi(t) = (4^s Gamma(s))^(-1) * exp(-1/(4t)) * t^(-s-1)   for t > 0,

integrates to one, and its space-scaled version

    Psi(x, t) = (4^s Gamma(s))^(-1) * x^(2s) * exp(-x^2/(4t)) * t^(-s-1)

is the probability density whose time convolution with boundary data
solves the weighted heat-conduction problem on the half plane.  Its
Laplace transform is a modified Bessel function of the second kind,
which this module evaluates from the integral representation

    K_nu(z) = integral_0^inf exp(-z cosh u) cosh(nu u) du.
"""

from __future__ import annotations

import math

import numpy as np

from ._integrate import adaptive
from .errors import ToleranceNotMet
from .quadrature import DEFAULT_SPEC, Order, QuadratureSpec

__all__ = [
    "psi_profile",
    "psi_kernel",
    "kernel_mass",
    "bessel_k",
    "laplace_psi_numeric",
    "laplace_psi_closed",
    "bvp_solution",
]

# exp underflows to zero well before this exponent; cutting early keeps
# extreme x^2/t ratios from producing spurious inf * 0 products.
_LOG_FLOOR = -700.0


def psi_profile(t, s: Order):
    """Kernel profile psi at unit space variable; zero for t <= 0."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    pos = t > 0.0
    tp = t[pos]
    log_val = -math.lgamma(s.s) - s.s * math.log(4.0) - 0.25 / tp - (s.s + 1.0) * np.log(tp)
    keep = log_val > _LOG_FLOOR
    vals = np.zeros_like(tp)
    vals[keep] = np.exp(log_val[keep])
    out[pos] = vals
    return float(out[0]) if scalar else out


def psi_kernel(x: float, t, s: Order):
    """Space-time kernel Psi(x, t); zero for t <= 0 by definition."""
    if x <= 0.0:
        raise ValueError("kernel requires x > 0; the trace at x = 0 is handled separately")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    pos = t > 0.0
    tp = t[pos]
    log_val = (
        -math.lgamma(s.s)
        - s.s * math.log(4.0)
        + 2.0 * s.s * math.log(x)
        - x * x / (4.0 * tp)
        - (s.s + 1.0) * np.log(tp)
    )
    keep = log_val > _LOG_FLOOR
    vals = np.zeros_like(tp)
    vals[keep] = np.exp(log_val[keep])
    out[pos] = vals
    return float(out[0]) if scalar else out


def _gamma_integral_numeric(s: float, extra_exp, spec: QuadratureSpec) -> float:
    """Numeric integral of u^(s-1) e^(-u) extra_exp(u) over (0, inf).

    The (0, 1] piece is regularized by u = w^(1/s); the remainder runs to
    where the exponential has provably died.
    """

    def head(w: np.ndarray) -> np.ndarray:
        u = w ** (1.0 / s)
        return np.exp(-u + extra_exp(u)) / s

    def body(u: np.ndarray) -> np.ndarray:
        return u ** (s - 1.0) * np.exp(-u + extra_exp(u))

    v1, e1 = adaptive(head, 0.0, 1.0, spec.abs_tol, spec.rel_tol, spec.max_subdivisions,
                      min_panels=16, label="kernel head")
    hi = 720.0
    v2, e2 = adaptive(body, 1.0, hi, spec.abs_tol, spec.rel_tol, spec.max_subdivisions,
                      min_panels=64, label="kernel body")
    return v1 + v2


def kernel_mass(x: float, s: Order, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Total time integral of Psi(x, .), numerically; equals 1.

    Changing variables t = x^2 tau and then tau = 1/(4u) reduces the mass
    to the Gamma integral, which is evaluated by quadrature rather than
    assumed.
    """
    if x <= 0.0:
        raise ValueError("kernel mass requires x > 0")
    raw = _gamma_integral_numeric(s.s, lambda u: 0.0, spec)
    return raw / math.gamma(s.s)


def bessel_k(nu: float, z: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Modified Bessel function of the second kind, K_nu(z).

    Evaluated from the cosh integral representation by adaptive panels
    with an analytic tail bound; symmetric in nu by construction.
    """
    if z <= 0.0:
        raise ValueError("bessel_k requires z > 0")
    nu = abs(nu)
    if nu >= 2.0:
        raise ValueError("bessel_k supports |nu| < 2")
    # Integrand dies once z*cosh(u) - nu*u passes the underflow floor.
    hi = math.acosh(760.0 / z) if z < 760.0 else 1.0
    hi = max(hi, 1.0) + 2.0

    def integrand(u: np.ndarray) -> np.ndarray:
        expo = -z * np.cosh(u)
        keep = expo > _LOG_FLOOR
        out = np.zeros_like(u)
        out[keep] = np.exp(expo[keep]) * np.cosh(nu * u[keep])
        return out

    val, _ = adaptive(integrand, 0.0, hi, spec.abs_tol, min(spec.rel_tol, 1e-10),
                      spec.max_subdivisions, min_panels=64, label="bessel_k")
    # Tail beyond hi: exp(-z cosh u) cosh(nu u) <= exp(-(z/2) e^u + nu u).
    tail = math.exp(-z * math.cosh(hi) + nu * hi) if z * math.cosh(hi) < 700.0 else 0.0
    if tail > max(1e-12 * abs(val), 1e-280):
        raise ToleranceNotMet("bessel_k truncation bound too large", value=val, error=tail)
    return val


def laplace_psi_numeric(s: Order, omega: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Laplace transform of the kernel profile at real omega > 0, by quadrature."""
    if omega <= 0.0:
        raise ValueError("laplace transform evaluated for real omega > 0 only")
    raw = _gamma_integral_numeric(s.s, lambda u: -omega / (4.0 * u), spec)
    return raw / math.gamma(s.s)


def laplace_psi_closed(s: Order, omega: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Closed form of the same transform: omega^(s/2) K_s(sqrt(omega)) / (2^(s-1) Gamma(s))."""
    if omega <= 0.0:
        raise ValueError("laplace transform evaluated for real omega > 0 only")
    k = bessel_k(s.s, math.sqrt(omega), spec)
    return omega ** (0.5 * s.s) * k / (2.0 ** (s.s - 1.0) * math.gamma(s.s))


def bvp_solution(alpha: float, x: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Decaying solution of x^alpha y'' = y with y(0) = 1, for alpha < 1.

    The solution is c_k x^(1/2) K_(1/(2k))(x^k / k) with k = (2 - alpha)/2;
    at x = 0 the boundary value 1 is returned directly.
    """
    if alpha >= 1.0:
        raise ValueError("the boundary value problem requires alpha < 1")
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 1.0
    k = 0.5 * (2.0 - alpha)
    nu = 1.0 / (2.0 * k)
    c_k = 2.0 ** (1.0 - nu) * k ** (-nu) / math.gamma(nu)
    z = x**k / k
    if z >= 700.0:
        return 0.0
    return c_k * math.sqrt(x) * bessel_k(nu, z, spec)
