"""Benchmark functions with certified bounds, shared by tests and the CLI."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigInvalid
from .quadrature import HolderFunction

__all__ = [
    "constant",
    "sine",
    "bump",
    "shifted_bump",
    "exponential",
    "power_stationary",
    "linear",
    "from_samples",
    "from_table",
    "resolve",
]


def constant(c: float = 1.0) -> HolderFunction:
    """f = c everywhere; every fractional derivative annihilates it."""
    deriv = None
    if c != 0.0:
        deriv = constant(0.0)
    return HolderFunction(
        fn=lambda t: np.full_like(t, c, dtype=float),
        bound=abs(c),
        holder_exp=1.0,
        holder_const=0.0,
        exact_derivative=deriv,
        left_limit=c,
        right_limit=c,
        name=f"constant({c:g})",
    )


def sine(amplitude: float = 1.0, frequency: float = 1.0, phase: float = 0.0, _depth: int = 3) -> HolderFunction:
    """a*sin(w t + p) with an exact derivative chain (closed under d/dt)."""
    deriv = None
    if _depth > 0:
        deriv = sine(amplitude * frequency, frequency, phase + 0.5 * math.pi, _depth=_depth - 1)
    return HolderFunction(
        fn=lambda t, a=amplitude, w=frequency, p=phase: a * np.sin(w * t + p),
        bound=abs(amplitude),
        holder_exp=1.0,
        holder_const=abs(amplitude * frequency),
        exact_derivative=deriv,
        feature_scale=min(1.0, 1.0 / max(abs(frequency), 1e-12)),
        name=f"sine(a={amplitude:g}, w={frequency:g}, p={phase:g})",
    )


def _bump_profile(y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    inside = np.abs(y) < 1.0
    yi = y[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - yi * yi))
    return out


def _bump_profile_d1(y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    inside = np.abs(y) < 1.0
    yi = y[inside]
    q = 1.0 - yi * yi
    out[inside] = _bump_profile(yi) * (-2.0 * yi / (q * q))
    return out


def _bump_profile_d2(y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    inside = np.abs(y) < 1.0
    yi = y[inside]
    q = 1.0 - yi * yi
    g = -2.0 * yi / (q * q)
    gp = -2.0 / (q * q) - 8.0 * yi * yi / (q * q * q)
    out[inside] = _bump_profile(yi) * (g * g + gp)
    return out


# sup |psi'| and |psi''| for the unit bump profile, sampled once.
_Y_DENSE = np.linspace(-1.0, 1.0, 40_001)
_BUMP_D1_MAX = float(np.max(np.abs(_bump_profile_d1(_Y_DENSE))))
_BUMP_D2_MAX = float(np.max(np.abs(_bump_profile_d2(_Y_DENSE))))


def bump(center: float = 0.0, radius: float = 1.0, height: float = 1.0) -> HolderFunction:
    """Smooth compactly supported bump on [center - radius, center + radius]."""
    if radius <= 0.0:
        raise ValueError("bump radius must be positive")

    def d2(t):
        return height / radius**2 * _bump_profile_d2((t - center) / radius)

    second = HolderFunction(
        fn=d2,
        bound=abs(height) / radius**2 * _BUMP_D2_MAX,
        holder_const=100.0 * abs(height) / radius**3,
        feature_scale=radius / 4.0,
        name="bump''",
    )
    first = HolderFunction(
        fn=lambda t: height / radius * _bump_profile_d1((t - center) / radius),
        bound=abs(height) / radius * _BUMP_D1_MAX,
        holder_const=abs(height) / radius**2 * _BUMP_D2_MAX,
        exact_derivative=second,
        feature_scale=radius / 4.0,
        name="bump'",
    )
    return HolderFunction(
        fn=lambda t: height * _bump_profile((t - center) / radius),
        bound=abs(height),
        holder_exp=1.0,
        holder_const=abs(height) / radius * _BUMP_D1_MAX,
        exact_derivative=first,
        feature_scale=radius / 4.0,
        left_limit=0.0,
        right_limit=0.0,
        name=f"bump(c={center:g}, r={radius:g})",
    )


def shifted_bump(center: float = 2.0, radius: float = 1.0, height: float = 1.0) -> HolderFunction:
    return bump(center=center, radius=radius, height=height)


def exponential(rate: float = 1.0) -> HolderFunction:
    """f = exp(rate*t), admissible at evaluation points with a decaying tail.

    Unbounded, so the certified bound is intentionally loose (advisory
    warnings only); use left derivatives at t <= 0 for rate > 0.
    """
    deriv = HolderFunction(
        fn=lambda t: rate * np.exp(rate * t),
        bound=abs(rate),
        holder_const=rate * rate,
        name="exp'",
    )
    return HolderFunction(
        fn=lambda t: np.exp(rate * t),
        bound=1.0,
        holder_exp=1.0,
        holder_const=abs(rate),
        exact_derivative=deriv,
        left_limit=0.0 if rate > 0 else None,
        right_limit=0.0 if rate < 0 else None,
        name=f"exp(rate={rate:g})",
    )


def power_stationary(s: float, start: float = -3.0, clamp_radius: float = 1e-3) -> HolderFunction:
    """Clamped version of (t - start)_+^(s-1), stationary away from the clamp.

    The unclamped power has vanishing normalized derivative of order s for
    t > start; capping the singular spike at height clamp_radius^(s-1)
    perturbs that by O(clamp_radius^s) of the cap.  The jump at ``start``
    is deliberate: the spike is what balances the tail mass.
    """
    if not (0.0 < s < 1.0):
        raise ValueError("power exponent parameter must lie in (0, 1)")
    cap = clamp_radius ** (s - 1.0)

    def f(t):
        dt = t - start
        out = np.zeros_like(dt, dtype=float)
        pos = dt > 0.0
        out[pos] = np.minimum(dt[pos] ** (s - 1.0), cap)
        return out

    def df(t):
        dt = t - start
        out = np.zeros_like(dt, dtype=float)
        region = dt > clamp_radius
        out[region] = (s - 1.0) * dt[region] ** (s - 2.0)
        return out

    deriv = HolderFunction(
        fn=df,
        bound=(1.0 - s) * clamp_radius ** (s - 2.0),
        holder_const=(1.0 - s) * (2.0 - s) * clamp_radius ** (s - 3.0),
        name="power'",
    )
    return HolderFunction(
        fn=f,
        bound=cap,
        holder_exp=1.0,
        holder_const=(1.0 - s) * clamp_radius ** (s - 2.0),
        exact_derivative=deriv,
        feature_scale=0.25,
        corners=(start, start + clamp_radius),
        left_limit=0.0,
        right_limit=0.0,
        name=f"power_stationary(s={s:g}, start={start:g})",
    )


def linear() -> HolderFunction:
    """f(t) = t; its classical derivative is the constant 1."""
    return HolderFunction(
        fn=lambda t: np.asarray(t, dtype=float).copy(),
        bound=1.0,
        holder_exp=1.0,
        holder_const=1.0,
        exact_derivative=constant(1.0),
        name="linear",
    )


def from_samples(ts: Sequence[float], values: Sequence[float], name: str = "table") -> HolderFunction:
    """Cubic interpolant through samples, clamped to edge values outside."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if ts.ndim != 1 or ts.size < 4 or ts.size != values.size:
        raise ValueError("need at least 4 matching sample pairs")
    if np.any(np.diff(ts) <= 0.0):
        raise ValueError("sample abscissae must be strictly increasing")
    spline = CubicSpline(ts, values, bc_type="natural")
    dspline = spline.derivative()
    lo, hi = float(ts[0]), float(ts[-1])

    def f(t):
        tt = np.clip(t, lo, hi)
        return spline(tt)

    def df(t):
        inside = (t > lo) & (t < hi)
        out = np.zeros_like(t, dtype=float)
        out[inside] = dspline(t[inside])
        return out

    probe = np.linspace(lo, hi, max(2001, 4 * ts.size))
    d_max = float(np.max(np.abs(dspline(probe))))
    deriv = HolderFunction(fn=df, bound=d_max, holder_const=10.0 * d_max, name=f"{name}'")
    return HolderFunction(
        fn=f,
        bound=float(np.max(np.abs(values))),
        holder_exp=1.0,
        holder_const=d_max,
        exact_derivative=deriv,
        feature_scale=max(float(np.min(np.diff(ts))), 1e-6),
        name=name,
    )


def from_table(path: str) -> HolderFunction:
    """Load (t, value) rows from a CSV file with a header line."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigInvalid(f"table {path!r} must have two CSV columns (t, value)")
    return from_samples(data[:, 0], data[:, 1], name=f"table({path})")


_BUILDERS = {
    "constant": constant,
    "sine": sine,
    "bump": bump,
    "shifted-bump": shifted_bump,
    "exponential": exponential,
    "power-stationary": power_stationary,
    "linear": linear,
}


def resolve(name: str, parameters: dict | None = None) -> HolderFunction:
    """Build a corpus function from its CLI name and parameter map."""
    parameters = dict(parameters or {})
    if name == "table":
        path = parameters.pop("path", None)
        if not path:
            raise ConfigInvalid("table function needs a 'path' parameter")
        if parameters:
            raise ConfigInvalid(f"unknown table parameters: {sorted(parameters)}")
        return from_table(path)
    builder = _BUILDERS.get(name)
    if builder is None:
        raise ConfigInvalid(f"unknown function {name!r}; choose from {sorted([*_BUILDERS, 'table'])}")
    try:
        return builder(**parameters)
    except TypeError as exc:
        raise ConfigInvalid(f"bad parameters for {name!r}: {exc}") from None
    except ValueError as exc:
        raise ConfigInvalid(f"bad parameters for {name!r}: {exc}") from None
