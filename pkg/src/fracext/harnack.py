"""Nonnegative stationary functions and empirical Harnack windows.

A function is stationary on an interval J when its one-sided fractional
derivative vanishes there.  Such functions obey a forward-in-time
Harnack inequality: the sup over a window BEFORE t0 is controlled by the
inf over a window strictly AFTER it.  This module constructs stationary
functions numerically from prescribed history data, re-validates them
against the independent quadrature route, and measures sup/inf ratios
over the two window geometries so the constant can be bounded
empirically from below.

Construction uses the binomial-weight discretization

    h^(-s) * sum_k g_k phi(t - k h) = 0,     g_k = (-1)^k C(s, k),

whose weights are nonpositive for k >= 1 and sum to zero, so marching
forward expresses each new value as a sub-convex combination of its
history: nonnegative data stays nonnegative and constants are exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NegativeValues, ResidualTooLarge, WindowOutsideJ
from .quadrature import DEFAULT_SPEC, HolderFunction, Order, QuadratureSpec, Side, marchaud

__all__ = [
    "HarnackWindow",
    "RemarkWindow",
    "StationaryFunction",
    "GammaEstimate",
    "grunwald_weights",
    "solve_stationary",
    "harnack_ratio",
    "harnack_ratio_remark",
    "gamma_estimate",
    "gamma_table_to_csv",
]


@dataclass(frozen=True)
class HarnackWindow:
    """Windows of the forward-in-time inequality around t0 at scale delta.

    The sup window [t0 - 3d/4, t0 - d/4] lies strictly before the inf
    window [t0 + 3d/4, t0 + d]; the waiting time between them is the
    parabolic structure and must not be collapsed.
    """

    t0: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("window scale delta must be positive")
        assert self.sup_interval[1] < self.inf_interval[0]

    @classmethod
    def from_parabolic_radius(cls, t0: float, rho: float) -> "HarnackWindow":
        """Radius parametrization: time windows scale with rho^2."""
        return cls(t0, rho * rho)

    @property
    def sup_interval(self) -> tuple[float, float]:
        return (self.t0 - 0.75 * self.delta, self.t0 - 0.25 * self.delta)

    @property
    def inf_interval(self) -> tuple[float, float]:
        return (self.t0 + 0.75 * self.delta, self.t0 + self.delta)

    @property
    def span(self) -> tuple[float, float]:
        return (self.t0 - self.delta, self.t0 + self.delta)


@dataclass(frozen=True)
class RemarkWindow:
    """Equivalent windows parametrized around a right endpoint tau."""

    tau: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("window scale delta must be positive")

    @property
    def interval(self) -> tuple[float, float]:
        return (self.tau - 15.0 * self.delta / 8.0, self.tau + self.delta / 8.0)

    @property
    def sup_interval(self) -> tuple[float, float]:
        return (self.tau - 15.0 * self.delta / 8.0, self.tau - 7.0 * self.delta / 4.0)

    @property
    def inf_interval(self) -> tuple[float, float]:
        return (self.tau - self.delta / 8.0, self.tau + self.delta / 8.0)

    @property
    def span(self) -> tuple[float, float]:
        return self.interval


@dataclass(frozen=True)
class StationaryFunction:
    """A nonnegative function with vanishing derivative of order s on J."""

    fn: HolderFunction
    interval: tuple[float, float]
    order: Order
    residual: float
    grid_t: np.ndarray
    grid_values: np.ndarray

    def __call__(self, t):
        return self.fn(t)

    def scaled(self, lam: float) -> "StationaryFunction":
        """lam * phi; stationarity and windows are scale-invariant."""
        if lam <= 0.0:
            raise ValueError("scaling must be positive")
        base = self.fn
        scaled_fn = HolderFunction(
            fn=lambda t, b=base, m=lam: m * b(t),
            bound=lam * base.bound,
            holder_exp=base.holder_exp,
            holder_const=lam * base.holder_const,
            feature_scale=base.feature_scale,
            corners=base.corners,
            left_limit=None if base.left_limit is None else lam * base.left_limit,
            right_limit=None if base.right_limit is None else lam * base.right_limit,
            name=f"{lam:g}*{base.name}",
        )
        return StationaryFunction(scaled_fn, self.interval, self.order,
                                  self.residual * lam, self.grid_t, lam * self.grid_values)


@dataclass(frozen=True)
class GammaEstimate:
    """Empirical envelope for the Harnack constant; a lower bound only."""

    gamma: float
    rows: tuple[tuple[float, float, float, float, float], ...]  # (t0, delta, sup, inf, ratio)


def grunwald_weights(s: float, count: int) -> np.ndarray:
    """Binomial weights g_k = (-1)^k C(s, k) by the stable recurrence."""
    g = np.empty(count)
    g[0] = 1.0
    for k in range(1, count):
        g[k] = g[k - 1] * (k - 1.0 - s) / k
    return g


def solve_stationary(
    J: tuple[float, float],
    exterior: HolderFunction,
    s: Order,
    n: int = 2000,
    history_factor: float = 40.0,
    residual_threshold: float = 1e-3,
    spec: QuadratureSpec = DEFAULT_SPEC,
    n_residual_samples: int = 7,
) -> StationaryFunction:
    """Construct phi >= 0 with vanishing derivative of order s inside J.

    History data on (inf J - history_factor*|J|, inf J) comes from the
    prescribed exterior; interior values are marched from the binomial
    discretization and the result is re-validated by evaluating the
    independent quadrature route on the interpolant.  The measured
    residual (normalized derivative, relative to the value scale) must
    stay below residual_threshold.

    The exterior must declare its left limit (or be exactly constant
    before the history window); the weights beyond the window are summed
    against that limit so history truncation costs nothing for data that
    has settled.
    """
    lo, hi = float(J[0]), float(J[1])
    if hi <= lo:
        raise ValueError("interval J must have positive length")
    if exterior.holder_const == 0.0:
        # Constant exterior: constants are stationary for every order.
        c = exterior.value_at(lo)
        t_grid = np.linspace(lo - history_factor * (hi - lo), hi, n + 1)
        vals = np.full_like(t_grid, c)
        return StationaryFunction(exterior, (lo, hi), s, 0.0, t_grid, vals)
    length = hi - lo
    h = length / n
    n_hist = int(math.ceil(history_factor * length / h))
    t_grid = lo + h * np.arange(-n_hist, n + 1)
    values = np.empty_like(t_grid)
    values[: n_hist] = exterior(t_grid[: n_hist])
    if np.any(values[: n_hist] < 0.0):
        raise NegativeValues("exterior history data must be nonnegative")

    far_limit = exterior.left_limit
    if far_limit is None:
        far_limit = float(exterior.value_at(t_grid[0] - 1000.0 * length))
    g = grunwald_weights(s.s, n_hist + n + 1)
    partial = np.cumsum(g)  # sum_{k<=K} g_k; the tail beyond K sums to -partial[K]
    conv = -g[1:]  # nonnegative, sums to < 1
    for i in range(n_hist, n_hist + n + 1):
        values[i] = float(np.dot(conv[: i], values[i - 1 :: -1][: i])) + far_limit * partial[i]

    scale = float(np.max(np.abs(values[n_hist:]))) or 1.0
    if values[n_hist:].min() < -1e-9 * scale:
        raise NegativeValues(
            f"stationary march produced negative values (min {values[n_hist:].min():.3e})"
        )
    np.clip(values, 0.0, None, out=values)

    spline = CubicSpline(t_grid, values, bc_type="natural")
    dspline = spline.derivative()
    t_lo, t_hi = float(t_grid[0]), float(t_grid[-1])
    d_max = float(np.max(np.abs(dspline(t_grid)))) + 1e-30

    def fn(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        left = t < t_lo
        right = t > t_hi
        mid = ~(left | right)
        out[mid] = spline(t[mid])
        if left.any():
            out[left] = exterior(t[left])
        if right.any():
            out[right] = values[-1]
        return out

    base = HolderFunction(
        fn=fn,
        bound=max(float(np.max(values)), exterior.bound),
        holder_exp=1.0,
        holder_const=max(d_max, exterior.holder_const),
        feature_scale=max(length / 50.0, h * 4.0),
        corners=exterior.corners,
        left_limit=far_limit,
        right_limit=float(values[-1]),
        name=f"stationary(s={s.s:g}, J=({lo:g},{hi:g}))",
    )

    # Independent validation: the quadrature route on the interpolant.
    offsets = np.linspace(0.15, 0.95, n_residual_samples)
    resid = 0.0
    for off in offsets:
        r = marchaud(base, lo + off * length, s, side=Side.LEFT, normalized=True, spec=spec)
        resid = max(resid, abs(r.value))
    resid /= scale
    if resid > residual_threshold:
        raise ResidualTooLarge(
            f"stationarity residual {resid:.3e} exceeds threshold {residual_threshold:.3e}"
        )
    return StationaryFunction(base, (lo, hi), s, resid, t_grid, values)


def _window_ratio(phi: StationaryFunction, span, sup_iv, inf_iv, n_samples: int) -> float:
    lo, hi = phi.interval
    if span[0] < lo or span[1] > hi:
        raise WindowOutsideJ(
            f"window [{span[0]:g}, {span[1]:g}] must sit inside J = [{lo:g}, {hi:g}]"
        )
    sup_pts = np.linspace(sup_iv[0], sup_iv[1], n_samples)
    inf_pts = np.linspace(inf_iv[0], inf_iv[1], n_samples)
    top = float(np.max(phi(sup_pts)))
    bot = float(np.min(phi(inf_pts)))
    if bot <= 0.0:
        # Strong-maximum behavior: only phi = 0 could satisfy the bound.
        return math.inf if top > 0.0 else 1.0
    return top / bot


def harnack_ratio(phi: StationaryFunction, window: HarnackWindow, n_samples: int = 64) -> float:
    """sup over the earlier window divided by inf over the later one."""
    return _window_ratio(phi, window.span, window.sup_interval, window.inf_interval, n_samples)


def harnack_ratio_remark(phi: StationaryFunction, window: RemarkWindow, n_samples: int = 64) -> float:
    """Same quantity in the right-endpoint window parametrization."""
    return _window_ratio(phi, window.span, window.sup_interval, window.inf_interval, n_samples)


def gamma_estimate(
    phi: StationaryFunction,
    t0_values: Sequence[float],
    delta_values: Sequence[float],
    n_samples: int = 64,
) -> GammaEstimate:
    """Max window ratio over a (t0, delta) grid: a lower bound for gamma."""
    rows = []
    worst = 0.0
    for t0 in t0_values:
        for d in delta_values:
            w = HarnackWindow(t0, d)
            sup_pts = np.linspace(*w.sup_interval, n_samples)
            inf_pts = np.linspace(*w.inf_interval, n_samples)
            top = float(np.max(phi(sup_pts)))
            bot = float(np.min(phi(inf_pts)))
            ratio = _window_ratio(phi, w.span, w.sup_interval, w.inf_interval, n_samples)
            rows.append((t0, d, top, bot, ratio))
            if ratio > worst:
                worst = ratio
    return GammaEstimate(worst, tuple(rows))


def gamma_table_to_csv(estimate: GammaEstimate, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t0", "delta", "sup", "inf", "ratio"])
        for row in estimate.rows:
            writer.writerow([f"{v:.17g}" for v in row])
