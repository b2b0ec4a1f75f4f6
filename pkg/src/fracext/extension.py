"""The heat-conduction extension of a boundary function and its traces.

For boundary data f and order s, the extension to the upper half plane is
the probability average

    U(x, t) = integral_0^inf psi(tau) f(t - tau x^2) dtau,

and the two boundary limits

    trace(x) = -c_s x^(-2s) (U(x, t) - f(t)),      c_s = 4^s Gamma(s),
    flux(x)  = -c_s x^(1-2s) dU/dx (x, t),

recover the fractional derivative of f as x -> 0+ (the flux carries an
extra factor 2s, which flux_limit reports both raw and corrected).

Numerically everything reduces to mollified versions of the Marchaud
integral: with xi = x^2/(4 tau),

    trace(x) = integral_0^inf e^(-xi) (f(t) - f(t -/+ tau)) tau^(-1-s) dtau
    flux(x)  = integral_0^inf e^(-xi) (2s - 2 xi) (f(t) - f(t -/+ tau)) tau^(-1-s) dtau

which are evaluated with the same split/tail machinery as the direct
quadrature route and are uniformly conditioned as x -> 0.  The mollifier
also annihilates the sub-resolution lag region, so no local-model
subtraction is needed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammainc

from ._integrate import adaptive, batched_panel_nodes, dyadic_tail
from .errors import MissingDerivative, NonConvergent
from .quadrature import (
    DEFAULT_SPEC,
    HolderFunction,
    Order,
    QuadratureSpec,
    Side,
    _lag_corners,
    marchaud,
)

__all__ = [
    "ExtensionQuery",
    "LimitSchedule",
    "TraceResult",
    "FluxResult",
    "ComposeResult",
    "extend",
    "extend_batch",
    "trace_limit",
    "flux_limit",
    "backward_extend",
    "compose_check",
    "compose_check_many",
]


def extension_constant(s: float) -> float:
    """The normalizing constant 4^s Gamma(s) of the extension kernel."""
    return 4.0**s * math.gamma(s)


@dataclass(frozen=True)
class ExtensionQuery:
    """Point evaluation request for the extension; x strictly positive."""

    x: float
    t: float
    s: Order
    f: HolderFunction
    spec: QuadratureSpec = DEFAULT_SPEC

    def __post_init__(self):
        if self.x <= 0.0:
            raise ValueError("extension evaluation requires x > 0; use trace_limit at the boundary")


@dataclass(frozen=True)
class LimitSchedule:
    """Decreasing x values along which a boundary limit is evaluated."""

    x_values: tuple[float, ...]
    extrapolation: str = "richardson"

    def __post_init__(self):
        xs = self.x_values
        if len(xs) < 2:
            raise ValueError("schedule needs at least two x values")
        if any(b >= a for a, b in zip(xs, xs[1:])):
            raise ValueError("x values must be strictly decreasing")
        if xs[-1] < 1e-4:
            raise ValueError("smallest x is capped at 1e-4 to keep the quadrature conditioned")
        if self.extrapolation not in ("none", "richardson"):
            raise ValueError("extrapolation must be 'none' or 'richardson'")

    @classmethod
    def geometric(cls, start: float = 0.5, ratio: float = 0.5, count: int = 8,
                  extrapolation: str = "richardson") -> "LimitSchedule":
        return cls(tuple(start * ratio**k for k in range(count)), extrapolation)


DEFAULT_SCHEDULE = LimitSchedule.geometric()


@dataclass(frozen=True)
class TraceResult:
    value: float
    table: tuple[tuple[float, float], ...]
    observed_order: float
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class FluxResult:
    raw: float
    corrected: float  # raw / (2s)
    table: tuple[tuple[float, float], ...]
    observed_order: float


@dataclass(frozen=True)
class ComposeResult:
    value: float
    outer_tail_bound: float
    warnings: tuple[str, ...] = ()


def _mollified_integral(
    f: HolderFunction,
    t: float,
    s: float,
    x: float,
    side: Side,
    spec: QuadratureSpec,
    kind: str,
) -> float:
    """Shared evaluator for the trace ("trace") and flux ("flux") integrands."""
    if f.holder_const == 0.0:
        # Constant data: the difference integrand vanishes identically.
        return 0.0
    sgn = side.sign
    delta = spec.split_delta
    cutoff = spec.tail_cutoff
    f_t = f.value_at(t)
    q = 0.25 * x * x  # xi = q / tau

    def moll(tau: np.ndarray) -> np.ndarray:
        xi = q / tau
        e = np.where(xi < 700.0, np.exp(-np.minimum(xi, 700.0)), 0.0)
        if kind == "flux":
            return e * (2.0 * s - 2.0 * xi)
        return e

    def mollified_far_integral(from_tau: float) -> float:
        # int_{from_tau}^inf m(tau) tau^(-1-s) dtau via the regularized
        # incomplete gamma (exact, carries the mollifier to infinity).
        xi = q / from_tau
        if kind == "flux":
            return q ** (-s) * 2.0 * math.gamma(s + 1.0) * float(
                gammainc(s, xi) - gammainc(s + 1.0, xi)
            )
        return q ** (-s) * math.gamma(s) * float(gammainc(s, xi))

    # Closed-form tail integral of the constant part f(t).
    const_tail = f_t * mollified_far_integral(delta)
    limit = f.left_limit if side is Side.LEFT else f.right_limit
    if limit is not None and limit != 0.0:
        const_tail -= limit * mollified_far_integral(cutoff)

    # Singular side: below tau_lo the mollifier has underflowed to zero.
    tau_lo = max(q / 700.0, 1e-300)
    corners = _lag_corners(f, t, sgn)
    sing = 0.0
    if tau_lo < delta:
        edges = [math.log(tau_lo)]
        edges += [math.log(c) for c in corners if tau_lo < c < delta]
        edges.append(math.log(delta))

        def singular(v: np.ndarray) -> np.ndarray:
            tau = np.exp(v)
            diff = f_t - f(t - sgn * tau)
            return moll(tau) * diff * tau ** (-s)

        for lo_v, hi_v in zip(edges[:-1], edges[1:]):
            val, _ = adaptive(
                singular,
                lo_v,
                hi_v,
                spec.abs_tol / (len(edges) - 1),
                spec.rel_tol,
                spec.max_subdivisions,
                min_panels=64,
                label=f"{kind} singular part",
            )
            sing += val

    def shifted(tau: np.ndarray) -> np.ndarray:
        return moll(tau) * np.asarray(f(t - sgn * tau), dtype=float) * tau ** (-1.0 - s)

    tail_num, _ = dyadic_tail(
        shifted,
        delta,
        cutoff,
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
        feature_scale=f.feature_scale,
        extra_edges=corners,
        label=f"{kind} tail part",
    )
    return sing + const_tail - tail_num


def extend(q: ExtensionQuery) -> float:
    """Value of the extension at (x, t).

    Computed through the deficit identity U = f(t) - x^(2s) trace(x)/c_s,
    whose integrand is uniformly conditioned for small and large x.
    """
    s = q.s.s
    trace = _mollified_integral(q.f, q.t, s, q.x, Side.LEFT, q.spec, "trace")
    return q.f.value_at(q.t) - q.x ** (2.0 * s) * trace / extension_constant(s)


def backward_extend(f: HolderFunction, x: float, t: float, s: Order,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Extension of the time-reversed problem: averages the future of f."""
    if x <= 0.0:
        raise ValueError("backward extension requires x > 0")
    trace = _mollified_integral(f, t, s.s, x, Side.RIGHT, spec, "trace")
    return f.value_at(t) - x ** (2.0 * s.s) * trace / extension_constant(s.s)


def _neville(xs: Sequence[float], vals: Sequence[float], exponents: Sequence[float]) -> list[float]:
    """Eliminate known error orders x^q from a limit table, in sequence."""
    col = list(vals)
    pts = list(xs)
    for q in exponents:
        if len(col) < 2:
            break
        nxt = []
        for k in range(len(col) - 1):
            r = (pts[k + 1] / pts[k]) ** q
            nxt.append(col[k + 1] + (col[k + 1] - col[k]) * r / (1.0 - r))
        col = nxt
        pts = pts[1:]
    return col


def _observed_order(xs: Sequence[float], vals: Sequence[float]) -> float:
    diffs = [abs(b - a) for a, b in zip(vals, vals[1:])]
    orders = []
    for k in range(len(diffs) - 1):
        if diffs[k + 1] > 0.0 and diffs[k] > 0.0:
            orders.append(math.log(diffs[k] / diffs[k + 1]) / math.log(xs[k] / xs[k + 1]))
    return float(np.median(orders)) if orders else float("nan")


def _limit_from_table(xs, vals, s, extrapolation, tol, what):
    observed = _observed_order(xs, vals)
    if extrapolation == "none":
        limit = vals[-1]
        spread = abs(vals[-1] - vals[-2])
    else:
        # Leading corrections of the mollified integral at x -> 0 are
        # x^(2-2s) (from the local Holder behavior) and x^2 (from the
        # smooth far field); eliminating both plus one cross term leaves
        # a fast-converging column.  Keep at least two entries so the
        # Cauchy check stays meaningful.
        exps = [2.0 - 2.0 * s, 2.0, 4.0 - 2.0 * s][: max(1, len(xs) - 2)]
        col = _neville(xs, vals, exps)
        limit = col[-1]
        spread = abs(col[-1] - col[-2]) if len(col) >= 2 else abs(vals[-1] - vals[-2])
    if not math.isfinite(limit) or spread > tol * (1.0 + abs(limit)):
        raise NonConvergent(
            f"{what}: extrapolated column not Cauchy (spread {spread:.3e}, "
            f"observed order {observed:.3f})"
        )
    return limit, observed


def trace_limit(
    f: HolderFunction,
    t: float,
    s: Order,
    schedule: LimitSchedule = DEFAULT_SCHEDULE,
    spec: QuadratureSpec = DEFAULT_SPEC,
    side: Side = Side.LEFT,
    tol: float = 1e-4,
) -> TraceResult:
    """Fractional derivative of f as the boundary trace of its extension.

    Returns the extrapolated x -> 0 limit of -c_s x^(-2s)(U(x,t) - f(t))
    together with the raw per-x table.  The limit equals the unnormalized
    Marchaud integral.
    """
    xs = schedule.x_values
    vals = [_mollified_integral(f, t, s.s, x, side, spec, "trace") for x in xs]
    if f.holder_const == 0.0:
        return TraceResult(0.0, tuple(zip(xs, vals)), float("nan"))
    limit, observed = _limit_from_table(xs, vals, s.s, schedule.extrapolation, tol, "trace_limit")
    return TraceResult(limit, tuple(zip(xs, vals)), observed)


def flux_limit(
    f: HolderFunction,
    t: float,
    s: Order,
    schedule: LimitSchedule = DEFAULT_SCHEDULE,
    spec: QuadratureSpec = DEFAULT_SPEC,
    side: Side = Side.LEFT,
    tol: float = 1e-4,
) -> FluxResult:
    """Fractional derivative of f as the boundary flux of its extension.

    The raw limit of -c_s x^(1-2s) dU/dx carries the factor 2s relative
    to the trace route; both the raw value and raw/(2s) are returned.
    """
    xs = schedule.x_values
    vals = [_mollified_integral(f, t, s.s, x, side, spec, "flux") for x in xs]
    if f.holder_const == 0.0:
        return FluxResult(0.0, 0.0, tuple(zip(xs, vals)), float("nan"))
    limit, observed = _limit_from_table(xs, vals, s.s, schedule.extrapolation, tol, "flux_limit")
    return FluxResult(limit, limit / (2.0 * s.s), tuple(zip(xs, vals)), observed)


def _batch_nodes(s: float, x: float, spec: QuadratureSpec, feature_scale: float,
                 tail_cap: float):
    """Fixed quadrature nodes for the batched trace evaluation."""
    q = 0.25 * x * x
    delta = spec.split_delta
    tau_lo = max(q / 700.0, 1e-300)
    pieces = []
    if tau_lo < delta:
        v_pts, v_wts = batched_panel_nodes(math.log(tau_lo), math.log(delta), 768, nodes=8)
        pieces.append(("log", v_pts, v_wts))
    edges = [delta]
    hi = min(spec.tail_cutoff, tail_cap)
    while edges[-1] * 2.0 < hi:
        edges.append(edges[-1] * 2.0)
    edges.append(hi)
    for lo, b in zip(edges[:-1], edges[1:]):
        panels = int(np.clip(np.ceil((b - lo) / (2.0 * feature_scale)), 24, 2048))
        p_pts, p_wts = batched_panel_nodes(lo, b, panels, nodes=8)
        pieces.append(("lin", p_pts, p_wts))
    return pieces


def extend_batch(f: HolderFunction, xs: Sequence[float], t: float, s: Order,
                 spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Extension values at many x for one t, on fixed (non-adaptive) nodes.

    Accuracy is set by the node density (about 1e-8 for the corpus); used
    to seed and validate PDE solves where thousands of evaluations are
    needed.
    """
    s_val = s.s
    f_t = f.value_at(t)
    out = np.empty(len(xs), dtype=float)
    for i, x in enumerate(xs):
        if x == 0.0:
            out[i] = f_t
            continue
        trace = _trace_fixed_nodes(f, np.array([t]), s_val, float(x), spec)[0]
        out[i] = f_t - x ** (2.0 * s_val) * trace / extension_constant(s_val)
    return out


def _trace_fixed_nodes(f: HolderFunction, ts: np.ndarray, s: float, x: float,
                       spec: QuadratureSpec, tail_cap: float = 4096.0) -> np.ndarray:
    """Trace integrand summed on fixed nodes for a whole grid of t values."""
    if f.holder_const == 0.0:
        return np.zeros_like(np.asarray(ts, dtype=float))
    q = 0.25 * x * x
    delta = spec.split_delta
    f_ts = np.asarray(f(ts), dtype=float)
    xi_delta = q / delta
    const_tail = f_ts * q ** (-s) * math.gamma(s) * gammainc(s, xi_delta)
    total = const_tail
    cap = min(spec.tail_cutoff, tail_cap)
    if f.left_limit is not None and f.left_limit != 0.0:
        total = total - f.left_limit * q ** (-s) * math.gamma(s) * float(gammainc(s, q / cap))
    for kind, pts, wts in _batch_nodes(s, x, spec, f.feature_scale, tail_cap):
        if kind == "log":
            tau = np.exp(pts)
            xi = q / tau
            e = np.where(xi < 700.0, np.exp(-np.minimum(xi, 700.0)), 0.0)
            w_eff = wts * e * tau ** (-s)
            # chunk the t-grid to bound the (t, tau) matrix size
            contrib = np.empty_like(ts)
            for lo in range(0, len(ts), 256):
                sl = slice(lo, lo + 256)
                diff = f_ts[sl, None] - f(ts[sl, None] - tau[None, :])
                contrib[sl] = diff @ w_eff
            total = total + contrib
        else:
            tau = pts
            xi = q / tau
            e = np.where(xi < 700.0, np.exp(-np.minimum(xi, 700.0)), 0.0)
            w_eff = wts * e * tau ** (-1.0 - s)
            contrib = np.empty_like(ts)
            for lo in range(0, len(ts), 256):
                sl = slice(lo, lo + 256)
                vals = np.asarray(f(ts[sl, None] - tau[None, :]), dtype=float)
                contrib[sl] = -(vals @ w_eff)
            total = total + contrib
    return total


def _trace_batch(f: HolderFunction, ts: np.ndarray, s: float, spec: QuadratureSpec,
                 xs: Sequence[float] = (0.4, 0.2, 0.1, 0.05, 0.025)) -> np.ndarray:
    """Extrapolated trace values on a whole t grid (inner loop of compose)."""
    tables = np.stack([_trace_fixed_nodes(f, ts, s, x, spec) for x in xs])
    cols = [tables[i] for i in range(len(xs))]
    pts = list(xs)
    for qexp in [2.0 - 2.0 * s, 2.0, 4.0 - 2.0 * s]:
        if len(cols) < 2:
            break
        nxt = []
        for k in range(len(cols) - 1):
            r = (pts[k + 1] / pts[k]) ** qexp
            nxt.append(cols[k + 1] + (cols[k + 1] - cols[k]) * (r / (1.0 - r)))
        cols = nxt
        pts = pts[1:]
    return cols[-1]


def compose_check_many(
    f: HolderFunction,
    points: Sequence[float],
    s: Order,
    spec: QuadratureSpec = DEFAULT_SPEC,
    grid_radius: float = 400.0,
    grid_step: float = 0.1,
    tail_tolerance: Optional[float] = None,
) -> list[ComposeResult]:
    """compose_check at several points sharing one inner tabulation."""
    if f.exact_derivative is None:
        raise MissingDerivative("the composition check needs a smooth f with an exact derivative")
    s_in = s.s
    s_out = 1.0 - s_in
    norm_in = s_in / math.gamma(1.0 - s_in)

    margin = 4.0
    lo_t = min(points) - grid_radius - margin
    hi_t = max(points) + margin
    n = int(math.ceil((hi_t - lo_t) / grid_step)) + 1
    ts = np.linspace(lo_t, hi_t, n)
    inner = _trace_batch(f, ts, s_in, spec) * norm_in

    spline = CubicSpline(ts, inner, bc_type="natural")
    dspline = spline.derivative()
    g_max = float(np.max(np.abs(inner)))
    dg_max = float(np.max(np.abs(dspline(ts))))
    lo, hi = float(ts[0]), float(ts[-1])

    def g_fn(u):
        uu = np.clip(u, lo, hi)
        return spline(uu)

    def dg_fn(u):
        inside = (u > lo) & (u < hi)
        out = np.zeros_like(u, dtype=float)
        out[inside] = dspline(u[inside])
        return out

    g = HolderFunction(
        fn=g_fn,
        bound=g_max * 1.0000001 + 1e-300,
        holder_exp=1.0,
        holder_const=dg_max * 1.05 + 1e-300,
        exact_derivative=HolderFunction(fn=dg_fn, bound=dg_max + 1e-300,
                                        holder_const=10.0 * dg_max + 1.0, name="inner'"),
        feature_scale=max(f.feature_scale, 8.0 * grid_step),
        name="inner trace derivative",
    )
    outer_spec = QuadratureSpec(
        split_delta=spec.split_delta,
        tail_cutoff=grid_radius,
        abs_tol=max(spec.abs_tol, 1e-9),
        rel_tol=spec.rel_tol,
        max_subdivisions=spec.max_subdivisions,
    )
    tail_bound = g_max * grid_radius ** (-s_out) / s_out
    if tail_tolerance is not None and tail_bound > tail_tolerance:
        from .errors import GridTooNarrow

        raise GridTooNarrow(
            f"outer tail bound {tail_bound:.3e} exceeds tolerance {tail_tolerance:.3e}"
        )
    results = []
    for t in points:
        outer = marchaud(g, t, Order(s_out), side=Side.LEFT, normalized=True, spec=outer_spec)
        warnings = list(outer.warnings)
        if tail_bound > 1e-2 * (1.0 + abs(outer.value)):
            warnings.append(
                f"crude outer-tail bound {tail_bound:.3e} is not small; "
                "accuracy relies on decay or oscillation of the inner derivative"
            )
        results.append(ComposeResult(outer.value, tail_bound, tuple(warnings)))
    return results


def compose_check(
    f: HolderFunction,
    t: float,
    s: Order,
    spec: QuadratureSpec = DEFAULT_SPEC,
    grid_radius: float = 400.0,
    grid_step: float = 0.1,
    tail_tolerance: Optional[float] = None,
) -> ComposeResult:
    """Apply the complementary derivative of order 1-s to the trace-route
    derivative of order s; for smooth f the result approximates f'(t).

    The inner derivative is tabulated on a uniform grid left of t (the
    outer integral only consumes history), interpolated cubically, and fed
    through the direct quadrature route with its tail truncated at the
    grid radius.  The crude outer-tail bound M R^(-(1-s))/(1-s) is
    reported; it cannot see oscillatory decay, so by default it is only a
    warning (pass tail_tolerance to make it a hard error).
    """
    return compose_check_many(f, [t], s, spec, grid_radius, grid_step, tail_tolerance)[0]
