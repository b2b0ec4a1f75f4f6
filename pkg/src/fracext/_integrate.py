"""Panel-based Gauss-Legendre machinery shared by the integral routines.

All integrands are plain callables mapping a float ndarray to a float
ndarray; every routine here is vectorized and deterministic.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ToleranceNotMet

# rel_tol is measured against the running magnitude plus this guard so
# integrals that are genuinely zero can still converge.
REL_GUARD = 1e-30

# Hard cap on composite panels; past this the doubling loop gives up.
_PANEL_CAP = 1 << 20

_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_rule(n: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights rescaled to the unit interval."""
    if n not in _gl_cache:
        x, w = np.polynomial.legendre.leggauss(n)
        _gl_cache[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _gl_cache[n]


def composite(fn: Callable, a: float, b: float, panels: int, nodes: int = 16) -> float:
    """Composite Gauss-Legendre sum over equal panels of [a, b]."""
    xs, ws = gauss_rule(nodes)
    h = (b - a) / panels
    edges = a + h * np.arange(panels)
    pts = (edges[:, None] + h * xs[None, :]).ravel()
    vals = np.asarray(fn(pts), dtype=float).reshape(panels, nodes)
    return float(h * (vals @ ws).sum())


def adaptive(
    fn: Callable,
    a: float,
    b: float,
    abs_tol: float,
    rel_tol: float,
    max_doublings: int,
    min_panels: int = 1,
    label: str = "integral",
) -> tuple[float, float]:
    """Panel-doubling quadrature on [a, b].

    Doubles the panel count until the increment satisfies both abs_tol and
    rel_tol (relative to the running magnitude). Returns (value, estimate)
    and raises ToleranceNotMet when the budget runs out.
    """
    if b <= a:
        return 0.0, 0.0
    panels = 1
    while panels < min_panels:
        panels *= 2
    prev = composite(fn, a, b, panels)
    cur = prev
    for _ in range(max_doublings):
        if panels * 2 > _PANEL_CAP:
            break
        panels *= 2
        cur = composite(fn, a, b, panels)
        est = abs(cur - prev)
        if est <= abs_tol and est <= rel_tol * (abs(cur) + REL_GUARD):
            return cur, est
        prev = cur
    raise ToleranceNotMet(
        f"{label}: no convergence with {panels} panels on [{a:g}, {b:g}]",
        value=prev,
        error=abs(cur - prev) if panels > 1 else np.inf,
    )


def dyadic_tail(
    fn: Callable,
    a: float,
    b: float,
    abs_tol: float,
    rel_tol: float,
    max_doublings: int,
    feature_scale: float = 1.0,
    extra_edges: tuple[float, ...] = (),
    label: str = "tail",
) -> tuple[float, float]:
    """Integrate fn over [a, b] on dyadic blocks [a*2^j, a*2^(j+1)].

    Each block starts with enough panels to resolve features of the given
    length scale, which keeps narrow structures (bump supports, kinks at
    block edges) from slipping between coarse panels.  Known non-smooth
    points of the integrand can be passed as extra block edges so panels
    never straddle them.
    """
    if b <= a:
        return 0.0, 0.0
    edges = [a]
    while edges[-1] * 2.0 < b:
        edges.append(edges[-1] * 2.0)
    edges.append(b)
    for x in extra_edges:
        if a < x < b:
            edges.append(float(x))
    edges = sorted(set(edges))
    n_blocks = len(edges) - 1
    block_abs = abs_tol / n_blocks
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        width = hi - lo
        mp = int(np.clip(np.ceil(width / (4.0 * feature_scale)), 8, 4096))
        v, e = adaptive(fn, lo, hi, block_abs, rel_tol, max_doublings, min_panels=mp, label=label)
        total += v
        err += e
    return total, err


def batched_panel_nodes(a: float, b: float, panels: int, nodes: int = 8):
    """Fixed composite node/weight arrays for batch (non-adaptive) sums."""
    xs, ws = gauss_rule(nodes)
    h = (b - a) / panels
    edges = a + h * np.arange(panels)
    pts = (edges[:, None] + h * xs[None, :]).ravel()
    wts = np.tile(h * ws, panels)
    return pts, wts
