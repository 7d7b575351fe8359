"""Duty-cycle optimization: log-grid scan followed by golden-section refinement."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from uwbcap.system import SystemParams

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _value(result):
    total = getattr(result, "total", result)
    return float(total)


def theta_floor(params: SystemParams) -> float:
    """Smallest duty cycle considered: one active chip per coherence period."""
    return min(1.0, 1.0 / (params.bandwidth_w * params.coherence_time_tc))


def golden_section_max(f, lo, hi, rel_tol=1e-6, max_iter=500):
    """Maximize a unimodal ``f`` on ``[lo, hi]``.

    Stops once the bracket width is below ``rel_tol`` times its midpoint.
    Returns ``(x, f(x))`` for the best point evaluated.
    """
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if (b - a) <= rel_tol * 0.5 * (a + b):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize_theta(
    bound,
    params: SystemParams | None = None,
    grid_points: int = 200,
    refine_tolerance: float = 1e-6,
    theta_min: float | None = None,
    max_workers: int | None = None,
):
    """Find the duty cycle maximizing ``bound(theta)`` over ``[theta_min, 1]``.

    Args:
        bound: callable of ``theta`` returning a float or an object with a
            ``total`` attribute (e.g. ``BoundBreakdown``).
        params: used for the default ``theta_min = 1 / (W T_c)``.
        grid_points: number of logarithmically spaced probes.
        refine_tolerance: relative bracket width at which golden-section
            refinement stops.
        max_workers: evaluate grid probes on a thread pool of this size.
            The result does not depend on it.

    Returns:
        ``(theta_star, bound(theta_star))``.

    Raises:
        ValueError: when the bound is not finite at a probe point.
    """
    if theta_min is None:
        if params is None:
            raise ValueError("either params or theta_min is required")
        theta_min = theta_floor(params)
    if not (0 < theta_min <= 1):
        raise ValueError(f"theta_min must lie in (0, 1], got {theta_min}")
    if grid_points < 3:
        raise ValueError("grid_points must be >= 3")

    grid = np.geomspace(theta_min, 1.0, grid_points)
    grid[-1] = 1.0

    def probe(theta):
        value = _value(bound(float(theta)))
        if not math.isfinite(value):
            raise ValueError(f"bound is not finite at theta={theta!r}")
        return value

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            values = list(pool.map(probe, grid))
    else:
        values = [probe(t) for t in grid]
    values = np.asarray(values)
    best = int(np.argmax(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid_points - 1)]
    theta_star, value = float(grid[best]), float(values[best])
    if hi > lo:
        cand, cand_value = golden_section_max(probe, lo, hi, refine_tolerance)
        if cand_value > value:
            theta_star, value = cand, cand_value
    return theta_star, bound(theta_star)
