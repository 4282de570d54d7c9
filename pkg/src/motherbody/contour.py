"""Continuation-coupled contour quadrature.

Period-type integrals on the spectral curve integrate a difference of two
root branches along a path between branch points.  Near a simple branch
point the branch pair behaves like a Puiseux series in sqrt(distance), so
each endpoint gets a power substitution that renders the integrand
analytic; Gauss-Legendre panels then converge spectrally.  Root values at
the quadrature nodes are obtained by marching the full root triple along
the path from a seed supplied away from the singular endpoints, with
local step refinement wherever sheets approach each other.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .curve import CurveParams, solve_cubic_xi, _match_step
from .errors import ContinuationAmbiguous, QuadratureNotConverged


@lru_cache(maxsize=32)
def gl_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def panel_nodes(a: float, b: float, panels: int, order: int):
    """Composite GL nodes/weights on [a, b] with uniform panels."""
    x, w = gl_rule(order)
    edges = np.linspace(a, b, panels + 1)
    widths = np.diff(edges)
    nodes = (edges[:-1, None] + widths[:, None] * x[None, :]).ravel()
    weights = (widths[:, None] * w[None, :]).ravel()
    return nodes, weights


def _refine_between(params, z0, r0, z1, depth=60):
    """Root triple at z1 continued from (z0, r0), splitting as needed."""
    new, ok = _match_step(r0, solve_cubic_xi(params, z1))
    if ok:
        return new
    if depth <= 0 or abs(z1 - z0) < 1e-13 * (1.0 + abs(z0)):
        raise ContinuationAmbiguous(
            f"sheets inseparable between z={z0} and z={z1}")
    mid = 0.5 * (z0 + z1)
    rm = _refine_between(params, z0, r0, mid, depth - 1)
    return _refine_between(params, mid, rm, z1, depth - 1)


def values_along(
    params: CurveParams,
    zs: np.ndarray,
    seed: np.ndarray,
    seed_at: complex | None = None,
) -> np.ndarray:
    """Track the root triple through the ordered points ``zs``.

    ``seed`` holds the three root values in tracking order, either at
    ``zs[0]`` itself or at the nearby point ``seed_at`` from which the
    triple is first continued to ``zs[0]``.  Returns an array of shape
    ``(len(zs), 3)`` whose columns are analytic branches along the path;
    no point is skipped, refinement happens invisibly between points.
    """
    zs = np.asarray(zs, dtype=complex)
    seed = np.asarray(seed, dtype=complex)
    R = solve_cubic_xi(params, zs)
    out = np.empty_like(R)
    if seed_at is not None and seed_at != zs[0]:
        cur = _refine_between(params, seed_at, seed, zs[0])
    else:
        cur, ok = _match_step(seed, R[0])
        if not ok:
            raise ContinuationAmbiguous(
                f"seed does not identify the root triple at z={zs[0]}")
    out[0] = cur
    for k in range(len(zs) - 1):
        new, ok = _match_step(cur, R[k + 1])
        if not ok:
            new = _refine_between(params, zs[k], cur, zs[k + 1])
        cur = new
        out[k + 1] = cur
    return out


def _half_nodes(m: int, panels: int, order: int):
    """Substituted nodes for one half-interval: sigma = (1/2) u^m, u in [0,1].

    Returns (sigma, dsigma-weights) with sigma ascending from 0 to 1/2.
    The composite integrand is analytic in u whenever the integrand has a
    Puiseux expansion in sigma^(1/m) at the endpoint, including branch
    differences that blow up like sigma^((1-m)/m).
    """
    u, wu = panel_nodes(0.0, 1.0, panels, order)
    sigma = 0.5 * u ** m
    weights = 0.5 * m * u ** (m - 1) * wu
    return sigma, weights


def pair_difference_integral(
    params: CurveParams,
    a: complex,
    b: complex,
    seed_mid: np.ndarray,
    f: Callable | None = None,
    *,
    exp_a: int = 2,
    exp_b: int = 2,
    rtol: float = 1e-10,
    order: int = 16,
    panels: int = 10,
    seed_at: complex | None = None,
    detail: bool = False,
):
    """Integral of f(z, xi_0) - f(z, xi_1) from a to b along the chord.

    ``seed_mid`` holds the root triple in tracking order at the chord
    midpoint, or at ``seed_at`` from which it is first bridged to the
    midpoint along a straight segment.  The difference is taken between
    tracked branches 0 and 1, so the endpoints may be branch points
    where those branches collide.
    ``exp_a``/``exp_b`` are the endpoint substitution exponents (2 for a
    square-root branch point, 3 where all three sheets collide with
    cube-root behaviour, 1 for a regular endpoint).  Larger exponents
    than the local Puiseux denominator are counterproductive: they push
    nodes so close to the collision that root-finding noise exceeds the
    branch separations and tracking fails.  With ``f=None`` the branch values
    themselves are integrated.  The result is recomputed on a finer rule;
    disagreement beyond ``rtol`` (relative to max(1, |I|)) raises
    QuadratureNotConverged.  With ``detail=True`` returns
    ``(value, error_estimate)`` instead of the bare value.
    """
    if f is None:
        f = lambda z, xi: xi

    d = b - a
    zmid = a + 0.5 * d
    seed_mid = np.asarray(seed_mid, dtype=complex)
    if seed_at is not None and seed_at != zmid:
        seed_mid = _refine_between(params, seed_at, seed_mid, zmid)

    def evaluate(panels_: int, order_: int) -> complex:
        sig_a, w_a = _half_nodes(exp_a, panels_, order_)
        sig_b, w_b = _half_nodes(exp_b, panels_, order_)
        z_lo = a + sig_a * d                  # ascending from a toward mid
        z_hi = b - sig_b * d                  # descending from b toward mid
        v_lo = values_along(params, z_lo[::-1], seed_mid, seed_at=zmid)[::-1]
        v_hi = values_along(params, z_hi[::-1], seed_mid, seed_at=zmid)[::-1]
        g_lo = f(z_lo, v_lo[:, 0]) - f(z_lo, v_lo[:, 1])
        g_hi = f(z_hi, v_hi[:, 0]) - f(z_hi, v_hi[:, 1])
        return complex((np.sum(g_lo * w_a) + np.sum(g_hi * w_b)) * d)

    coarse = evaluate(panels, order)
    fine = evaluate(panels + 4, order + 8)
    err = abs(fine - coarse)
    if err > rtol * max(1.0, abs(fine)):
        raise QuadratureNotConverged(
            f"pair integral {a}->{b}: coarse={coarse} fine={fine}")
    return (fine, err) if detail else fine


def polyline_pair_integral(
    params: CurveParams,
    waypoints,
    seed: np.ndarray,
    seed_index: int | None = None,
    f: Callable | None = None,
    *,
    exp_start: int = 2,
    exp_end: int = 2,
    rtol: float = 1e-10,
    order: int = 16,
    panels_per_leg: int = 8,
    detail: bool = False,
):
    """Pair-difference integral along a polyline, seeded mid-path.

    ``seed`` holds the root triple at ``waypoints[seed_index]`` (default:
    the middle waypoint), which must not be a branch point; tracking
    marches outward from there in both directions.  Endpoint
    substitutions apply to the first and last leg as in
    pair_difference_integral; a seed at the first or last waypoint is
    allowed only when that endpoint is regular (exponent 1).
    """
    if f is None:
        f = lambda z, xi: xi
    pts = np.asarray(waypoints, dtype=complex)
    if len(pts) < 2:
        raise ValueError("need at least 2 waypoints")
    if seed_index is None:
        seed_index = len(pts) // 2
    if (seed_index == 0 and exp_start != 1) or \
            (seed_index == len(pts) - 1 and exp_end != 1):
        raise ValueError("seed waypoint must not be a singular endpoint")
    if len(pts) == 2 and exp_start != 1 and exp_end != 1:
        raise ValueError("a single chord with two singular endpoints "
                         "needs pair_difference_integral")
    seed = np.asarray(seed, dtype=complex)
    z_seed = pts[seed_index]

    def evaluate(panels_: int, order_: int) -> complex:
        sig_plain, w_plain = panel_nodes(0.0, 1.0, panels_, order_)
        u, wu = panel_nodes(0.0, 1.0, panels_, order_)
        all_z, all_w = [], []
        for i in range(len(pts) - 1):
            if i == 0 and exp_start != 1:
                s = u[::-1] ** exp_start      # descending: singular at pts[0]
                ws = (exp_start * u ** (exp_start - 1) * wu)[::-1]
                s, ws = s[::-1], ws[::-1]     # back to ascending in sigma
            elif i == len(pts) - 2 and exp_end != 1:
                s = 1.0 - u[::-1] ** exp_end  # ascending, singular at pts[-1]
                ws = (exp_end * u ** (exp_end - 1) * wu)[::-1]
            else:
                s, ws = sig_plain, w_plain
            d = pts[i + 1] - pts[i]
            all_z.append(pts[i] + s * d)
            all_w.append(ws * d)
        zs = np.concatenate(all_z)
        ws = np.concatenate(all_w)
        nodes_per_leg = len(all_z[0])
        split = seed_index * nodes_per_leg
        vals = np.empty((len(zs), 3), dtype=complex)
        if split < len(zs):
            vals[split:] = values_along(
                params, zs[split:], seed, seed_at=z_seed)
        if split > 0:
            vals[:split] = values_along(
                params, zs[:split][::-1], seed, seed_at=z_seed)[::-1]
        g = f(zs, vals[:, 0]) - f(zs, vals[:, 1])
        return complex(np.sum(g * ws))

    coarse = evaluate(panels_per_leg, order)
    fine = evaluate(panels_per_leg + 3, order + 8)
    err = abs(fine - coarse)
    if err > rtol * max(1.0, abs(fine)):
        raise QuadratureNotConverged(
            f"polyline pair integral: coarse={coarse} fine={fine}")
    return (fine, err) if detail else fine
