"""Boutroux period function, the A(t) branch, and the harmonic field H.

The central object is

    h(t, A) = Re integral_{z1}^{z2} (xi_1 - xi_2) dz,

the real part of the period of xi dz over the cycle that runs from z1 to
z2 on the first sheet (right of the whiskers) and back on the second.
The supercritical branch A(t) is the unique zero of A |-> h(t, A) in
(0, A3(t)); it exists for t between 1/8 and the second critical time
t** where the droplet degenerates to a point.  H extends the same
integral to a field on the closed sector |arg z| <= pi/3; its zero set
contains the whiskers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .contour import (
    pair_difference_integral,
    panel_nodes,
    polyline_pair_integral,
    values_along,
)
from .curve import (
    A3_of_t,
    OMEGA,
    BranchSet,
    CurveParams,
    branch_points,
    label_sheets_at,
    solve_cubic_xi,
)
from .errors import (
    ContinuationAmbiguous,
    DomainError,
    NoSignChange,
    QuadratureNotConverged,
)

_COLLAPSED = 1e-12   # |z2 - z1| below which the period cycle has shrunk away


@dataclass(frozen=True)
class PeriodResult:
    """One evaluation of the period h(t, A).

    ``h`` is the real part of the tracked pair integral; ``imag_part``
    is its imaginary part (a diagnostic: it has no enforced value away
    from the solved A); ``quad_error`` estimates the quadrature error
    from comparison with a finer rule.
    """

    h: float
    imag_part: float
    quad_error: float


@dataclass(frozen=True)
class BoutrouxSolution:
    t: float
    A: float
    branches: BranchSet
    bracket_width: float
    iterations: int


def _collision_exponent(bs: BranchSet) -> int:
    """Endpoint substitution exponent at z2.

    Generically z2 is a square-root branch point (exponent 2); when the
    complex pair of w-roots has degenerated to a real double root, all
    three sheets meet at z2 and the local expansion runs in cube roots.
    """
    if abs(bs.w2.imag) <= 1e-10 * (1.0 + abs(bs.w2)):
        return 3
    return 2


def _seed_at_probe(params: CurveParams, probe: complex) -> np.ndarray:
    """Labelled root triple at ``probe`` (label_sheets_at handles the
    fenced-route fallback near A = A3(t) internally)."""
    return label_sheets_at(params, probe).as_array()


def _period_integral(params: CurveParams, bs: BranchSet, tol: float, f=None):
    """Tracked (xi1 - xi2) integral from z1 to z2 through the sector.

    The full period path also runs z1 -> 0 along the segment between
    them, but there the tracked pair consists of complex conjugates and
    only contributes to the imaginary part, so the path evaluated here
    starts directly at z1.

    A straight z1 -> z2 chord hugs the arc where the colliding pair
    degenerates and can land on either side of it depending on (t, A),
    flipping the sign of the real part; the path therefore detours
    through a probe at a fixed offset from the chord midpoint.  The
    offset points to the real-axis side, which contains no other branch
    points for any admissible (t, A), whereas the corridor between the
    arc and the sector wall pinches off as arg z2 approaches pi/3.  The
    period convention belongs to the wall side, and across the arc the
    tracked difference takes opposite boundary values, so the computed
    integral is negated on return.
    """
    z2 = bs.z2
    start = bs.z1 + 0j
    d = z2 - start
    unit = d / abs(d)
    exp_b = _collision_exponent(bs)
    for frac in (0.25, 0.12):
        probe = start + 0.5 * d - 1j * frac * abs(d) * unit
        try:
            seed = _seed_at_probe(params, probe)
            value, err = polyline_pair_integral(
                params, [start, probe, z2], seed, seed_index=1, f=f,
                exp_start=2, exp_end=exp_b, rtol=tol, detail=True)
            return -value, err
        except (ContinuationAmbiguous, QuadratureNotConverged) as exc:
            last = exc
    raise last


def period_h(t: float, A: float, *, tol: float = 1e-10) -> PeriodResult:
    """h(t, A) for t >= 1/8 and 0 < A <= A3(t) (A = 0 allowed, degenerate).

    Only the real part is path-class invariant off the solved A; the
    value returned integrates the tracked pair difference from z1 to z2
    with the sign fixed so that h(t, A3(t)) > 0, in agreement with the
    independent boundary-route evaluation (H_ray_real_route).
    """
    if t < 0.125:
        raise DomainError(f"period defined for t >= 1/8, got t={t}")
    params = CurveParams(t=t, A=A)
    bs = branch_points(params, allow_degenerate=True)
    if abs(bs.z2 - bs.z1) < _COLLAPSED:
        return PeriodResult(h=0.0, imag_part=0.0, quad_error=0.0)
    value, err = _period_integral(params, bs, tol)
    return PeriodResult(h=float(value.real), imag_part=float(value.imag),
                        quad_error=float(err))


def solve_A(t: float, *, a_tol: float = 1e-11, quad_tol: float = 1e-10,
            eps_A: float = 1e-12) -> BoutrouxSolution:
    """The supercritical branch A(t): bisection for h(t, .) = 0.

    h is strictly increasing in A, negative near A = 0 and positive at
    A3(t) for t in (1/8, t**); outside that window the bracket endpoints
    have equal signs and NoSignChange is raised.
    """
    lo, hi = eps_A, A3_of_t(t)
    h_lo = period_h(t, lo, tol=quad_tol).h
    h_hi = period_h(t, hi, tol=quad_tol).h
    if np.sign(h_lo) == np.sign(h_hi):
        raise NoSignChange(
            f"h(t={t}, A) has sign {np.sign(h_lo):+.0f} at both bracket "
            f"ends ({lo}, {hi}); no Boutroux branch here")
    iterations = 0
    while hi - lo > a_tol:
        mid = 0.5 * (lo + hi)
        h_mid = period_h(t, mid, tol=quad_tol).h
        if np.sign(h_mid) == np.sign(h_lo):
            lo = mid
        else:
            hi = mid
        iterations += 1
    A = 0.5 * (lo + hi)
    return BoutrouxSolution(t=t, A=A,
                            branches=branch_points(CurveParams(t=t, A=A)),
                            bracket_width=hi - lo, iterations=iterations)


def solve_t_double_star(*, t_tol: float = 1e-8, quad_tol: float = 1e-10) -> float:
    """Second critical time: the zero of t |-> h(t, 0) on (1/8, 8).

    At A = 0 the droplet has shrunk to the origin and z1 = 0; h(t, 0)
    is negative throughout the supercritical window and positive once
    the window is exhausted.  Each h evaluation costs a full tracked
    quadrature, so the bracketed root is polished with Brent's method
    rather than plain bisection.
    """
    lo, hi = 0.125 + 1e-6, 8.0
    h_lo = period_h(lo, 0.0, tol=quad_tol).h
    h_hi = period_h(hi, 0.0, tol=quad_tol).h
    if np.sign(h_lo) == np.sign(h_hi):
        raise NoSignChange("h(t, 0) does not change sign on (1/8, 8)")
    return float(brentq(lambda tt: period_h(tt, 0.0, tol=quad_tol).h,
                        lo, hi, xtol=t_tol))


def check_monotone_h(t: float, A: float, delta: float = 1e-4,
                     *, tol: float = 1e-10) -> float:
    """Central finite difference of h in A; positive on the valid range."""
    if not (0.0 < A - delta and A + delta < A3_of_t(t)):
        raise ValueError("stencil leaves (0, A3(t))")
    h_plus = period_h(t, A + delta, tol=tol).h
    h_minus = period_h(t, A - delta, tol=tol).h
    return (h_plus - h_minus) / (2.0 * delta)


@lru_cache(maxsize=16)
def _h_context(t: float, A: float, tol: float):
    """Shared state for H evaluations at fixed (t, A).

    Holds the branch set, an outer radius R clear of all branch points,
    the labelled triple at R on the real axis, and the tracked pair
    integral from z1 out to R along the real axis.
    """
    params = CurveParams(t=t, A=A)
    bs = branch_points(params, allow_degenerate=True)
    R = 1.6 * max(abs(bs.z2), abs(bs.z1), 1.0)
    seed_R = label_sheets_at(params, complex(R)).as_array()
    base = pair_difference_integral(
        params, bs.z1, complex(R), seed_R, exp_b=1, rtol=tol,
        seed_at=complex(R))
    return params, bs, R, seed_R, base


_WHISKER_POLY: dict[tuple[float, float], np.ndarray | None] = {}


def _whisker_polyline(params: CurveParams):
    """Traced whisker polyline used as the sheet-pair cut, or None.

    Tracing only succeeds when the level curve actually connects z1 to
    z2, i.e. at the tuned A; failures are memoized so off-solution
    parameters fall back to the plain tracked path without retrying.
    """

    key = (params.t, params.A)
    if key not in _WHISKER_POLY:
        from . import geometry
        from .errors import MotherbodyError

        try:
            pts = geometry.trace_whisker(params.t, params.A, "z2").points
        except MotherbodyError:
            pts = None
        _WHISKER_POLY[key] = pts
    return _WHISKER_POLY[key]


def _segment_polyline_crossings(a: complex, b: complex, pts: np.ndarray):
    """Sorted parameters s in (0,1) where a + s(b-a) crosses the polyline."""

    d = b - a
    p, q = pts[:-1], pts[1:]
    e = q - p
    denom = d.real * e.imag - d.imag * e.real
    r = p - a
    safe = np.abs(denom) > 1e-300
    s = np.where(safe, (r.real * e.imag - r.imag * e.real) / np.where(safe, denom, 1.0), -1.0)
    u = np.where(safe, (r.real * d.imag - r.imag * d.real) / np.where(safe, denom, 1.0), -1.0)
    hit = (s > 1e-12) & (s < 1.0 - 1e-12) & (u >= 0.0) & (u < 1.0)
    return sorted(s[hit])


def H_field(t: float, A: float, z: complex, *, tol: float = 1e-9) -> float:
    """H(z) = Re of the pair integral from z1 to z with labeled branches.

    The path runs from z1 along the real axis to an outer radius R,
    around the circle |s| = R to arg z, then radially in to z, with the
    branch pair continued along the whole path.  Where the radial leg
    crosses the traced whisker the labeled sheets swap, so the tracked
    integrand is negated past each crossing; the real part is then
    path independent at A = A(t).  Away from the tuned A no whisker
    connects and the value is defined by this fixed standard route.
    """
    params, bs, R, seed_R, base = _h_context(float(t), float(A), tol)
    z = complex(z)
    # H is invariant under z -> omega z and z -> conj z, so fold the
    # target into the upper third of the fundamental wedge; every
    # connecting path then stays clear of the rotated arm systems
    if z != 0:
        j = int(np.round(np.angle(z) / (2.0 * np.pi / 3.0)))
        if j:
            z = z * OMEGA ** (-j)
        if z.imag < 0:
            z = z.conjugate()
    if abs(z - bs.z1) < _COLLAPSED:
        return 0.0
    theta = float(np.angle(z)) if z != 0 else 0.0
    if theta <= 0.3 and abs(z) < bs.z1:
        # near the spine the radial approach would graze the branch
        # point at z1; bend the leg z1 -> z over an apex above the
        # segment instead (the integrand is analytic there, and on the
        # segment itself any small bend gives the upper-side limit)
        apex = (0.5 * (bs.z1 + z.real)
                + 1j * (0.25 * (bs.z1 - z.real) + 0.5 * z.imag))
        seed = label_sheets_at(params, apex).as_array()
        value, _ = polyline_pair_integral(
            params, [complex(bs.z1), apex, z], seed, seed_index=1,
            exp_start=2, exp_end=2, rtol=tol, detail=True)
        return float(value.real)
    arc_end = R * np.exp(1j * theta)
    if abs(theta) > 1e-14:
        nodes, wts = panel_nodes(
            0.0, theta, max(4, int(np.ceil(abs(theta) * 6.0))), 16)
        arc_pts = R * np.exp(1j * nodes)
        ext = np.concatenate([arc_pts, [arc_end]])
        vals = values_along(params, ext, seed_R, seed_at=complex(R))
        g = vals[:-1, 0] - vals[:-1, 1]
        arc_integral = complex(np.sum(g * 1j * arc_pts * wts))
        seed_arc_end = vals[-1]
    else:
        arc_integral = 0.0 + 0.0j
        seed_arc_end = seed_R
    if abs(z - arc_end) < 1e-14 * R:
        radial = 0.0 + 0.0j
    else:
        crossings: list[float] = []
        if 1e-12 < theta < np.angle(bs.z2) + 0.15 and abs(z) < 1.1 * abs(bs.z2):
            poly = _whisker_polyline(params)
            if poly is not None:
                crossings = _segment_polyline_crossings(arc_end, z, poly)
        if not crossings:
            radial = pair_difference_integral(
                params, arc_end, z, seed_arc_end, exp_a=1, exp_b=2,
                rtol=tol, seed_at=arc_end)
        else:
            radial = 0.0 + 0.0j
            cuts = [0.0] + crossings + [1.0]
            cur, seed_cur, sgn = arc_end, seed_arc_end, 1.0
            for i in range(len(cuts) - 1):
                nxt = arc_end + cuts[i + 1] * (z - arc_end)
                piece = pair_difference_integral(
                    params, cur, nxt, seed_cur, exp_a=1,
                    exp_b=2 if i == len(cuts) - 2 else 1,
                    rtol=tol, seed_at=cur)
                radial += sgn * piece
                seed_cur = values_along(params, [cur, nxt], seed_cur)[-1]
                cur, sgn = nxt, -sgn
    return float((base + arc_integral + radial).real)


def H_ray_real_route(t: float, A: float, x: float, *, end_exponent: int = 1,
                     order: int = 20, panels: int = 16) -> float:
    """H(x e^{i pi/3}) computed through the negative real axis.

    Conjugation and rotation symmetry turn the sector-boundary value
    into (1/2) integral_{-x}^{0} (s^2 - 3 xi_1(s)) ds with xi_1 the real
    branch on the negative axis, identified near 0 and continued down to
    -x.  Independent of the pair-tracking period machinery; used to
    cross-check it.  Pass ``end_exponent=3`` when -x is a point where
    all three sheets meet (x = |z2| at A = A3(t)).
    """
    params = CurveParams(t=t, A=A)
    x = float(x)

    def evaluate(panels_: int, order_: int) -> float:
        v, wv = panel_nodes(0.0, 1.0, panels_, order_)
        m = end_exponent
        s = -x + x * v**m
        w = x * m * v ** (m - 1) * wv
        desc = s[::-1]                       # from near 0 down toward -x
        roots0 = solve_cubic_xi(params, np.array([desc[0]]))[0]
        seed_idx = int(np.argmin(np.abs(roots0.imag)))
        seed = np.roll(roots0, -seed_idx)
        vals = values_along(params, desc, seed)
        xi1 = vals[::-1, 0]
        # Near a point where all three sheets meet, the computed real
        # root carries imaginary rounding noise of order eps^(1/3); the
        # check only needs to catch gross mis-tracking.
        if np.max(np.abs(xi1.imag)) > 1e-4 * (1.0 + np.max(np.abs(xi1))):
            raise ContinuationAmbiguous(
                "no clean real branch on the negative axis")
        return float(0.5 * np.sum((s**2 - 3.0 * xi1.real) * w))

    coarse = evaluate(panels, order)
    fine = evaluate(panels + 8, order + 8)
    if abs(fine - coarse) > 1e-10 * max(1.0, abs(fine)):
        raise QuadratureNotConverged(
            f"real-axis route: coarse={coarse} fine={fine}")
    return fine


def alpha0_period(t: float, A: float, *, samples: int = 1024) -> complex:
    """Period of xi dz around the whisker pair (counterclockwise).

    The cycle is an ellipse enclosing z2 and z3 but not z1, traversed on
    the sheet reached by continuation from the real axis right of the
    branch cut structure.  At A = A(t) the result is purely imaginary.
    """
    params = CurveParams(t=t, A=A)
    bs = branch_points(params)
    c = bs.z2.real
    gap = c - bs.z1
    if gap <= 0:
        raise ValueError("z1 is not left of Re z2; no separating ellipse")
    a_ax = 0.5 * gap
    b_ax = 1.3 * abs(bs.z2.imag) + 0.1 * gap
    thetas = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)

    def loop_integral(ths):
        zs = c + a_ax * np.cos(ths) + 1j * b_ax * np.sin(ths)
        seed = label_sheets_at(params, zs[0]).as_array()
        vals = values_along(params, np.concatenate([zs, zs[:1]]), seed)
        closure = np.max(np.abs(vals[-1] - vals[0]))
        if closure > 1e-8 * (1.0 + np.max(np.abs(vals[0]))):
            raise ContinuationAmbiguous(
                f"loop continuation did not close (defect {closure:.2e})")
        dz = -a_ax * np.sin(ths) + 1j * b_ax * np.cos(ths)
        return np.sum(vals[:-1, 0] * dz) * (2.0 * np.pi / len(ths))

    coarse = loop_integral(thetas[::2])
    fine = loop_integral(thetas)
    if abs(fine - coarse) > 1e-9 * max(1.0, abs(fine)):
        raise QuadratureNotConverged(
            f"alpha0 loop: coarse={coarse} fine={fine}")
    return complex(fine)


def xi1_residue(t: float, A: float, *, radius: float | None = None,
                samples: int = 512) -> complex:
    """(1/2 pi i) of the xi_1 integral around a large circle; equals t.

    xi_1 is identified pointwise by proximity to its large-z model
    z^2 + t/z, which is unambiguous once the radius dominates the other
    two branches' sqrt growth.
    """
    params = CurveParams(t=t, A=A)
    bs = branch_points(params, allow_degenerate=True)
    R = radius if radius is not None else 50.0 * max(1.0, abs(bs.z2))

    def circle_integral(n):
        thetas = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        zs = R * np.exp(1j * thetas)
        roots = solve_cubic_xi(params, zs)
        model = zs**2 + t / zs
        pick = np.argmin(np.abs(roots - model[:, None]), axis=1)
        xi1 = np.take_along_axis(roots, pick[:, None], axis=1)[:, 0]
        dz = 1j * zs
        return np.sum(xi1 * dz) / n

    coarse = circle_integral(samples // 2)
    fine = circle_integral(samples)
    if abs(fine - coarse) > 1e-9 * max(1.0, abs(fine)):
        raise QuadratureNotConverged(
            f"residue circle: coarse={coarse} fine={fine}")
    # circle_integral returns the contour integral divided by 2 pi
    return complex(fine / 1j)
