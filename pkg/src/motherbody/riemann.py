"""Genus-1 quotient surface: periods, Abel map, theta-function prefactor.

The degree-3 map (z, xi) -> (w, eta) = (z^3, z xi) folds the threefold
symmetry of the spectral curve onto a genus-1 surface

    eta^3 - w eta^2 - (1+t) w eta + w^2 + A w = 0.

Its branch data sit on a Y-shaped cut system in the w-plane: the segment
[0, w1] and the two whisker images [w1, w2], [w1, w3] exchange sheets 1
and 2, while the negative real axis exchanges the square-root pair 2, 3.
Everything that only needs real w runs as substituted Gauss-Legendre
quadrature along the four real legs of the normalizing cycle; the two
pinched cycle periods around the whisker images are pulled back to the
z-plane where the tracked pair-difference integrator already handles the
colliding sheets; arbitrary complex targets are reached by marching the
eta-triple along validated routes that start in the far field (where the
three branches separate by magnitude) and avoid every cut of the sheet
being continued.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .boutroux import _collision_exponent, solve_A
from .contour import panel_nodes, polyline_pair_integral, values_along
from .curve import (
    BranchSet,
    CurveParams,
    _match_step,
    _point_polyline_distance,
    _segment_crossings,
    branch_points,
    label_sheets_at,
    solve_cubic_xi,
)
from .errors import (
    DomainError,
    MotherbodyError,
    NotInNEpsilon,
    PoleAtZ,
    QuadratureNotConverged,
)
from .geometry import beta as whisker_beta
from .geometry import trace_whisker

__all__ = [
    "QuotientCurve",
    "ThetaContext",
    "PredictedZero",
    "build_quotient",
    "eta_branches",
    "normalize_omega_S",
    "compute_tau",
    "build_context",
    "abel_u",
    "theta",
    "beta_star",
    "in_N_epsilon",
    "M_n11",
    "spurious_zero_predictor",
    "f_ratio",
    "u1_negative_axis_zroute",
]


# ---------------------------------------------------------------------------
# quotient curve and eta branches
# ---------------------------------------------------------------------------

@dataclass
class QuotientCurve:
    """Branch data of the folded curve in the w-plane.

    w1 is real positive, w2 lies in the upper half plane and w3 is its
    conjugate; they are the cubes of the z-plane branch points.  ``far``
    is the radius beyond which the three eta-branches are identified by
    magnitude alone (eta1 ~ w, eta2/3 ~ +-sqrt(w)).
    """

    t: float
    A: float
    params: CurveParams
    zbs: BranchSet
    w1: float
    w2: complex
    w3: complex
    far: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)


def build_quotient(t: float, A: float) -> QuotientCurve:
    params = CurveParams(t=t, A=A)
    zbs = branch_points(params)
    w1 = float((zbs.z1 ** 3).real)
    w2 = zbs.z2 ** 3
    w3 = zbs.z3 ** 3
    far = max(12.0, 5.0 * abs(w2), 5.0 * w1, 3.0 * (1.0 + t), 3.0 * A)
    return QuotientCurve(t=t, A=A, params=params, zbs=zbs,
                         w1=w1, w2=w2, w3=w3, far=far)


def _eta_roots(qc: QuotientCurve, w: complex) -> np.ndarray:
    """Unordered roots of the eta-cubic at w."""
    return np.roots([1.0, -w, -(1.0 + qc.t) * w, w * w + qc.A * w])


def _eta_roots_many(qc: QuotientCurve, ws: np.ndarray) -> np.ndarray:
    out = np.empty((len(ws), 3), dtype=complex)
    for i, w in enumerate(np.asarray(ws, dtype=complex)):
        out[i] = _eta_roots(qc, w)
    return out


def _D_w(qc: QuotientCurve, w, eta):
    """eta-derivative of the folded cubic, 3 eta^2 - 2 w eta - (1+t) w."""
    return 3.0 * eta * eta - 2.0 * w * eta - (1.0 + qc.t) * w


def _eta_far_triple(qc: QuotientCurve, w: complex) -> np.ndarray:
    """Labelled triple at |w| >= far by magnitude and sqrt-matching.

    eta1 is the root of magnitude ~|w|; among the remaining pair, eta2
    is the one closer to +sqrt(w) (principal branch, cut on the negative
    real axis) and eta3 the one closer to -sqrt(w).  This reproduces the
    continuation of the real-axis ordering across the far field, with
    the 2-3 exchange exactly on the negative real axis.
    """
    r = _eta_roots(qc, w)
    i1 = int(np.argmax(np.abs(r)))
    rest = [r[i] for i in range(3) if i != i1]
    sq = cmath.sqrt(w)
    if abs(rest[0] - sq) <= abs(rest[1] - sq):
        e2, e3 = rest
    else:
        e3, e2 = rest
    return np.array([r[i1], e2, e3], dtype=complex)


def _eta_refine(qc: QuotientCurve, w0: complex, r0: np.ndarray,
                w1_: complex, depth: int = 60) -> np.ndarray:
    from .errors import ContinuationAmbiguous
    new, ok = _match_step(r0, _eta_roots(qc, w1_))
    if ok:
        return new
    if depth <= 0 or abs(w1_ - w0) < 1e-13 * (1.0 + abs(w0)):
        raise ContinuationAmbiguous(
            f"eta sheets inseparable between w={w0} and w={w1_}")
    mid = 0.5 * (w0 + w1_)
    rm = _eta_refine(qc, w0, r0, mid, depth - 1)
    return _eta_refine(qc, mid, rm, w1_, depth - 1)


def _eta_along(qc: QuotientCurve, ws: np.ndarray, seed: np.ndarray,
               seed_at: complex) -> np.ndarray:
    """Track the eta-triple through the ordered points ``ws``."""
    ws = np.asarray(ws, dtype=complex)
    out = np.empty((len(ws), 3), dtype=complex)
    cur = seed if ws[0] == seed_at else _eta_refine(qc, seed_at, seed, ws[0])
    out[0] = cur
    for k in range(len(ws) - 1):
        new, ok = _match_step(cur, _eta_roots(qc, ws[k + 1]))
        if not ok:
            new = _eta_refine(qc, ws[k], cur, ws[k + 1])
        cur = new
        out[k + 1] = cur
    return out


# ---------------------------------------------------------------------------
# cut polylines and route validation
# ---------------------------------------------------------------------------

def _cuts(qc: QuotientCurve) -> dict:
    """Polylines of the three finite cuts and the negative real axis."""
    if "cuts" in qc._cache:
        return qc._cache["cuts"]
    up = trace_whisker(qc.t, qc.A, "z2").points ** 3
    seg = np.linspace(0.0, qc.w1, 241).astype(complex)
    neg = np.array([-6.0 * qc.far, 0.0], dtype=complex)
    cuts = {"seg": seg, "up": up, "dn": np.conj(up), "neg": neg}
    qc._cache["cuts"] = cuts
    return cuts


# label cuts per sheet: crossing any of these invalidates a route for
# the given sheet.  Sheet 2 additionally branches across the whole of
# (-inf, w1], which 'neg' + 'seg' cover together.
_SHEET_CUTS = {1: ("seg", "up", "dn"),
               2: ("seg", "up", "dn", "neg"),
               3: ("neg",)}


def _route_clean(qc: QuotientCurve, pts: list[complex], sheet: int) -> bool:
    cuts = _cuts(qc)
    for a, b in zip(pts[:-1], pts[1:]):
        for name in _SHEET_CUTS[sheet]:
            if _segment_crossings(a, b, cuts[name]):
                return False
    return True


def _arc_points(r: float, a0: float, a1: float, step: float = 0.04):
    """Constant-radius polyline from angle a0 to a1 (radians)."""
    n = max(2, int(abs(a1 - a0) / step) + 1)
    return [r * cmath.exp(1j * a) for a in np.linspace(a0, a1, n)]


def _route_to(qc: QuotientCurve, w: complex, sheet: int) -> list[complex]:
    """Waypoints from the far field to w avoiding the sheet's cuts.

    Routes start at far*e^{i phi0}; for sheets 2 and 3 the far anchor is
    the positive real axis (where the leg quadratures supply the Abel
    value), reached by an azimuthal sweep at the far radius.  Targets
    within 0.02 of a cut get a perpendicular stand-off point inserted so
    the last chord approaches the cut transversally.
    """
    cuts = _cuts(qc)
    finite = [cuts["seg"], cuts["up"], cuts["dn"]]
    tail = []
    p = w
    dmin, foot = min(
        ((_point_polyline_distance(w, poly),
          poly[int(np.argmin(np.abs(poly - w)))]) for poly in finite),
        key=lambda it: it[0])
    if dmin < 0.02 * max(1.0, abs(qc.w2)):
        away = (w - foot) / abs(w - foot)
        p = w + 0.05 * max(1.0, abs(qc.w2)) * away
        tail = [w]

    phi = cmath.phase(p) if p != 0 else 0.0
    r = abs(p)
    routes: list[list[complex]] = []
    if sheet == 1:
        routes.append([qc.far * cmath.exp(1j * phi), p])
        for phi2 in (0.12, -0.12, 1.57, -1.57, 2.9, -2.9):
            routes.append([qc.far * cmath.exp(1j * phi2)]
                          + _arc_points(r, phi2, phi) + [p])
            for rmid in (0.5 * qc.w1, 1.6 * abs(qc.w2)):
                routes.append([qc.far * cmath.exp(1j * phi2),
                               rmid * cmath.exp(1j * phi2)]
                              + _arc_points(rmid, phi2, phi)
                              + [r * cmath.exp(1j * phi), p])
    else:
        start = [qc.far + 0.0j] + _arc_points(qc.far, 0.0, phi)
        routes.append(start + [p])
        for rmid in (1.6 * abs(qc.w2), 0.5 * qc.w1):
            routes.append([qc.far + 0.0j]
                          + _arc_points(qc.far, 0.0, phi)
                          + [rmid * cmath.exp(1j * phi), p])
        if sheet == 2:
            routes.extend(_tip_routes(qc, p))
    for pts in routes:
        full = pts + tail
        if _route_clean(qc, full, sheet):
            return full
    raise DomainError(
        f"no cut-avoiding route to w={w} on sheet {sheet}")


def _tip_routes(qc: QuotientCurve, p: complex) -> list[list[complex]]:
    """Sheet-2 entries into the pockets between [0,w1] and a whisker image.

    Sheet 2 branches across all of (-inf, w1] and both whisker images,
    so the only way into a pocket is around the free end of its arc.
    The route swings around w2 (or w3) at a fixed clearance.
    """
    out = []
    cuts = _cuts(qc)
    for name, tip in (("up", qc.w2), ("dn", qc.w3)):
        arc = cuts[name]
        tdir = arc[-1] - arc[-9]
        tdir /= abs(tdir)
        rad = 0.22 * max(1.0, abs(qc.w2))
        pocket = 0.5 * qc.w1
        norm = 1j * tdir
        if abs((tip + norm) - pocket) < abs((tip - norm) - pocket):
            norm = -norm  # make it point away from the pocket
        th0 = cmath.phase(tdir)
        th1 = cmath.phase(-norm)
        # shorter swing from beyond-the-tip to the pocket side
        if th1 - th0 > math.pi:
            th1 -= 2.0 * math.pi
        elif th0 - th1 > math.pi:
            th1 += 2.0 * math.pi
        swing = [tip + rad * cmath.exp(1j * a)
                 for a in np.linspace(th0, th1, 9)]
        entry = tip + rad * tdir
        phi_e = cmath.phase(entry)
        head = [qc.far + 0.0j] + _arc_points(qc.far, 0.0, phi_e) \
            + [abs(entry) * cmath.exp(1j * phi_e)]
        out.append(head + swing + [p])
    return out


# ---------------------------------------------------------------------------
# real-leg quadratures of the normalizing cycle
# ---------------------------------------------------------------------------

def _gl_adapt(g, a: float, b: float, *, rtol: float = 1e-11,
              panels: int = 6, order: int = 16, max_panels: int = 192):
    """Adaptive panel-doubling GL quadrature of a vectorized integrand."""
    if a == b:
        return 0.0, 0.0
    prev = None
    p = panels
    while p <= max_panels:
        x, w = panel_nodes(a, b, p, order)
        val = complex(np.sum(g(x) * w))
        if prev is not None and abs(val - prev) <= rtol * max(1.0, abs(val)):
            return val, abs(val - prev)
        prev = val
        p *= 2
    raise QuadratureNotConverged(
        f"leg quadrature on [{a}, {b}] stalled at {p // 2} panels")


def _sel_max_re(roots: np.ndarray) -> np.ndarray:
    return roots[np.arange(len(roots)), np.argmax(roots.real, axis=1)]


def _sel_min_re(roots: np.ndarray) -> np.ndarray:
    return roots[np.arange(len(roots)), np.argmin(roots.real, axis=1)]


def _sel_mid_re(roots: np.ndarray) -> np.ndarray:
    idx = np.argsort(roots.real, axis=1)[:, 1]
    return roots[np.arange(len(roots)), idx]


def _sel_real(roots: np.ndarray) -> np.ndarray:
    idx = np.argmin(np.abs(roots.imag), axis=1)
    return roots[np.arange(len(roots)), idx]


def _leg_D(qc: QuotientCurve, ws: np.ndarray, sel) -> np.ndarray:
    eta = sel(_eta_roots_many(qc, ws))
    return _D_w(qc, ws, eta)


# Each leg is parametrized by a coordinate that makes the integrand of
# dw/D analytic: sigma^2 off the simple zero of D at w1 (legs on sheet 1
# and 2 over [w1, inf)), sigma^3 off the double zero at w = 0 (legs on
# sheet 1 over (-inf, 0] and sheet 3 over [0, inf)), and v = 1/w or
# v = w^{-1/2} at the two points at infinity.

def _legA_partial(qc: QuotientCurve, x: float, *, rtol: float) -> float:
    """integral_x^far dw / D on sheet 1, w1 <= x <= far."""
    s0, s1 = math.sqrt(max(x - qc.w1, 0.0)), math.sqrt(qc.far - qc.w1)

    def g(sig):
        ws = qc.w1 + sig * sig
        return 2.0 * sig / _leg_D(qc, ws.astype(complex), _sel_max_re)
    val, _ = _gl_adapt(g, s0, s1, rtol=rtol)
    return float(val.real)


def _legB_partial(qc: QuotientCurve, x: float, *, rtol: float) -> float:
    """integral_{-far}^{x} dw / D on sheet 1, -far <= x <= 0."""
    s0, s1 = abs(x) ** (1.0 / 3.0), qc.far ** (1.0 / 3.0)

    def g(sig):
        ws = -sig ** 3
        return 3.0 * sig * sig / _leg_D(qc, ws.astype(complex), _sel_real)
    val, _ = _gl_adapt(g, s0, s1, rtol=rtol)
    return float(val.real)


def _legC_partial(qc: QuotientCurve, x: float, *, rtol: float) -> float:
    """integral_0^x dw / D on sheet 3, 0 <= x <= far."""
    s1 = x ** (1.0 / 3.0)

    def g(sig):
        ws = sig ** 3
        return 3.0 * sig * sig / _leg_D(qc, ws.astype(complex), _sel_min_re)
    val, _ = _gl_adapt(g, 0.0, s1, rtol=rtol)
    return float(val.real)


def _legD_partial(qc: QuotientCurve, x: float, *, rtol: float) -> float:
    """integral_x^far dw / (-D) on sheet 2, w1 <= x <= far."""
    s0, s1 = math.sqrt(max(x - qc.w1, 0.0)), math.sqrt(qc.far - qc.w1)

    def g(sig):
        ws = qc.w1 + sig * sig
        return -2.0 * sig / _leg_D(qc, ws.astype(complex), _sel_mid_re)
    val, _ = _gl_adapt(g, s0, s1, rtol=rtol)
    return float(val.real)


def _tail_inv(qc: QuotientCurve, x: float, sel, side: float, *,
              rtol: float) -> float:
    """integral of dw / D over [x, inf) (side=+1) or (-inf, -x] (side=-1).

    Substitution w = side/v.  Both orientations run left to right in w,
    and both reduce to the same positive-Jacobian form: the w-interval
    maps to v in (0, 1/x] with |dw| = dv/v^2, traversed so that the
    integral equals the plain v-integral of 1/(v^2 D) in either case.
    """
    def g(v):
        ws = (side / v).astype(complex)
        return 1.0 / (v * v * _leg_D(qc, ws, sel))
    val, _ = _gl_adapt(g, 1e-300, 1.0 / x, rtol=rtol)
    return float(val.real)


def _tail_invsqrt(qc: QuotientCurve, x: float, sel, sign: float, *,
                  rtol: float) -> float:
    """integral_x^inf dw / (sign * D) with v = w^{-1/2} (sqrt sheets)."""
    def g(v):
        ws = (1.0 / (v * v)).astype(complex)
        return 2.0 / (v ** 3 * sign * _leg_D(qc, ws, sel))
    val, _ = _gl_adapt(g, 1e-300, x ** -0.5, rtol=rtol)
    return float(val.real)


def _leg_raws(qc: QuotientCurve, *, rtol: float = 1e-11):
    """Raw (unnormalized) integrals of the four legs plus tail constants."""
    if "legs" in qc._cache:
        return qc._cache["legs"]
    tailA = _tail_inv(qc, qc.far, _sel_max_re, 1.0, rtol=rtol)
    tailB = _tail_inv(qc, qc.far, _sel_real, -1.0, rtol=rtol)
    tailC = _tail_invsqrt(qc, qc.far, _sel_min_re, 1.0, rtol=rtol)
    tailD = _tail_invsqrt(qc, qc.far, _sel_mid_re, -1.0, rtol=rtol)
    R_A = _legA_partial(qc, qc.w1, rtol=rtol) + tailA
    R_B = tailB + _legB_partial(qc, 0.0, rtol=rtol)
    R_C = _legC_partial(qc, qc.far, rtol=rtol) + tailC
    R_D = _legD_partial(qc, qc.w1, rtol=rtol) + tailD
    legs = {"R": (R_A, R_B, R_C, R_D),
            "tails": (tailA, tailB, tailC, tailD), "rtol": rtol}
    qc._cache["legs"] = legs
    return legs


def normalize_omega_S(qc: QuotientCurve, *, rtol: float = 1e-11) -> float:
    """C such that the four-leg cycle integral of C dw / D equals one.

    The cycle runs left to right over [w1, inf) on sheet 1, left to
    right over (-inf, 0] on sheet 1, left to right over [0, inf) on
    sheet 3, and right to left over [w1, inf) on sheet 2 where D < 0, so
    every leg contributes with a positive sign and C > 0.
    """
    R_A, R_B, R_C, R_D = _leg_raws(qc, rtol=rtol)["R"]
    total = R_A + R_B + R_C + R_D
    if not total > 0.0:
        raise MotherbodyError(f"cycle integral not positive: {total}")
    return 1.0 / total


def denominator_signs(qc: QuotientCurve, n: int = 10):
    """Sign samples of D on the real parts of the three sheets.

    Returns (sheet1 over [w1,far] and [-far,0], sheet3 over [0,far],
    sheet2 over [w1,far]) as arrays of +-1.
    """
    xsA = np.linspace(qc.w1 + 0.05 * (qc.far - qc.w1), qc.far, n)
    xsB = np.linspace(-qc.far, -1e-3, n)
    xsC = np.linspace(1e-3, qc.far, n)
    s1 = np.sign(np.concatenate([
        _leg_D(qc, xsA.astype(complex), _sel_max_re).real,
        _leg_D(qc, xsB.astype(complex), _sel_real).real]))
    s3 = np.sign(_leg_D(qc, xsC.astype(complex), _sel_min_re).real)
    s2 = np.sign(_leg_D(qc, xsA.astype(complex), _sel_mid_re).real)
    return s1, s3, s2


# ---------------------------------------------------------------------------
# tau via the two pinched cycle periods
# ---------------------------------------------------------------------------

def _pinched_period(qc: QuotientCurve, C: float, target: str, *,
                    rtol: float = 1e-10) -> complex:
    """Loop period of C dw / D around one whisker image, z-plane pullback.

    The loop integral around a cut equals the tracked pair-difference of
    the pulled-back density 3C / (3 xi^2 - 2 z^2 xi - (1+t) z) along one
    side of the z-plane whisker; the path detours through a probe on the
    real-axis side exactly as the period integrator does.  The sign is
    pinned afterwards by the requirement Re = +1/2.
    """
    bs = qc.zbs
    t = qc.t
    end = bs.z2 if target == "z2" else bs.z3
    start = bs.z1 + 0.0j
    d = end - start
    unit = d / abs(d)
    side = -1j if target == "z2" else 1j
    exp_b = _collision_exponent(bs)

    def f(z, xi):
        return 3.0 * C / (3.0 * xi * xi - 2.0 * z * z * xi - (1.0 + t) * z)

    last = None
    for frac in (0.25, 0.12):
        probe = start + 0.5 * d + side * frac * abs(d) * unit
        try:
            seed = label_sheets_at(qc.params, probe).as_array()
            value = polyline_pair_integral(
                qc.params, [start, probe, end], seed, seed_index=1, f=f,
                exp_start=2, exp_end=exp_b, rtol=rtol)
            break
        except (MotherbodyError,) as exc:
            last = exc
            value = None
    if value is None:
        raise last
    if value.real < 0.0:
        value = -value
    if abs(value.real - 0.5) > 1e-6:
        raise MotherbodyError(
            f"pinched period around {target} has Re {value.real}, not 1/2")
    return value


def loop_periods(qc: QuotientCurve, C: float, *,
                 rtol: float = 1e-10) -> tuple[complex, complex]:
    """Periods of C dw / D around the two whisker images, (upper, lower).

    The values are (1 + tau)/2 and (1 - tau)/2; their sum is required to
    close to the unit cycle.
    """
    b_up = _pinched_period(qc, C, "z2", rtol=rtol)
    b_dn = _pinched_period(qc, C, "z3", rtol=rtol)
    if not (b_up.imag > 0.0 and b_dn.imag < 0.0):
        raise MotherbodyError(
            f"pinched periods on wrong sides: {b_up}, {b_dn}")
    closure = abs(b_up + b_dn - 1.0)
    if closure > 1e-7:
        raise MotherbodyError(
            f"cycle closure b + conj-b - 1 = {closure:.3e}")
    return b_up, b_dn


def compute_tau(qc: QuotientCurve, C: float, *,
                rtol: float = 1e-10) -> complex:
    """Period of the normalized differential over the imaginary cycle.

    That cycle is the difference of the two loops around the whisker
    images; the upper loop carries the positive imaginary part.
    """
    b_up, b_dn = loop_periods(qc, C, rtol=rtol)
    return b_up - b_dn


# ---------------------------------------------------------------------------
# theta function
# ---------------------------------------------------------------------------

def theta(s: complex, tau: complex, *, tol: float = 1e-18) -> complex:
    """Third theta series with half-period (1 + tau)/2.

    Arguments are reduced modulo the period lattice (generated by 1 and
    (1+tau)/2) before summation, compensating with the quasi-periodicity
    factor q^{-m^2} e^{-2 pi i m s}; the truncation order M satisfies
    |q|^{M^2} e^{2 pi M |Im s|} < tol after reduction.
    """
    ht = 0.5 * (1.0 + tau)
    if ht.imag <= 0.0:
        raise DomainError(f"theta needs Im tau > 0, got tau={tau}")
    s = complex(s)
    m = int(round(s.imag / ht.imag))
    sp = s - m * ht
    k = int(round(sp.real))
    sr = sp - k
    q = cmath.exp(1j * math.pi * ht)
    lq = -math.pi * ht.imag  # log |q|
    M = 8
    while M < 64 and not (M * M * lq + 2.0 * math.pi * M * abs(sr.imag)
                          < math.log(tol)):
        M += 4
    ns = np.arange(-M, M + 1)
    series = np.sum(q ** (ns * ns) * np.exp(2j * math.pi * ns * sr))
    if m == 0:
        return complex(series)
    return complex(q ** (-m * m) * cmath.exp(-2j * math.pi * m * sr) * series)


# ---------------------------------------------------------------------------
# Abel map
# ---------------------------------------------------------------------------

def _ray_tail(qc: QuotientCurve, phi: float, r0: float | None = None, *,
              rtol: float = 1e-11) -> complex:
    """integral of dw / D on sheet 1 along the ray arg w = phi, |w| >= r0."""
    e = cmath.exp(1j * phi)
    if r0 is None:
        r0 = qc.far

    def g(v):
        ws = e / v
        eta = np.array([max(_eta_roots(qc, w), key=abs) for w in ws])
        return e / (v * v * _D_w(qc, ws, eta))
    val, _ = _gl_adapt(g, 1e-300, 1.0 / r0, rtol=rtol)
    return val


def _route_integral(qc: QuotientCurve, pts: list[complex], sheet: int,
                    *, rtol: float = 1e-9, track_arg: bool = False):
    """integral of dw / D along the polyline on the given sheet.

    The eta-triple is seeded by the far-field labels at the first
    waypoint and marched through the quadrature nodes.  With track_arg
    the continuous argument of D along sheet 1 is also returned (seeded
    at 2*arg(w) at the far anchor, the continuation of the positive real
    determination around the far circle), for the square-root factor of
    the prefactor.
    """
    col = sheet - 1

    def evaluate(panels: int, order: int):
        zs_all, ws_all = [], []
        for a, b in zip(pts[:-1], pts[1:]):
            u, wu = panel_nodes(0.0, 1.0, panels, order)
            d = b - a
            zs_all.append(a + u * d)
            ws_all.append(wu * d)
        zs = np.concatenate(zs_all)
        ws = np.concatenate(ws_all)
        seed = _eta_far_triple(qc, pts[0])
        vals = _eta_along(qc, zs, seed, pts[0])
        eta = vals[:, col]
        Ds = _D_w(qc, zs, eta)
        total = complex(np.sum(ws / Ds))
        if not track_arg:
            return total, None
        phi0 = cmath.phase(pts[0])
        arg = 2.0 * phi0
        arg += math.remainder(cmath.phase(Ds[0]) - arg, 2.0 * math.pi)
        for k in range(1, len(Ds)):
            arg += cmath.phase(Ds[k] / Ds[k - 1])
        # carry D and its argument to the actual endpoint (the last
        # quadrature node is interior to the final panel)
        tri_end = _eta_refine(qc, zs[-1], vals[-1], pts[-1])
        D_end = _D_w(qc, pts[-1], tri_end[col])
        arg += cmath.phase(D_end / Ds[-1])
        return total, (D_end, arg)

    prev, _ = evaluate(3, 12)
    panels = 5
    while panels <= 80:
        fine, info = evaluate(panels, 20)
        gap = abs(fine - prev)
        if gap <= rtol * max(1.0, abs(fine)):
            return fine, info
        prev = fine
        panels *= 2
    raise QuadratureNotConverged(
        f"route integral to {pts[-1]} on sheet {sheet}: "
        f"residual {gap:.3e} at {panels // 2} panels")


def _anchor_u(ctx: "ThetaContext", sheet: int) -> float:
    """Abel value at the positive real far anchor of the given sheet."""
    qc = ctx.qc
    legs = _leg_raws(qc)
    R_A, R_B, R_C, R_D = legs["R"]
    tailA, _, tailC, tailD = legs["tails"]
    if sheet == 1:
        return -ctx.C * tailA
    if sheet == 2:
        return ctx.C * (R_B + R_C + tailD)
    return ctx.C * (R_B + R_C - tailC)


def abel_u(ctx: "ThetaContext", sheet: int, w: complex) -> complex:
    """Abel map from the sheet-1 point at infinity to w on the sheet.

    Real w on a leg of the normalizing cycle is handled by the leg
    quadratures; any other target is reached by a validated route from
    the far field.  The value is the one determined by paths that never
    cross the sheet's cuts (the map is then single-valued); it is not
    reduced modulo the lattice.
    """
    if sheet not in (1, 2, 3):
        raise DomainError(f"sheet must be 1, 2 or 3, got {sheet}")
    qc = ctx.qc
    w = complex(w)
    rtol = 1e-11
    if w.imag == 0.0:
        x = w.real
        if sheet == 1 and x >= qc.w1:
            if x >= qc.far:
                return -ctx.C * _tail_inv(qc, x, _sel_max_re, 1.0, rtol=rtol)
            legs = _leg_raws(qc)
            return -ctx.C * (_legA_partial(qc, x, rtol=rtol)
                             + legs["tails"][0])
        if sheet == 1 and x <= 0.0:
            if x <= -qc.far:
                return ctx.C * _tail_inv(qc, -x, _sel_real, -1.0, rtol=rtol)
            legs = _leg_raws(qc)
            return ctx.C * (legs["tails"][1]
                            + _legB_partial(qc, x, rtol=rtol))
        if sheet == 3 and x >= 0.0:
            legs = _leg_raws(qc)
            if x >= qc.far:
                return ctx.C * (legs["R"][1] + legs["R"][2]
                                - _tail_invsqrt(qc, x, _sel_min_re, 1.0,
                                                rtol=rtol))
            return ctx.C * (legs["R"][1] + _legC_partial(qc, x, rtol=rtol))
        if sheet == 2 and x >= qc.w1:
            legs = _leg_raws(qc)
            if x >= qc.far:
                tail = _tail_invsqrt(qc, x, _sel_mid_re, -1.0, rtol=rtol)
            else:
                tail = _legD_partial(qc, x, rtol=rtol) + legs["tails"][3]
            return ctx.C * (legs["R"][1] + legs["R"][2] + tail)
    if abs(w) < 1e-3:
        raise DomainError(
            f"Abel target {w} too close to the triple point w = 0")
    route = _route_to(qc, w, sheet)
    leg_int, _ = _route_integral(qc, route, sheet)
    if sheet == 1:
        head = -ctx.C * _ray_tail(qc, cmath.phase(route[0]))
    else:
        head = _anchor_u(ctx, sheet)
        # azimuthal sweep from the real anchor is part of the route
    return head + ctx.C * leg_int


def _u1_and_v1(ctx: "ThetaContext", w: complex) -> tuple[complex, complex]:
    """Sheet-1 Abel value and eta1 / sqrt(D) in one shared determination.

    The square root is continued along the same route that defines the
    Abel value, from the positive determination at large positive real
    w.  On the real legs the continued argument is 0 on [w1, inf) and
    2 pi on (-inf, 0] (the winding of D ~ w^2 around the far circle), so
    there sqrt(D) is +sqrt(|D|) and -sqrt(|D|) respectively.
    """
    qc = ctx.qc
    w = complex(w)
    if w.imag == 0.0 and w.real >= qc.w1:
        u = abel_u(ctx, 1, w)
        eta = _sel_max_re(_eta_roots_many(qc, np.array([w])))[0]
        D = _D_w(qc, w, eta)
        return u, eta / math.sqrt(D.real)
    if w.imag == 0.0 and w.real < 0.0:
        u = abel_u(ctx, 1, w)
        eta = _sel_real(_eta_roots_many(qc, np.array([w])))[0]
        D = _D_w(qc, w, eta)
        return u, eta.real / -math.sqrt(D.real)
    if abs(w) >= qc.far:
        phi = cmath.phase(w)
        u = -ctx.C * _ray_tail(qc, phi, abs(w))
        eta = _eta_far_triple(qc, w)[0]
        D = _D_w(qc, w, eta)
        arg = 2.0 * phi
        arg += math.remainder(cmath.phase(D) - arg, 2.0 * math.pi)
        return u, eta / (math.sqrt(abs(D)) * cmath.exp(0.5j * arg))
    route = _route_to(qc, w, 1)
    leg_int, info = _route_integral(qc, route, 1, track_arg=True)
    u = -ctx.C * _ray_tail(qc, cmath.phase(route[0])) + ctx.C * leg_int
    D_end, arg = info
    root = math.sqrt(abs(D_end)) * cmath.exp(0.5j * arg)
    vals = _eta_march_end(qc, route)
    return u, vals[0] / root


def _eta_march_end(qc: QuotientCurve, route: list[complex]) -> np.ndarray:
    """Eta-triple at the end of a route (dense enough march)."""
    nodes = []
    for a, b in zip(route[:-1], route[1:]):
        n = max(4, int(abs(b - a) / (0.02 * max(1.0, qc.far))) + 2)
        nodes.append(a + np.linspace(0.0, 1.0, n) * (b - a))
    ws = np.concatenate(nodes)
    return _eta_along(qc, ws, _eta_far_triple(qc, route[0]), route[0])[-1]


# ---------------------------------------------------------------------------
# context
# ---------------------------------------------------------------------------

@dataclass
class ThetaContext:
    """Immutable bundle of periods, lattice data and whisker mass.

    Built once per (t, A); all evaluations that take the context are
    pure.  beta is the single-whisker-arm measure mass, beta_star the
    exceptional value of n*beta mod 1 at which the prefactor denominator
    degenerates, lam the real number (Im tau / 2 pi) log 2.
    """

    qc: QuotientCurve
    C: float
    tau: complex
    s0: complex
    beta: float
    beta_star: float
    u_A: float
    u2_inf: float
    lam: float

    def __hash__(self):
        return hash((self.qc.t, self.qc.A))


@lru_cache(maxsize=16)
def _context_cached(t: float, A: float, rtol: float) -> ThetaContext:
    qc = build_quotient(t, A)
    C = normalize_omega_S(qc)
    tau = compute_tau(qc, C, rtol=rtol)
    s0 = 0.25 * (-1.0 + tau)
    lam = tau.imag / (2.0 * math.pi) * math.log(2.0)
    legs = _leg_raws(qc)
    R_A, R_B, R_C, R_D = legs["R"]
    u_A = C * (legs["tails"][1] + _legB_partial(qc, -A, rtol=1e-11))
    u2_inf = C * (R_B + R_C)
    bstar = (0.5 + lam + u_A) % 1.0
    b = whisker_beta(t, A)
    return ThetaContext(qc=qc, C=C, tau=tau, s0=s0, beta=b,
                        beta_star=bstar, u_A=u_A, u2_inf=u2_inf, lam=lam)


def build_context(t: float, A: float | None = None, *,
                  rtol: float = 1e-10) -> ThetaContext:
    """Periods, theta data and Abel anchors for one supercritical (t, A)."""
    if A is None:
        A = solve_A(t).A
    if not (t > 0.125 and 0.0 < A):
        raise DomainError(f"supercritical parameters required, got {t}, {A}")
    return _context_cached(float(t), float(A), float(rtol))


def beta_star(ctx: ThetaContext) -> float:
    """Exceptional value of n*beta mod 1: half plus (tau/2 pi i) log 2
    plus the Abel integral from infinity to the sheet-1 zero of eta."""
    return ctx.beta_star


def in_N_epsilon(ctx: ThetaContext, n: int, eps: float) -> bool:
    """Whether n*beta keeps circle distance >= eps from beta_star."""
    d = abs(math.remainder(n * ctx.beta - ctx.beta_star, 1.0))
    return d >= eps


# ---------------------------------------------------------------------------
# prefactor and spurious-zero predictor
# ---------------------------------------------------------------------------

_OMEGA = cmath.exp(2j * math.pi / 3.0)


def M_n11(ctx: ThetaContext, n: int, z: complex, *,
          eps: float = 1e-6) -> complex:
    """Leading prefactor of the polynomial asymptotics off the support.

    The value is a function of w = z^3 alone: a 2^{-2u} factor, two
    theta ratios evaluated at lattice-shifted Abel values, and the
    branch-tracked eta1 / sqrt(D).  It tends to 1 at infinity and has a
    finite limit at the sheet-1 zero of eta1 where a theta zero in a
    denominator cancels against eta1.
    """
    if n % 2:
        raise DomainError(f"prefactor implemented for even n, got {n}")
    if not in_N_epsilon(ctx, n, eps):
        raise NotInNEpsilon(
            f"n={n}: n*beta is within {eps} of the exceptional value")
    z = complex(z)
    cbrtA = ctx.qc.A ** (1.0 / 3.0)
    for j in range(3):
        if abs(z + _OMEGA ** j * cbrtA) < 1e-6:
            raise PoleAtZ(
                f"z={z} within 1e-6 of a cancellation point; evaluate "
                "at a small offset instead")
    w = z ** 3
    uw, v1 = _u1_and_v1(ctx, w)
    delta = ctx.u_A - ctx.s0
    nu = n * ctx.beta - ctx.lam - 0.5
    num1 = theta(-delta, ctx.tau)
    den1 = theta(uw - delta, ctx.tau)
    num2 = theta(uw - delta + nu, ctx.tau)
    den2 = theta(-delta + nu, ctx.tau)
    if abs(den1) < 1e-12 * abs(num1):
        raise PoleAtZ(f"theta denominator vanishes at z={z}")
    return 2.0 ** (-2.0 * uw) * (num1 / den1) * (num2 / den2) * v1


@dataclass(frozen=True)
class PredictedZero:
    """A point on the real cycle where the prefactor numerator vanishes."""

    n: int
    z: float
    w: float
    sheet: int
    target: float
    residual: float

    @property
    def visible(self) -> bool:
        return self.sheet == 1


def spurious_zero_predictor(ctx: ThetaContext, n: int, *,
                            eps: float = 1e-6) -> PredictedZero:
    """Invert the Abel map on the real cycle for the wandering theta zero.

    The numerator theta factor of the prefactor vanishes where the Abel
    value equals u(-A) - n*beta + lam + 1/2 mod 1, a point that walks
    around the real cycle as n grows.  The cycle parameter is strictly
    monotone along each leg, so the leg is located from the target value
    and the point found by bracketing in the leg coordinate.  Only a
    sheet-1 hit is a visible zero of the polynomial.
    """
    if n % 2:
        raise DomainError(f"predictor implemented for even n, got {n}")
    if not in_N_epsilon(ctx, n, eps):
        raise NotInNEpsilon(
            f"n={n}: n*beta is within {eps} of the exceptional value")
    qc = ctx.qc
    C = ctx.C
    legs = _leg_raws(qc)
    R_A, R_B, R_C, R_D = legs["R"]
    V = (ctx.u_A - n * ctx.beta + ctx.lam + 0.5) % 1.0
    bounds = np.cumsum([0.0, C * R_B, C * R_C, C * R_D])
    if min(abs(V - b) for b in np.append(bounds, 1.0)) < 1e-12:
        raise DomainError(f"predicted point at a cycle junction, V={V}")

    if V < bounds[1]:
        sheet, lo, hi = 1, -qc.far * 50.0, -1e-12

        def g(x):
            return abel_u(ctx, 1, x).real - V
    elif V < bounds[2]:
        sheet, lo, hi = 3, 1e-12, qc.far * 50.0

        def g(x):
            return abel_u(ctx, 3, x).real - V
    elif V < bounds[3]:
        sheet, lo, hi = 2, qc.w1 * (1.0 + 1e-13), qc.far * 50.0

        def g(x):
            return abel_u(ctx, 2, x).real - V
    else:
        sheet, lo, hi = 1, qc.w1 * (1.0 + 1e-13), qc.far * 50.0

        def g(x):
            return abel_u(ctx, 1, x).real - (V - 1.0)

    x = brentq(g, lo, hi, xtol=1e-14, rtol=1e-15)
    resid = abs(math.remainder(abel_u(ctx, sheet, x).real - V, 1.0))
    zc = math.copysign(abs(x) ** (1.0 / 3.0), x)
    return PredictedZero(n=n, z=zc, w=float(x), sheet=sheet,
                         target=V, residual=resid)


# ---------------------------------------------------------------------------
# sanity functionals
# ---------------------------------------------------------------------------

def eta_branches(qc: QuotientCurve, w: complex) -> np.ndarray:
    """Labelled eta-triple at w, continued from the far-field ordering.

    At w = 0 all three branches coincide at 0.  Real w < 0 sits on the
    2-3 exchange line; the returned labels there are the limits from the
    upper side.  Points on a sheet-1 cut have no consistent labels and
    raise DomainError.
    """
    w = complex(w)
    if w == 0.0:
        return np.zeros(3, dtype=complex)
    if abs(w) >= qc.far:
        return _eta_far_triple(qc, w)
    if w.imag == 0.0 and w.real < 0.0:
        route = [-qc.far + 0.0j, w]
        return _eta_march_end(qc, route)
    route = _route_to(qc, w, 1)
    # the sheet-1 cut system is the union of all label cuts except the
    # negative axis; for labelling purposes also reject routes that
    # cross it, otherwise the 2/3 columns would be path-dependent
    if any(_segment_crossings(a, b, _cuts(qc)["neg"])
           for a, b in zip(route[:-1], route[1:])):
        raise DomainError(f"no label-preserving route to w={w}")
    return _eta_march_end(qc, route)


def f_ratio(qc: QuotientCurve, w: float, sheet: int) -> float:
    """eta^2 / D on a real leg; 1/3 at the triple point, 1 at infinity.

    w = 0 returns the triple-point limit by polynomial extrapolation in
    |w|^(1/3) along the requested leg (sheet 1 from the left, sheet 3
    from the right), since the direct ratio is 0/0 there and the error
    of a one-point evaluation only decays like |w|^(1/3).  w = inf on
    sheet 1 is evaluated far out where the ratio settles to 1 + O(1/w).
    """
    if w == 0.0:
        if sheet == 1:
            probes = [f_ratio(qc, -h ** 3, 1) for h in _F_STEPS]
        elif sheet == 3:
            probes = [f_ratio(qc, h ** 3, 3) for h in _F_STEPS]
        else:
            raise DomainError("triple-point limit needs sheet 1 or 3")
        return _neville_to_zero(_F_STEPS, probes)
    if math.isinf(w):
        if sheet != 1:
            raise DomainError("only sheet 1 has a finite ratio at infinity")
        return f_ratio(qc, 1.0e12, 1)
    ws = np.array([w], dtype=complex)
    if sheet == 1 and w >= qc.w1:
        eta = _sel_max_re(_eta_roots_many(qc, ws))[0]
    elif sheet == 1 and w <= 0.0:
        eta = _sel_real(_eta_roots_many(qc, ws))[0]
    elif sheet == 3 and w >= 0.0:
        eta = _sel_min_re(_eta_roots_many(qc, ws))[0]
    elif sheet == 2 and w >= qc.w1:
        eta = _sel_mid_re(_eta_roots_many(qc, ws))[0]
    else:
        raise DomainError(f"w={w} not on a real leg of sheet {sheet}")
    return float((eta * eta / _D_w(qc, w, eta)).real)


_F_STEPS = (2.0e-2, 1.0e-2, 5.0e-3, 2.5e-3, 1.25e-3)


def _neville_to_zero(hs, vals) -> float:
    """Neville tableau extrapolating samples (h, v) to h = 0."""
    v = list(vals)
    n = len(v)
    for m in range(1, n):
        for i in range(n - m):
            v[i] = v[i + 1] + (v[i + 1] - v[i]) * hs[i + m] / (
                hs[i] - hs[i + m])
    return v[0]


def u1_negative_axis_zroute(ctx: ThetaContext, *,
                            rtol: float = 1e-10) -> complex:
    """Abel value at the sheet-1 zero of eta via the unfolded curve.

    Independent route for the pullback identity: integrate the pulled
    back differential 3C dz / (3 xi^2 - 2 z^2 xi - (1+t) z) along the
    negative real z-axis from infinity to -A^{1/3} and compare with the
    w-plane leg value u(-A).  The two integrands live on different
    curves, so agreement checks the folding map end to end.
    """
    qc = ctx.qc
    t, C = qc.t, ctx.C
    params = qc.params
    R = max(qc.far ** (1.0 / 3.0) * 2.0, 8.0)
    zA = -qc.A ** (1.0 / 3.0)

    def dens(zs, xi):
        return 3.0 * C / (3.0 * xi * xi - 2.0 * zs * zs * xi
                          - (1.0 + t) * zs)

    def tail_g(v):
        out = np.empty(len(v), dtype=complex)
        for i, vi in enumerate(v):
            zz = -1.0 / vi
            roots = solve_cubic_xi(params, zz)
            xi1 = roots[np.argmax(np.abs(roots))]
            out[i] = dens(zz, xi1) / (vi * vi)
        return out

    tail, _ = _gl_adapt(tail_g, 1e-300, 1.0 / R, rtol=rtol)

    roots0 = solve_cubic_xi(params, -R + 0.0j)
    seed = roots0[np.argsort(-np.abs(roots0))]

    def fin_g(xs):
        vals = values_along(params, xs.astype(complex), seed, seed_at=-R)
        return dens(xs, vals[:, 0])

    fin, _ = _gl_adapt(fin_g, -R, zA, rtol=rtol)
    return tail + fin
