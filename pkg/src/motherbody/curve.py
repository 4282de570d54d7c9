"""Three-sheeted spectral curve of the cubic model.

The curve is ``P(xi, z) = xi^3 - z^2 xi^2 - (1+t) z xi + z^3 + A = 0``.
For fixed parameters ``(t, A)`` it defines three sheet functions
``xi_1, xi_2, xi_3`` of ``z``, separated at infinity by

    xi_1(z) ~ z^2 + t/z,
    xi_2(z) ~ z^{1/2} - t/(2z),
    xi_3(z) ~ -z^{1/2} - t/(2z),

valid in the sector ``|arg z| < pi/3``.  This module provides the root
solver, the branch-point geometry in the cubed variable ``w = z^3``, and
homotopy continuation of the root triple along paths, which everything
else in the package is built on.
"""

from __future__ import annotations

import dataclasses
import itertools
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ContinuationAmbiguous,
    DegenerateDiscriminant,
    DomainError,
)

OMEGA = np.exp(2j * np.pi / 3)

# Relative scale below which two branch points count as merged.
# A double root of Q reconstructed from rounded coefficients splits by
# O(sqrt(eps) * leverage), which for our coefficient sizes can reach a few
# 1e-7 relative; anything tighter than ~1e-6 misses genuine degeneracies.
_DEGENERATE_RTOL = 1e-6

# Sector boundary rays {arg z = pi/3, pi, -pi/3}; crossing one of them
# exchanges the labels of sheets 2 and 3.
SECTOR_RAY_ANGLES = (np.pi / 3.0, np.pi, -np.pi / 3.0)


@dataclasses.dataclass(frozen=True)
class CurveParams:
    """Model parameters: total charge t > 0 and curve constant A >= 0."""

    t: float
    A: float

    def __post_init__(self) -> None:
        if not (self.t > 0.0):
            raise DomainError(f"t must be positive, got {self.t}")
        if not (self.A >= 0.0):
            raise DomainError(f"A must be nonnegative, got {self.A}")


@dataclasses.dataclass(frozen=True)
class XiTriple:
    """Sheet-labelled roots of the curve at one point z."""

    z: complex
    xi1: complex
    xi2: complex
    xi3: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.xi1, self.xi2, self.xi3], dtype=complex)


@dataclasses.dataclass(frozen=True)
class BranchSet:
    """Branch points of the curve, in both the w = z^3 and the z plane.

    ``w1`` is the real branch point (>= 0), ``w2`` the one with the
    branch cut leaving into the upper sextant, ``w3`` its conjugate.
    The z-plane representatives are the cube roots in the closed sector
    ``|arg z| <= pi/3``:  z1 >= 0 real, 0 <= arg z2 <= pi/3,
    z3 = conj(z2).
    """

    w1: float
    w2: complex
    w3: complex
    z1: float
    z2: complex
    z3: complex
    degenerate: bool

    @property
    def w(self) -> tuple[float, complex, complex]:
        return (self.w1, self.w2, self.w3)

    @property
    def z(self) -> tuple[float, complex, complex]:
        return (self.z1, self.z2, self.z3)


@dataclasses.dataclass
class SheetPath:
    """Root triple continued along a polyline path.

    ``points[k]`` is the k-th sample on the (refined) path and
    ``roots[k]`` the root values in a fixed tracking order: column j of
    ``roots`` is one analytic branch along the whole path.
    """

    points: np.ndarray
    roots: np.ndarray

    def pair_difference(self, i: int, j: int) -> np.ndarray:
        return self.roots[:, i] - self.roots[:, j]


# ----------------------------------------------------------------------
# root solving


def solve_cubic_xi(params: CurveParams, z) -> np.ndarray:
    """All three roots of the curve above z (unordered).

    Accepts a scalar or an array of z values; returns shape ``(..., 3)``.
    Closed-form (Cardano) evaluation followed by two Newton polish
    sweeps on the original cubic.
    """
    t, A = params.t, params.A
    zz = np.asarray(z, dtype=np.complex128)
    scalar = zz.ndim == 0
    zz = np.atleast_1d(zz)

    a = -zz * zz
    b = -(1.0 + t) * zz
    c = zz**3 + A

    # depressed form y^3 + p y + q with xi = y - a/3
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c

    disc = 0.25 * q * q + p**3 / 27.0
    sq = np.sqrt(disc)
    u3a = -0.5 * q + sq
    u3b = -0.5 * q - sq
    u3 = np.where(np.abs(u3a) >= np.abs(u3b), u3a, u3b)
    u = np.exp(np.log(np.where(u3 == 0, 1.0, u3)) / 3.0)
    u = np.where(u3 == 0, 0.0, u)
    # v = -p/(3u); when u vanishes the depressed cubic is y^3 = -q
    safe_u = np.where(u == 0, 1.0, u)
    v = np.where(u == 0, 0.0, -p / (3.0 * safe_u))

    w = OMEGA
    y = np.stack([u + v, w * u + np.conj(w) * v, np.conj(w) * u + w * v], axis=-1)
    xi = y - a[..., None] / 3.0

    z3 = zz[..., None]
    for _ in range(2):
        f = ((xi - z3 * z3) * xi - (1.0 + t) * z3) * xi + z3**3 + A
        fp = (3.0 * xi - 2.0 * z3 * z3) * xi - (1.0 + t) * z3
        step = np.where(fp != 0, f / np.where(fp == 0, 1.0, fp), 0.0)
        # reject steps that are large on the local root scale (multiple roots)
        trust = np.abs(step) < 0.1 * (1.0 + np.abs(xi))
        xi = xi - np.where(trust, step, 0.0)

    # Far from the origin the depressed-cubic shift is of order |z|^4 and
    # swamps the two O(|z|^{1/2}) roots; swap in a deflation that never
    # forms the bad difference.
    big = np.abs(zz) >= 40.0 * (1.0 + t + abs(A) ** (1.0 / 3.0))
    if np.any(big):
        xi[big] = _separated_triple(t, A, zz[big])

    order = np.lexsort((xi.imag, xi.real), axis=-1)
    xi = np.take_along_axis(xi, order, axis=-1)

    return xi[0] if scalar else xi


def _separated_triple(t: float, A: float, zz: np.ndarray) -> np.ndarray:
    """Root triple in the regime where one root sits near z^2.

    The dominant root is tracked as an offset g = xi0 - z^2 (Newton on a
    rearranged P that keeps every term O(t z^3) or smaller), so the exact
    pair sum -g and product -(z^3+A)/xi0 stay fully accurate; the small
    pair then comes from the quadratic with the usual cancellation-free
    branch choice.
    """
    g = t / zz
    for _ in range(4):
        w = zz * zz + g
        f = g * w * w - t * zz**3 - (1.0 + t) * zz * g + A
        fp = w * w + 2.0 * g * w - (1.0 + t) * zz
        g = g - f / fp
    xi0 = zz * zz + g
    s = -g
    pr = -(zz**3 + A) / xi0
    sd = np.sqrt(s * s - 4.0 * pr)
    sd = np.where(np.real(np.conj(s) * sd) >= 0.0, sd, -sd)
    r1 = 0.5 * (s + sd)
    r2 = pr / r1
    return np.stack([xi0, r1, r2], axis=-1)


def curve_polynomial(params: CurveParams, z, xi):
    """Value of P(xi, z); vectorized."""
    t, A = params.t, params.A
    return ((xi - z * z) * xi - (1.0 + t) * z) * xi + z**3 + A


def curve_dxi(params: CurveParams, z, xi):
    """Value of dP/dxi; vectorized.  Also the denominator of the
    holomorphic differential on the curve."""
    t = params.t
    return (3.0 * xi - 2.0 * z * z) * xi - (1.0 + t) * z


# ----------------------------------------------------------------------
# branch points and closed-form parameter curves


def _Q_polynomial(params: CurveParams) -> np.polynomial.Polynomial:
    """Cubic Q with discriminant(P)(z) = Q(z^3), as a coefficient object."""
    t, A = params.t, params.A
    return np.polynomial.Polynomial(
        [
            -27.0 * A * A,
            4.0 * (1.0 + t) ** 3 + 18.0 * A * t - 36.0 * A,
            t * t + 20.0 * t + 4.0 * A - 8.0,
            4.0,
        ]
    )


def discriminant_Q(params: CurveParams, w):
    """Evaluate Q(w), the cubic whose zeros w_k give the branch points."""
    return _Q_polynomial(params)(w)


def discriminant_of_Q(params: CurveParams) -> float:
    """Discriminant of Q as a polynomial in w (verified factorized form).

    Vanishes exactly on the three parameter curves A = A1(t), A2(t),
    A3(t) where branch points of the spectral curve collide.
    """
    t, A = params.t, params.A
    cube = 3.0 * A + t * t - 7.0 * t - 8.0
    quad = 16.0 * A * A - (1.0 + 20.0 * t - 8.0 * t * t) * A + t * (1.0 + t) ** 3
    return 16.0 * cube**3 * quad


def A1_of_t(t: float) -> float:
    """Lower collision value of A (branch points z1 and z2 merge); t <= 1/8."""
    if t > 0.125 + 1e-14:
        raise DomainError(f"A1 is defined for t <= 1/8, got t={t}")
    s = np.sqrt(max(1.0 - 8.0 * t, 0.0))
    return (1.0 + 20.0 * t - 8.0 * t * t - s**3) / 32.0


def A2_of_t(t: float) -> float:
    """Upper collision value of A on the subcritical branch; t <= 1/8."""
    if t > 0.125 + 1e-14:
        raise DomainError(f"A2 is defined for t <= 1/8, got t={t}")
    s = np.sqrt(max(1.0 - 8.0 * t, 0.0))
    return (1.0 + 20.0 * t - 8.0 * t * t + s**3) / 32.0


def A3_of_t(t: float) -> float:
    """Value of A at which z2 and z3 collide on the sector boundary."""
    return (1.0 + t) * (8.0 - t) / 3.0


def branch_points(params: CurveParams, *, allow_degenerate: bool = False) -> BranchSet:
    """Solve Q(w) = 0 and lift the roots to the z-plane sector.

    Raises DegenerateDiscriminant when two w-roots are closer than a
    relative 1e-6 unless ``allow_degenerate`` is set; the returned
    BranchSet then carries ``degenerate=True`` and symmetrised roots.
    """
    t, A = params.t, params.A
    if A == 0.0:
        # Q factors as w * (4w^2 + (t^2+20t-8) w + 4(1+t)^3)
        b = t * t + 20.0 * t - 8.0
        disc = b * b - 64.0 * (1.0 + t) ** 3
        sq = np.sqrt(complex(disc))
        wpair = (-b + sq) / 8.0, (-b - sq) / 8.0
        w1 = 0.0
        w2 = wpair[0] if wpair[0].imag >= 0 else wpair[1]
        w3 = np.conj(w2)
        degenerate = True
    else:
        q = _Q_polynomial(params)
        roots = q.roots()
        dq = q.deriv()
        for _ in range(2):
            den = dq(roots)
            roots = roots - np.where(np.abs(den) > 1e-300, q(roots) / den, 0.0)
        # exact root sum from the coefficients; used to recondition
        # (near-)multiple roots, whose individual locations are ill-posed
        wsum = -(t * t + 20.0 * t + 4.0 * A - 8.0) / 4.0
        scale = max(1.0, np.max(np.abs(roots)))
        sep = min(
            abs(roots[0] - roots[1]),
            abs(roots[0] - roots[2]),
            abs(roots[1] - roots[2]),
        )
        degenerate = sep < _DEGENERATE_RTOL * scale
        if np.max(np.abs(roots - wsum / 3.0)) < 1e-5 * scale:
            w1 = wsum / 3.0
            w2 = complex(w1)
            w3 = complex(w1)
            degenerate = True
        else:
            imag_mag = np.abs(roots.imag)
            k_real = int(np.argmin(imag_mag))
            others = [i for i in range(3) if i != k_real]
            # a double real root may acquire a spurious O(sqrt(eps)) imaginary
            # part in the eigensolve, so the realness test is deliberately loose
            if all(imag_mag[i] < 1e-7 * scale for i in others):
                # all real: the simple root is w1, the (near-)pair is w2 = w3
                rr = np.sort(roots.real)
                if abs(rr[1] - rr[0]) < abs(rr[2] - rr[1]):
                    w1, pair = rr[2], (rr[0], rr[1])
                else:
                    w1, pair = rr[0], (rr[1], rr[2])
                m = 0.5 * (wsum - w1)
                w2 = complex(m)
                w3 = complex(m)
                degenerate = degenerate or abs(pair[1] - pair[0]) < _DEGENERATE_RTOL * scale
            else:
                w1 = roots[k_real].real
                wc = roots[others[0]] if roots[others[0]].imag > 0 else roots[others[1]]
                w2 = complex(0.5 * (wsum - w1) + 1j * wc.imag)
                w3 = complex(np.conj(w2))

    if degenerate and not allow_degenerate:
        raise DegenerateDiscriminant(
            f"branch points nearly coincide at t={t}, A={A}"
        )
    if w1 < 0:
        if w1 > -1e-9 * max(1.0, abs(w2)):
            w1 = 0.0
        else:
            raise DomainError(f"no nonnegative real branch point: w1={w1}")

    z1 = float(np.cbrt(w1))
    z2 = complex(np.exp(np.log(w2) / 3.0)) if w2 != 0 else 0.0j
    if z2.imag < 0:
        z2 = np.conj(z2)
    z3 = complex(np.conj(z2))
    return BranchSet(w1=float(w1), w2=w2, w3=w3, z1=z1, z2=z2, z3=z3,
                     degenerate=bool(degenerate))


# ----------------------------------------------------------------------
# continuation


_PERMS = np.array(list(itertools.permutations(range(3))), dtype=int)


def _match_step(prev: np.ndarray, new_unordered: np.ndarray):
    """Order ``new_unordered`` against ``prev``; return (ordered, ok)."""
    d = np.abs(new_unordered[None, :] - prev[:, None])
    costs = d[np.arange(3)[None, :], _PERMS].max(axis=1)
    best = _PERMS[int(np.argmin(costs))]
    ordered = new_unordered[best]
    sep = min(
        abs(ordered[0] - ordered[1]),
        abs(ordered[0] - ordered[2]),
        abs(ordered[1] - ordered[2]),
    )
    disp = float(np.max(np.abs(ordered - prev)))
    return ordered, disp < 0.5 * sep if sep > 0 else False


def _advance(params, z0, r0, z1, out_pts, out_roots, depth=60):
    """March the triple from (z0, r0) to z1, inserting midpoints on demand."""
    new = solve_cubic_xi(params, z1)
    ordered, ok = _match_step(r0, new)
    if ok:
        out_pts.append(z1)
        out_roots.append(ordered)
        return ordered
    if depth <= 0 or abs(z1 - z0) < 1e-12 * (1.0 + abs(z0)):
        raise ContinuationAmbiguous(
            f"cannot separate sheets between z={z0} and z={z1}"
        )
    mid = 0.5 * (z0 + z1)
    rmid = _advance(params, z0, r0, mid, out_pts, out_roots, depth - 1)
    return _advance(params, mid, rmid, z1, out_pts, out_roots, depth - 1)


def continue_xi_pair(params: CurveParams, path, seed: np.ndarray) -> SheetPath:
    """Continue roots along ``path`` starting from the values in ``seed``.

    ``path`` is a sequence of complex waypoints; consecutive waypoints
    are joined by straight segments, refined adaptively so that every
    accepted step moves each root by less than half the minimal root
    separation.  ``seed`` holds either all three root values at
    ``path[0]`` in the desired tracking order, or just the pair to be
    tracked; with a pair seed the third root is recovered from the
    cubic and tracked invisibly (matching stays most robust with the
    full triple), and the returned path is restricted to the pair.
    """
    pts = np.asarray(path, dtype=complex)
    if pts.ndim != 1 or pts.size < 1:
        raise DomainError("path must contain at least one point")
    seed = np.asarray(seed, dtype=complex)
    res = curve_polynomial(params, pts[0], seed)
    scale = 1.0 + np.abs(seed).max() ** 3
    if np.max(np.abs(res)) > 1e-6 * scale:
        raise DomainError("seed does not solve the curve at path[0]")

    pair_only = seed.size == 2
    if pair_only:
        roots0 = solve_cubic_xi(params, pts[0])
        taken: list[int] = []
        for s in seed:
            j = int(np.argmin(np.abs(roots0 - s)))
            if j in taken:
                raise DomainError("seed pair matches a single root twice")
            taken.append(j)
        rest = ({0, 1, 2} - set(taken)).pop()
        seed = np.array([seed[0], seed[1], roots0[rest]], dtype=complex)

    out_pts = [complex(pts[0])]
    out_roots = [seed]
    cur = seed
    # pre-refine long segments so the fast path rarely recurses deeply
    for k in range(len(pts) - 1):
        a, b = pts[k], pts[k + 1]
        n = max(2, int(np.ceil(abs(b - a) / max(0.05 * (1.0 + abs(a)), 1e-12))))
        for j in range(1, n + 1):
            target = a + (b - a) * j / n
            cur = _advance(params, out_pts[-1], cur, target, out_pts, out_roots)
    roots = np.array(out_roots)
    if pair_only:
        roots = roots[:, :2]
    return SheetPath(points=np.array(out_pts), roots=roots)


# ----------------------------------------------------------------------
# sheet labelling by routed continuation from the real anchor


def anchor_point(params: CurveParams) -> float:
    """Real anchor far outside all finite curve structure."""
    bs = branch_points(params, allow_degenerate=True)
    return 100.0 * (1.0 + max(1.0, bs.z1, abs(bs.z2)))


def sheet_models_at(params: CurveParams, z):
    """Asymptotic sheet values (xi1, xi2, xi3) used for anchoring labels."""
    t = params.t
    s = np.sqrt(np.asarray(z, dtype=complex))
    return (
        z * z + t / z,
        s - 0.5 * t / z,
        -s - 0.5 * t / z,
    )


def anchor_triple(params: CurveParams) -> XiTriple:
    """Labelled roots at the anchor point, matched to their asymptotes."""
    za = anchor_point(params)
    roots = solve_cubic_xi(params, za)
    models = np.array(sheet_models_at(params, za), dtype=complex)
    # greedy unique assignment; at the anchor the scales differ wildly
    order = [-1, -1, -1]
    used: set[int] = set()
    for i in np.argsort([-abs(m) for m in models]):
        j = min((j for j in range(3) if j not in used),
                key=lambda j: abs(roots[j] - models[i]))
        order[i] = j
        used.add(j)
    xi = roots[np.array(order)]
    rel = np.abs(xi - models) / np.abs(models)
    if np.max(rel) > 1e-2:
        raise ContinuationAmbiguous("anchor labelling failed to match asymptotes")
    return XiTriple(z=complex(za), xi1=complex(xi[0]), xi2=complex(xi[1]),
                    xi3=complex(xi[2]))


def provisional_cuts(params: CurveParams) -> list[np.ndarray]:
    """Straight-segment stand-ins for the branch cuts of sheet one/two.

    The spine [0, z1] plus, when the upper branch point leaves the real
    axis, straight whiskers z1 -> z2 and z1 -> z3, all repeated under
    rotation by 120 degrees.  Used for route planning before the true
    whiskers are traced; traced polylines can be passed wherever these
    are accepted.
    """
    bs = branch_points(params, allow_degenerate=True)
    arms: list[np.ndarray] = []
    base: list[np.ndarray] = []
    if bs.z1 > 0:
        base.append(np.array([0.0 + 0.0j, bs.z1 + 0.0j]))
    node = abs(bs.w2 - bs.w3) <= 1e-6 * max(1.0, abs(bs.w2))
    if node:
        # a merged pair is either a node (two sheets crossing, trivial
        # monodromy) or an all-sheet collision; only the fiber tells
        fib = solve_cubic_xi(params, complex(bs.z2))
        sep = max(abs(fib[0] - fib[1]), abs(fib[0] - fib[2]),
                  abs(fib[1] - fib[2]))
        if sep < 1e-3 * max(1.0, float(np.max(np.abs(fib)))):
            node = False
    if abs(bs.z2) > 0:
        if node:
            # not a cut: a short transverse blocker makes routes detour
            # around the point the sheet march cannot pass through
            d = 1e-3 * (1.0 + abs(bs.z2))
            for p in {bs.z2, bs.z3}:
                base.append(np.array([p - 1j * d, p + 1j * d]))
        elif bs.z2.imag > 1e-12 * abs(bs.z2):
            base.append(np.array([complex(bs.z1), bs.z2]))
            base.append(np.array([complex(bs.z1), bs.z3]))
    for k in range(3):
        rot = OMEGA**k
        for arm in base:
            arms.append(arm * rot)
    return arms


def _segment_crossings(a0: complex, a1: complex, poly: np.ndarray) -> list[float]:
    """Parameters s in (0,1) where segment a0->a1 crosses the polyline."""
    d = a1 - a0
    if d == 0:
        return []
    p0 = poly[:-1]
    p1 = poly[1:]
    e = p1 - p0
    denom = (d.real * e.imag - d.imag * e.real)
    rel = p0 - a0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom != 0, (rel.real * e.imag - rel.imag * e.real) / denom, np.nan)
        u = np.where(denom != 0, (rel.real * d.imag - rel.imag * d.real) / denom, np.nan)
    hits = np.where((s > 1e-12) & (s < 1.0 - 1e-12) & (u >= 0.0) & (u <= 1.0))[0]
    return sorted(float(s[i]) for i in hits)


def _ray_crossing(a0: complex, a1: complex, angle: float) -> float | None:
    """Parameter s where segment a0->a1 crosses the ray from 0 at ``angle``."""
    e = np.exp(1j * angle)
    # rotate so the ray is the positive real axis
    b0 = a0 * np.conj(e)
    b1 = a1 * np.conj(e)
    if (b0.imag > 0) == (b1.imag > 0):
        return None
    if b0.imag == b1.imag:
        return None
    s = b0.imag / (b0.imag - b1.imag)
    x = b0.real + s * (b1.real - b0.real)
    if x <= 0 or not (1e-12 < s < 1 - 1e-12):
        return None
    return float(s)


def _leg_events(a0: complex, a1: complex, cuts: Sequence[np.ndarray]):
    """Crossing events on one leg: list of (s, kind) with kind 'spine' or 'sector'."""
    events: list[tuple[float, str]] = []
    for poly in cuts:
        for s in _segment_crossings(a0, a1, poly):
            events.append((s, "sheet12"))
    for ang in SECTOR_RAY_ANGLES:
        s = _ray_crossing(a0, a1, ang)
        if s is not None:
            events.append((s, "sheet23"))
    events.sort()
    return events


def _route_candidates(params: CurveParams, z: complex,
                      cuts: Sequence[np.ndarray]) -> list[list[complex]]:
    za = anchor_point(params)
    r_cut = max((np.max(np.abs(p)) for p in cuts), default=0.0)
    r_out = 1.4 * max(r_cut, 1e-3)
    theta = float(np.angle(z))
    routes: list[list[complex]] = []

    def arc(r: float, th0: float, th1: float) -> list[complex]:
        n = max(2, int(np.ceil(abs(th1 - th0) / 0.15)))
        return [r * np.exp(1j * (th0 + (th1 - th0) * j / n)) for j in range(1, n + 1)]

    if abs(z) >= r_out:
        routes.append([za] + arc(abs(z), 0.0, theta) + [z])
    routes.append([za] + arc(za, 0.0, theta)
                  + [r_out * np.exp(1j * theta), z])
    for k in (1, -1, 2, -2, 3, -3, 4, -4, 5, -5, 6, -6):
        phi = theta + k * np.pi / 12.0
        routes.append(
            [za] + arc(za, 0.0, phi)
            + [r_out * np.exp(1j * phi), abs(z) * np.exp(1j * phi)]
            + arc(abs(z), phi, theta) + [z]
        )
    return routes


def label_sheets_at(params: CurveParams, z,
                    cuts: Sequence[np.ndarray] | None = None) -> XiTriple:
    """Sheet-labelled roots at z by continuation from the real anchor.

    The route from the anchor avoids the sheet-1/2 branch cuts (the
    provisional straight cuts by default, or traced whiskers passed via
    ``cuts``); crossings of the sector rays are tracked and exchange the
    labels of sheets two and three.

    At A = A3(t) exactly, the rotated copies of the provisional cuts
    close into a fence through the branch points (arg z2 = pi/3 there)
    and no cut-avoiding route exists to points inside it.  Labels there
    are still well defined by continuity in A, so a failed route search
    falls back to labelling at reduced A and marching A back up at
    fixed z.
    """
    z = complex(z)
    if cuts is None:
        cuts = provisional_cuts(params)
    for poly in cuts:
        if _point_polyline_distance(z, poly) < 1e-11 * (1.0 + abs(z)):
            raise DomainError(f"z={z} lies on a branch cut")

    anchor = anchor_triple(params)
    for route in _route_candidates(params, z, cuts):
        legs = list(zip([route[0]] + route[1:], route[1:]))
        # reject candidates that cross a sheet-1/2 cut
        blocked = False
        swaps: list[tuple[int, float]] = []  # (leg index, s)
        for i, (a0, a1) in enumerate(legs):
            for s, kind in _leg_events(a0, a1, cuts):
                if kind == "sheet12":
                    blocked = True
                    break
                swaps.append((i, s))
            if blocked:
                break
        if blocked:
            continue
        try:
            sp = continue_xi_pair(params, route, anchor.as_array())
        except ContinuationAmbiguous:
            # route passed too close to unmodelled structure; try the next
            continue
        # count sector-ray crossings to restore sheet labels 2/3
        n_swaps = len(swaps)
        xi = sp.roots[-1]
        if n_swaps % 2 == 1:
            xi = xi[[0, 2, 1]]
        return XiTriple(z=z, xi1=complex(xi[0]), xi2=complex(xi[1]),
                        xi3=complex(xi[2]))
    if params.A > 0:
        return _label_by_A_deformation(params, z)
    raise ContinuationAmbiguous(f"no cut-avoiding route from anchor to z={z}")


def _label_by_A_deformation(params: CurveParams, z: complex,
                            depth: int = 2) -> XiTriple:
    """Labels at z by continuity in A when every route at params.A is fenced."""
    if depth <= 0:
        raise ContinuationAmbiguous(
            f"no labelling route to z={z} at any deformation level")
    last: Exception | None = None
    for frac in (0.9, 0.75, 0.5, 0.25):
        a_lo = frac * params.A
        try:
            cur = label_sheets_at(CurveParams(t=params.t, A=a_lo), z).as_array()
        except DomainError as exc:
            last = exc
            continue
        except ContinuationAmbiguous:
            try:
                cur = _label_by_A_deformation(
                    CurveParams(t=params.t, A=a_lo), z, depth - 1).as_array()
            except ContinuationAmbiguous as exc:
                last = exc
                continue
        a_cur = a_lo
        da = (params.A - a_lo) / 16.0
        failed = False
        while a_cur < params.A:
            a_next = min(a_cur + da, params.A)
            roots = solve_cubic_xi(CurveParams(t=params.t, A=a_next),
                                   np.array([z]))[0]
            new, ok = _match_step(cur, roots)
            if not ok:
                da *= 0.5
                if da < 1e-12 * params.A:
                    failed = True
                    break
                continue
            cur, a_cur = new, a_next
        if failed:
            last = ContinuationAmbiguous(
                f"sheet identity lost while continuing A at z={z}")
            continue
        return XiTriple(z=z, xi1=complex(cur[0]), xi2=complex(cur[1]),
                        xi3=complex(cur[2]))
    raise last if last is not None else ContinuationAmbiguous(
        f"no labelling route to z={z}")


def _point_polyline_distance(z: complex, poly: np.ndarray) -> float:
    p0 = poly[:-1]
    p1 = poly[1:]
    d = p1 - p0
    L2 = np.abs(d) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(L2 > 0, ((z - p0) * np.conj(d)).real / L2, 0.0)
    s = np.clip(s, 0.0, 1.0)
    proj = p0 + s * d
    return float(np.min(np.abs(z - proj)))
