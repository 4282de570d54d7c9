"""Support geometry: whiskers, measure arms, droplet, moments.

The limiting measure lives on a nine-arm star: three straight spines
``[0, omega^j z1]`` plus six curved whiskers joining each spine tip to
the nearest pair of complex branch points.  Whiskers are level curves
of the height function and are traced by a Runge-Kutta march on the
unit-speed level-set field with the sheet pair tracked alongside the
position.  The module also evaluates the secondary measure on the
three rays where z^3 is negative, the droplet region cut out by the
quartic polar inequality, and the harmonic moments of the combined
droplet-plus-whisker system.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .boutroux import _period_integral
from .contour import gl_rule, pair_difference_integral, values_along
from .curve import (
    OMEGA,
    BranchSet,
    CurveParams,
    branch_points,
    label_sheets_at,
    solve_cubic_xi,
)
from .errors import DomainError, TrajectoryEscaped, UnknownArm

_SIDE_OFFSET = 1e-8
_GL3_X = np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])
_GL3_W = np.array([5.0, 8.0, 5.0]) / 18.0


@dataclass(frozen=True)
class Whisker:
    """Traced level-curve polyline from z1 to a complex branch point."""

    t: float
    A: float
    target: complex
    points: np.ndarray
    arclength: np.ndarray


@dataclass(frozen=True)
class MeasureArm:
    """Sampled measure arm: positions, density per arclength, tangents."""

    t: float
    A: float
    arm: str
    s: np.ndarray
    density: np.ndarray
    phase: np.ndarray


@dataclass(frozen=True)
class DropletBoundary:
    """Polar graph of the droplet boundary on a theta grid."""

    t: float
    A: float
    theta: np.ndarray
    radius: np.ndarray

    def area(self) -> float:
        # 0.5 * integral r^2 dtheta on a uniform periodic grid
        return 0.5 * float(np.mean(self.radius**2)) * 2.0 * np.pi


def _hop(params: CurveParams, z0: complex, vals: np.ndarray, z1: complex) -> np.ndarray:
    return values_along(params, [z0, z1], vals)[-1]


def _closest_pair_triple(params: CurveParams, z: complex) -> np.ndarray:
    """Fiber at z arranged as [pair_a, pair_b, spectator]."""

    roots = solve_cubic_xi(params, z)
    pairs = [(0, 1), (0, 2), (1, 2)]
    seps = [abs(roots[i] - roots[j]) for i, j in pairs]
    i, j = pairs[int(np.argmin(seps))]
    k = 3 - i - j
    return np.array([roots[i], roots[j], roots[k]])


def _trace_core(
    params: CurveParams,
    corner: complex,
    launch_dir: complex,
    target: complex,
    *,
    scale: float,
) -> tuple[np.ndarray, np.ndarray]:
    """March the level curve of the colliding pair from corner to target.

    The trajectory solves dz/dsigma = sign * i * conj(d)/|d| with
    d = xi_a - xi_b the tracked pair difference, which keeps
    Re(integral of d dz) constant at unit speed.  The pair identity is
    fixed once near the corner (the two closest fiber roots) and carried
    by continuation; the launch sign is chosen so the first step points
    along launch_dir.  Accumulated height drift is projected out after
    every step, so the polyline stays pinned to the level set to
    quadrature accuracy rather than RK order.
    """

    eps = 1e-7 * scale
    box = 3.0 * max(abs(target), abs(corner))
    length = abs(target - corner)
    z = corner + eps * launch_dir
    triple = _closest_pair_triple(params, z)
    d = triple[0] - triple[1]
    field = 1j * np.conj(d) / abs(d)
    sign = 1.0 if (np.conj(launch_dir) * field).real > 0.0 else -1.0

    pts = [complex(corner), complex(z)]
    acc = 0.0  # running height relative to the corner
    stop = 5e-7 * scale
    for _ in range(8000):
        dist = abs(z - target)
        if dist <= stop:
            break
        h = min(0.1 * min(abs(z - corner), dist), 0.02 * length)
        h = max(h, 1e-9 * scale)

        def f(tr: np.ndarray) -> complex:
            dd = tr[0] - tr[1]
            return sign * 1j * np.conj(dd) / abs(dd)

        k1 = f(triple)
        zb = z + 0.5 * h * k1
        tb = _hop(params, z, triple, zb)
        k2 = f(tb)
        zc = z + 0.5 * h * k2
        tc = _hop(params, zb, tb, zc)
        k3 = f(tc)
        zd = z + h * k3
        td = _hop(params, zc, tc, zd)
        k4 = f(td)
        znew = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tnew = _hop(params, zd, td, znew)

        # height increment along the step chord (path independent locally)
        dz = znew - z
        gsum = 0.0 + 0.0j
        gprev, tg = z, triple
        for x, w in zip(_GL3_X, _GL3_W):
            gz = z + x * dz
            tg = _hop(params, gprev, tg, gz)
            gsum += w * (tg[0] - tg[1])
            gprev = gz
        acc += (gsum * dz).real

        # project back onto the zero level set
        dnew = tnew[0] - tnew[1]
        v = -acc * np.conj(dnew) / abs(dnew) ** 2
        if abs(v) > 0.3 * h:
            v *= 0.3 * h / abs(v)
        zproj = znew + v
        tproj = _hop(params, znew, tnew, zproj)
        acc += (0.5 * ((tproj[0] - tproj[1]) + dnew) * v).real

        z, triple = zproj, tproj
        pts.append(complex(z))
        if abs(z) > box:
            raise TrajectoryEscaped(
                f"level-set trajectory left the search region at {z:.6g}")
    else:
        raise TrajectoryEscaped(
            f"level-set trajectory did not reach the target; "
            f"closest approach {abs(z - target):.3e}")

    pts.append(complex(target))
    points = np.array(pts)
    arclength = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(points)))])
    return points, arclength


def _resolve_target(bs: BranchSet, target: str) -> tuple[complex, complex]:
    if target == "z2":
        return bs.z2, np.exp(1j * np.pi / 3.0)
    if target == "z3":
        return bs.z3, np.exp(-1j * np.pi / 3.0)
    raise DomainError(f"whisker target must be 'z2' or 'z3', got {target!r}")


@lru_cache(maxsize=16)
def _whisker_cached(t: float, A: float, target: str) -> Whisker:
    params = CurveParams(t=t, A=A)
    bs = branch_points(params)
    zt, launch = _resolve_target(bs, target)
    scale = max(1.0, abs(bs.z2))
    points, arclength = _trace_core(
        params, complex(bs.z1), launch, complex(zt), scale=scale)
    return Whisker(t=t, A=A, target=complex(zt), points=points,
                   arclength=arclength)


def trace_whisker(t: float, A: float, target: str = "z2") -> Whisker:
    """Trace the whisker from z1 to the requested complex branch point."""

    return _whisker_cached(float(t), float(A), target)


def _plus_side(points: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Offset a polyline to the left of its orientation; returns (offset, tangents)."""

    tang = np.gradient(points)
    tang = tang / np.abs(tang)
    return points + 1j * delta * tang, tang


@lru_cache(maxsize=16)
def _whisker_boundary(t: float, A: float, target: str):
    """Plus-side pair differences along a traced whisker.

    Returns (s, density, phase, imag_residual) at the interior trace
    samples.  The pair is seeded from the two closest fiber roots next
    to z1 and marched along the offset polyline, so no global labeling
    is needed; the overall pair order is pinned by requiring positive
    density near z1.
    """

    params = CurveParams(t=t, A=A)
    w = _whisker_cached(t, A, target)
    inner = w.points[1:-1]
    off, tang = _plus_side(inner, _SIDE_OFFSET)
    seed = _closest_pair_triple(params, off[0])
    vals = values_along(params, off, seed)
    diff = vals[:, 0] - vals[:, 1]
    dens_c = diff * tang / (2j * np.pi * t)
    k = min(5, len(dens_c) - 1)
    if dens_c[k].real < 0.0:
        dens_c = -dens_c
    return inner, dens_c.real.copy(), tang, np.abs(dens_c.imag).copy()


_ARM_BASES = ("spine", "whisker-up", "whisker-down")


def _parse_arm(arm: str) -> tuple[str, int]:
    name = arm
    j = 0
    if name.startswith("omega2-"):
        j, name = 2, name[len("omega2-"):]
    elif name.startswith("omega-"):
        j, name = 1, name[len("omega-"):]
    if name not in _ARM_BASES:
        raise UnknownArm(f"no measure arm named {arm!r}")
    return name, j


def arm_names() -> list[str]:
    return [p + b for p in ("", "omega-", "omega2-") for b in _ARM_BASES]


def _mu1_density_complex(params: CurveParams, s: complex, base: str) -> complex:
    bs = branch_points(params)
    scale = max(1.0, abs(bs.z2))
    if base == "spine":
        if not (-1e-9 <= s.real <= bs.z1 + 1e-9) or abs(s.imag) > 1e-6 * scale:
            raise DomainError(f"point {s:.6g} does not lie on the spine")
        sheets = label_sheets_at(params, s.real + 1j * _SIDE_OFFSET)
        return (sheets.xi2 - sheets.xi1) / (2j * np.pi * params.t)
    target = "z2" if base == "whisker-up" else "z3"
    pts, dens, _, resid = _whisker_boundary(params.t, params.A, target)
    k = int(np.argmin(np.abs(pts - s)))
    if abs(pts[k] - s) > 1e-6 * scale:
        raise DomainError(f"point {s:.6g} does not lie on the {target} whisker")
    return dens[k] + 1j * resid[k]


def mu1_density(t: float, A: float, s: complex, arm: str) -> float:
    """Density of the primary measure per arclength at s on the named arm.

    Rotated arms delegate to the base arm: the curve is exactly
    equivariant under z -> omega z, and the arclength density is
    invariant because the line element rotates with the arm.
    """

    base, j = _parse_arm(arm)
    params = CurveParams(t=t, A=A)
    sp = complex(s) * OMEGA ** (-j) if j else complex(s)
    return float(_mu1_density_complex(params, sp, base).real)


@lru_cache(maxsize=16)
def _spine_mass(t: float, A: float) -> float:
    params = CurveParams(t=t, A=A)
    bs = branch_points(params)
    a = 1j * _SIDE_OFFSET
    b = bs.z1 + 1j * _SIDE_OFFSET
    seed = label_sheets_at(params, 0.5 * bs.z1 + 1j * _SIDE_OFFSET).as_array()
    value = pair_difference_integral(
        params, a, b, seed, exp_a=1, exp_b=2, rtol=1e-9)
    return float(-value.imag / (2.0 * np.pi * t))


@lru_cache(maxsize=16)
def _whisker_mass(t: float, A: float) -> float:
    """Mass of one whisker arm via the class integral on the wall side.

    Along the whisker the tracked difference has zero running real part
    (it is a level curve), so the arm mass is the imaginary part of the
    z1 -> z2 class integral divided by 2 pi t.  The integral only
    represents the whisker when the height actually vanishes, which is
    checked against the real part.
    """

    params = CurveParams(t=t, A=A)
    bs = branch_points(params)
    value, _ = _period_integral(params, bs, 1e-10)
    if abs(value.real) > 1e-5 * (1.0 + abs(value.imag)):
        raise DomainError(
            f"whisker mass needs the tuned A: height residual {value.real:.3e}")
    return float(-value.imag / (2.0 * np.pi * t))


def mu1_mass(t: float, A: float, arms="all") -> float:
    """Total primary-measure mass carried by the named arms."""

    if arms == "all":
        names = arm_names()
    elif isinstance(arms, str):
        names = [arms]
    else:
        names = list(arms)
    total = 0.0
    for arm in names:
        base, _ = _parse_arm(arm)
        if base == "spine":
            total += _spine_mass(t, A)
        else:
            total += _whisker_mass(t, A)
    return total


def beta(t: float, A: float) -> float:
    """Fraction of measure on one whisker arm: mass(whisker star) / 6."""

    return _whisker_mass(t, A)


_RAY_ANGLES = (np.pi, np.pi / 3.0, -np.pi / 3.0)


def _mu2_ray_index(s: complex) -> int:
    ang = np.angle(s)
    for k, ray in enumerate(_RAY_ANGLES):
        d = abs((ang - ray + np.pi) % (2.0 * np.pi) - np.pi)
        if d < 1e-6:
            return k
    raise DomainError(f"point {s:.6g} is not on a ray where z^3 is negative")


def _mu2_offset(u) -> np.ndarray:
    return -u - 1j * _SIDE_OFFSET * (1.0 + u)


@lru_cache(maxsize=16)
def _mu2_seed(t: float, A: float) -> tuple[complex, tuple[complex, ...]]:
    """One labeled fiber on the minus side of the negative-real ray.

    Labeling far out on the ray is expensive, so every other evaluation
    marches from this cached seed instead of labeling again.
    """

    params = CurveParams(t=t, A=A)
    bs = branch_points(params)
    u0 = 0.5 * max(1.0, abs(bs.z2))
    p0 = complex(_mu2_offset(u0))
    sheets = label_sheets_at(params, p0)
    return p0, tuple(sheets.as_array())


@lru_cache(maxsize=16)
def _mu2_sign(t: float, A: float) -> float:
    """Sign of the square-root term that makes the integrand decay."""

    params = CurveParams(t=t, A=A)
    p0, seed = _mu2_seed(t, A)
    p = complex(_mu2_offset(40.0 * abs(p0)))
    vals = values_along(params, [p0, p], np.array(seed))[-1]
    root = np.sqrt(p)
    diff = vals[2] - vals[1]
    return 1.0 if abs(2.0 * root + diff) < abs(-2.0 * root + diff) else -1.0


def _mu2_ray_density(params: CurveParams, us: np.ndarray) -> np.ndarray:
    """Density samples on the negative-real ray at radii us (ascending)."""

    t = params.t
    sgn = _mu2_sign(t, params.A)
    p0, seed = _mu2_seed(t, params.A)
    pts = _mu2_offset(us)
    order = np.argsort(np.abs(pts - p0))
    path = [p0] + [complex(p) for p in pts[order]]
    vals = values_along(params, path, np.array(seed))[1:]
    vals = vals[np.argsort(order)]
    combo = sgn * 2.0 * np.sqrt(pts) + (vals[:, 2] - vals[:, 1])
    return (combo * (-1.0) / (2j * np.pi * t)).real


def mu2_density(t: float, A: float, s: complex) -> float:
    """Density of the secondary measure per arclength at s on its star.

    The measure lives on the three rays where z^3 is negative; the
    density combines the boundary values of the outer sheet pair with a
    square-root counterterm whose sign is fixed by decay at infinity.
    Points on the rotated rays evaluate at the same radius on the
    negative-real ray, which carries the same density by exact
    threefold equivariance of the curve.
    """

    _mu2_ray_index(complex(s))
    params = CurveParams(t=t, A=A)
    dens = _mu2_ray_density(params, np.array([abs(s)]))
    return float(dens[0])


def mu2_total_mass(t: float, A: float, *, cutoff: float = 100.0) -> float:
    """Total secondary-measure mass over all three rays.

    One ray is integrated numerically and the other two carry the same
    mass by exact threefold symmetry.  The radius is parametrized as
    u = v^2, which turns the half-integer powers of u into an analytic
    integrand.  The truncated tail decays like u^(-5/2) with the next
    correction one power of u down, so a two-point fit at the last
    nodes integrates the tail analytically.
    """

    params = CurveParams(t=t, A=A)
    vmax = np.sqrt(cutoff)
    edges = [0.0, 0.25]
    while edges[-1] < vmax:
        edges.append(min(2.0 * edges[-1], vmax))
    x, wq = gl_rule(16)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(a + (b - a) * x)
        weights.append((b - a) * wq)
    vs = np.concatenate(nodes)
    ws = np.concatenate(weights)
    us = vs**2
    dens = _mu2_ray_density(params, us)
    ray = float(np.sum(ws * dens * 2.0 * vs))
    # fit dens ~ c u^(-5/2) + d u^(-7/2) at the last two nodes
    ua, ub = us[-2], us[-1]
    fa, fb = dens[-2] * ua**2.5, dens[-1] * ub**2.5
    d = (fa - fb) / (1.0 / ua - 1.0 / ub)
    c = fb - d / ub
    U = us[-1]
    tail = (2.0 / 3.0) * c * U**-1.5 + (2.0 / 5.0) * d * U**-2.5
    return 3.0 * (ray + tail)


def _polar_value(t: float, A: float, r: float, theta: float) -> float:
    c = np.cos(3.0 * theta)
    return 2.0 * r**3 * c - r**4 - (1.0 + t) * r**2 + A


def droplet_radius(t: float, A: float, theta: float) -> float:
    """Radius of the droplet boundary in direction theta.

    The polar expression is strictly decreasing in r for t > 1/8 and
    positive at r = 0, so the positive root is unique and bracketed by
    doubling.
    """

    if t <= 0.125:
        raise DomainError(f"droplet boundary needs t > 1/8, got t={t}")
    if A <= 0.0:
        raise DomainError(f"droplet boundary needs A > 0, got A={A}")
    hi = 1.0
    while _polar_value(t, A, hi, theta) > 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise DomainError("droplet boundary bracket did not close")
    return float(brentq(lambda r: _polar_value(t, A, r, theta), 0.0, hi,
                        xtol=1e-15, rtol=8.9e-16))


def droplet_boundary(t: float, A: float, n: int = 720) -> DropletBoundary:
    theta = np.linspace(-np.pi, np.pi, n, endpoint=False)
    radius = np.array([droplet_radius(t, A, th) for th in theta])
    return DropletBoundary(t=t, A=A, theta=theta, radius=radius)


def point_in_droplet(t: float, A: float, z: complex) -> bool:
    z = complex(z)
    if z == 0:
        return True
    return abs(z) < droplet_radius(t, A, float(np.angle(z)))


def _boundary_moment(t: float, A: float, k: int, n: int) -> complex:
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    r = np.array([droplet_radius(t, A, th) for th in theta])
    dFr = 6.0 * r**2 * np.cos(3.0 * theta) - 4.0 * r**3 - 2.0 * (1.0 + t) * r
    rp = 6.0 * r**3 * np.sin(3.0 * theta) / dFr
    integrand = r ** (1 - k) * (rp + 1j * r) * np.exp(-1j * k * theta)
    return complex(np.mean(integrand) / 1j)


def harmonic_moment(t: float, A: float, k: int, *, n: int = 512) -> complex:
    """Harmonic moment of the droplet plus the weighted whisker star.

    Combines the counterclockwise boundary integral of conj(s) s^(-k)
    with t times the k-th moment of the primary measure restricted to
    the whiskers.  Rotating an arm by omega multiplies its moment by
    omega^(-k), so the six whisker arms cancel exactly unless k is a
    multiple of 3; the surviving case reduces to the imaginary part of
    one class integral by the conjugation pairing of the two arms at z1.
    """

    k = int(k)
    if not 0 <= k <= 8:
        raise DomainError(f"harmonic moment implemented for 0 <= k <= 8, got {k}")
    total = _boundary_moment(t, A, k, n)
    if k % 3 == 0:
        params = CurveParams(t=t, A=A)
        bs = branch_points(params)
        value, _ = _period_integral(
            params, bs, 1e-10, f=lambda z, xi: xi * z ** (-k))
        total += -3.0 * value.imag / np.pi
    return total


def whisker_boundary_crossings(t: float, A: float, target: str = "z2") -> int:
    """Count sign changes of |z| - r_boundary(arg z) along the whisker."""

    w = trace_whisker(t, A, target)
    pts = w.points[1:-1]
    vals = np.array([abs(p) - droplet_radius(t, A, float(np.angle(p)))
                     for p in pts])
    sgn = np.sign(vals)
    sgn = sgn[sgn != 0.0]
    return int(np.sum(sgn[1:] != sgn[:-1]))


def sample_arm(t: float, A: float, arm: str, n: int = 200) -> MeasureArm:
    """Sample positions, densities, and tangents along one measure arm."""

    base, j = _parse_arm(arm)
    params = CurveParams(t=t, A=A)
    rot = OMEGA**j
    if base == "spine":
        bs = branch_points(params)
        u = np.linspace(0.0, 1.0, n + 2)[1:-1]
        xs = bs.z1 * 0.5 * (1.0 - np.cos(np.pi * u))
        off = xs + 1j * _SIDE_OFFSET
        seed = label_sheets_at(params, off[len(off) // 2]).as_array()
        vals = values_along(params, off, seed,
                            seed_at=len(off) // 2)
        dens = ((vals[:, 1] - vals[:, 0]) / (2j * np.pi * t)).real
        return MeasureArm(t=t, A=A, arm=arm, s=xs * rot,
                          density=dens, phase=np.full(len(xs), rot))
    target = "z2" if base == "whisker-up" else "z3"
    pts, dens, tang, _ = _whisker_boundary(t, A, target)
    if n and n < len(pts):
        idx = np.unique(np.linspace(0, len(pts) - 1, n).astype(int))
        pts, dens, tang = pts[idx], dens[idx], tang[idx]
    return MeasureArm(t=t, A=A, arm=arm, s=pts * rot,
                      density=dens.copy(), phase=tang * rot)
