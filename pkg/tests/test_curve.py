"""Tests for the spectral-curve module: roots, branch points, labeling."""

import numpy as np
import pytest

from motherbody.curve import (
    A1_of_t,
    A2_of_t,
    A3_of_t,
    CurveParams,
    OMEGA,
    anchor_point,
    anchor_triple,
    branch_points,
    continue_xi_pair,
    curve_polynomial,
    discriminant_Q,
    discriminant_of_Q,
    label_sheets_at,
    sheet_models_at,
    solve_cubic_xi,
)
from motherbody.errors import (
    ContinuationAmbiguous,
    DegenerateDiscriminant,
    DomainError,
)

# Boutroux value A(0.2), frozen from the solve_A golden run
A_SOLVED_02 = 0.13766277498421098

RNG = np.random.default_rng(20260815)


def _grid_params():
    return [
        CurveParams(t=0.2, A=0.1),
        CurveParams(t=0.2, A=A_SOLVED_02),
        CurveParams(t=0.5, A=0.7),
        CurveParams(t=1.0, A=2.0),
        CurveParams(t=3.0, A=0.3),
    ]


class TestSolveCubic:
    def test_residuals_random_grid(self):
        for params in _grid_params():
            z = RNG.normal(size=40) + 1j * RNG.normal(size=40)
            z *= RNG.uniform(0.1, 20.0, size=40)
            roots = solve_cubic_xi(params, z)
            res = curve_polynomial(params, z[:, None], roots)
            scale = np.maximum(1.0, np.abs(z[:, None]) ** 6)
            assert np.max(np.abs(res) / scale) < 1e-10

    def test_zero_root_at_minus_cuberoot_A(self):
        params = CurveParams(t=0.3, A=0.8)
        z = -params.A ** (1.0 / 3.0)
        roots = solve_cubic_xi(params, z)
        assert np.min(np.abs(roots)) < 1e-12

    def test_asymptotic_models_far_out(self):
        params = CurveParams(t=0.2, A=A_SOLVED_02)
        z = 1e6 + 0j
        roots = solve_cubic_xi(params, z)
        models = np.array(sheet_models_at(params, z))
        for m in models:
            assert np.min(np.abs(roots - m) / abs(m)) < 1e-6

    def test_collision_at_z1(self):
        params = CurveParams(t=0.2, A=A_SOLVED_02)
        bs = branch_points(params)
        roots = solve_cubic_xi(params, bs.z1 + 0j)
        seps = sorted(
            abs(roots[i] - roots[j]) for i in range(3) for j in range(i + 1, 3)
        )
        assert seps[0] < 1e-5

    def test_deterministic_order(self):
        params = CurveParams(t=0.5, A=0.7)
        r1 = solve_cubic_xi(params, 2.0 + 1.0j)
        r2 = solve_cubic_xi(params, 2.0 + 1.0j)
        assert np.array_equal(r1, r2)
        keys = [(round(r.real, 9), round(r.imag, 9)) for r in r1]
        assert keys == sorted(keys)


class TestVieta:
    @pytest.mark.parametrize("params", _grid_params())
    def test_symmetric_functions(self, params):
        z = RNG.normal(size=25) + 1j * RNG.normal(size=25)
        z *= RNG.uniform(0.2, 8.0, size=25)
        r = solve_cubic_xi(params, z)
        e1 = r.sum(axis=1)
        e2 = r[:, 0] * r[:, 1] + r[:, 0] * r[:, 2] + r[:, 1] * r[:, 2]
        e3 = r.prod(axis=1)
        scale = 1.0 + np.abs(z) ** 2
        assert np.max(np.abs(e1 - z**2) / scale**2) < 1e-9
        assert np.max(np.abs(e2 + (1 + params.t) * z) / scale) < 1e-9
        assert np.max(np.abs(e3 + z**3 + params.A) / scale**3) < 1e-9


class TestDiscriminant:
    def test_Q_at_zero(self):
        params = CurveParams(t=0.7, A=1.3)
        assert abs(discriminant_Q(params, 0.0) + 27 * params.A**2) < 1e-12

    def test_A3_root_structure(self):
        t = 0.4
        params = CurveParams(t=t, A=A3_of_t(t))
        w_simple = (t - 8.0) ** 2 / 12.0
        w_double = -3.0 * (1.0 + t)
        assert abs(discriminant_Q(params, w_simple)) < 1e-9 * (1 + abs(w_simple)) ** 3
        assert abs(discriminant_Q(params, w_double)) < 1e-9 * (1 + abs(w_double)) ** 3
        # w_double is a double root: Q changes sign at w_simple but not there
        eps = 1e-4
        left = discriminant_Q(params, w_double - eps)
        right = discriminant_Q(params, w_double + eps)
        assert np.sign(left) == np.sign(right)
        left = discriminant_Q(params, w_simple - eps)
        right = discriminant_Q(params, w_simple + eps)
        assert np.sign(left) != np.sign(right)

    def test_A0_factorization(self):
        t = 3.6
        params = CurveParams(t=t, A=0.0)
        w = np.linspace(-30, 10, 23)
        expected = w * (4 * w**2 + (t * t + 20 * t - 8) * w + 4 * (1 + t) ** 3)
        got = discriminant_Q(params, w)
        assert np.max(np.abs(got - expected)) < 1e-9 * np.max(1 + np.abs(w) ** 3)

    def test_disc_of_Q_vanishes_on_critical_branches(self):
        # A1 and A2 exist for t <= 1/8; A3 for all t
        for t in np.linspace(0.005, 0.124, 20):
            for A in (A1_of_t(t), A2_of_t(t)):
                d = discriminant_of_Q(CurveParams(t=t, A=A))
                assert abs(d) < 1e-8, (t, A, d)
        for t in np.linspace(0.2, 7.0, 20):
            d = discriminant_of_Q(CurveParams(t=t, A=A3_of_t(t)))
            assert abs(d) < 1e-8 * (1 + 3 * (1 + t)) ** 6, (t, d)


class TestCriticalConstants:
    def test_A1_at_tstar(self):
        assert abs(A1_of_t(0.125) - 27.0 / 256.0) < 1e-14

    def test_A1_A2_at_zero(self):
        assert abs(A1_of_t(0.0)) < 1e-15
        assert abs(A2_of_t(0.0) - 1.0 / 16.0) < 1e-15

    def test_A3_at_eight(self):
        assert abs(A3_of_t(8.0)) < 1e-15

    def test_domain_guard(self):
        with pytest.raises(DomainError):
            A1_of_t(0.2)
        with pytest.raises(DomainError):
            A2_of_t(0.126)


class TestBranchPoints:
    def test_subcritical_closed_form(self):
        t = 0.02
        params = CurveParams(t=t, A=A1_of_t(t))
        bs = branch_points(params, allow_degenerate=True)
        root = np.sqrt(1 - 8 * t)
        z1 = 0.75 * (1 - root) ** (2.0 / 3.0)
        z2 = 0.25 * (3 + root)
        assert abs(bs.z1 - z1) < 1e-10
        assert abs(bs.z2 - z2) < 1e-10

    def test_triple_collision_at_critical_point(self):
        bs = branch_points(CurveParams(t=0.125, A=27.0 / 256.0),
                           allow_degenerate=True)
        for z in (bs.z1, bs.z2, bs.z3):
            assert abs(z - 0.75) < 1e-7

    def test_A0_degenerate_closed_form(self):
        t = 3.591121476556432  # second critical time
        bs = branch_points(CurveParams(t=t, A=0.0), allow_degenerate=True)
        assert bs.z1 == 0.0
        inner = 8 - 20 * t - t * t + 1j * np.sqrt(t * (8 - t) ** 3)
        z2 = 0.5 * inner ** (1.0 / 3.0)
        assert abs(bs.z2 - z2) < 1e-10 * abs(z2)
        # eq for z2^3 = w2: residual of the factored quadratic
        res = (bs.z2**6 + (t * t + 20 * t - 8) / 4.0 * bs.z2**3
               + (1 + t) ** 3)
        assert abs(res) < 1e-8

    def test_canonical_sector(self):
        for params in _grid_params():
            bs = branch_points(params, allow_degenerate=True)
            assert bs.z1.imag == 0 and bs.z1.real >= 0
            assert bs.z2.imag > 0
            assert abs(np.angle(bs.z2)) <= np.pi / 3 + 1e-12
            assert abs(bs.z3 - np.conj(bs.z2)) == 0.0

    def test_degenerate_raises_without_flag(self):
        t = 0.4
        with pytest.raises(DegenerateDiscriminant):
            branch_points(CurveParams(t=t, A=A3_of_t(t)))

    def test_w_roots_satisfy_Q(self):
        for params in _grid_params():
            bs = branch_points(params, allow_degenerate=True)
            for w in (bs.w1, bs.w2, bs.w3):
                assert abs(discriminant_Q(params, w)) < 1e-9 * (1 + abs(w)) ** 3


class TestLabeling:
    def test_anchor_matches_models(self):
        params = CurveParams(t=0.2, A=A_SOLVED_02)
        trip = anchor_triple(params)
        za = anchor_point(params)
        m1, m2, m3 = sheet_models_at(params, za)
        assert abs(trip.xi1 - m1) / abs(m1) < 1e-6
        assert abs(trip.xi2 - m2) / abs(m2) < 1e-4
        assert abs(trip.xi3 - m3) / abs(m3) < 1e-4

    def test_real_labels_beyond_z1_subcritical(self):
        t = 0.1
        params = CurveParams(t=t, A=A1_of_t(t))
        bs = branch_points(params, allow_degenerate=True)
        for x in (bs.z1 + 0.2, bs.z1 + 1.0, bs.z1 + 5.0):
            trip = label_sheets_at(params, x)
            for xi in (trip.xi1, trip.xi2, trip.xi3):
                assert abs(xi.imag) < 1e-9

    def test_xi1_real_and_below_on_negative_axis_at_A3(self):
        t = 0.2
        params = CurveParams(t=t, A=A3_of_t(t))
        bs = branch_points(params, allow_degenerate=True)
        for frac in (0.2, 0.55, 0.9):
            s = -frac * abs(bs.z2)
            trip = label_sheets_at(params, s)
            assert abs(trip.xi1.imag) < 1e-8
            assert trip.xi1.real < s * s / 3.0

    def test_on_cut_raises(self):
        params = CurveParams(t=0.2, A=A_SOLVED_02)
        bs = branch_points(params)
        with pytest.raises(DomainError):
            label_sheets_at(params, 0.5 * bs.z1)

    def test_sheet_symmetry_under_rotation(self):
        params = CurveParams(t=0.5, A=0.7)
        pts = [2.5 + 0.4j, 1.7 - 0.9j, 4.0 + 2.0j, 0.9 + 0.2j]
        for z in pts:
            a = label_sheets_at(params, z)
            b = label_sheets_at(params, OMEGA * z)
            w2 = OMEGA**2
            assert abs(b.xi1 - w2 * a.xi1) < 1e-8 * (1 + abs(a.xi1))
            assert abs(b.xi2 - w2 * a.xi2) < 1e-8 * (1 + abs(a.xi2))
            assert abs(b.xi3 - w2 * a.xi3) < 1e-8 * (1 + abs(a.xi3))

    def test_conjugation_symmetry(self):
        params = CurveParams(t=0.5, A=0.7)
        for z in (2.5 + 0.4j, 1.2 + 1.1j, 5.0 + 3.0j):
            a = label_sheets_at(params, z)
            b = label_sheets_at(params, np.conj(z))
            assert abs(b.xi1 - np.conj(a.xi1)) < 1e-8 * (1 + abs(a.xi1))

    def test_xi_triple_sum_rule(self):
        params = CurveParams(t=1.0, A=2.0)
        z = 3.0 + 1.5j
        trip = label_sheets_at(params, z)
        assert abs(trip.xi1 + trip.xi2 + trip.xi3 - z * z) < 1e-9 * abs(z) ** 2


class TestContinuation:
    def test_single_point_identity(self):
        params = CurveParams(t=0.2, A=A_SOLVED_02)
        z0 = 3.0 + 0.5j
        seed = solve_cubic_xi(params, z0)
        sp = continue_xi_pair(params, [z0], seed)
        assert np.allclose(sp.roots[0], seed)

    def test_pair_difference_real_positive_beyond_z1(self):
        params = CurveParams(t=0.2, A=A_SOLVED_02)
        bs = branch_points(params)
        xs = np.linspace(bs.z1 + 1e-4, 10.0, 400)
        roots = solve_cubic_xi(params, xs[0] + 0j)
        pair = sorted(
            range(3),
            key=lambda i: min(abs(roots[i] - roots[j]) for j in range(3) if j != i),
        )[:2]
        pair = sorted(pair, key=lambda i: -roots[i].real)
        sp = continue_xi_pair(params, xs, roots[pair])
        diff = sp.roots[:, 0] - sp.roots[:, 1]
        assert np.max(np.abs(diff.imag)) < 1e-9
        assert np.all(diff.real > 0)

    def test_monodromy_loop_exchanges_pair(self):
        params = CurveParams(t=0.2, A=A_SOLVED_02)
        bs = branch_points(params)
        th = np.linspace(0, 2 * np.pi, 400)
        loop = bs.z1 + 1e-3 * np.exp(1j * th)
        roots = solve_cubic_xi(params, loop[0])
        pair = sorted(
            range(3),
            key=lambda i: min(abs(roots[i] - roots[j]) for j in range(3) if j != i),
        )[:2]
        sp = continue_xi_pair(params, loop, roots[pair])
        a0, b0 = sp.roots[0]
        a1, b1 = sp.roots[-1]
        assert abs(a1 - b0) < 1e-6 and abs(b1 - a0) < 1e-6

    def test_closed_loop_off_branch_points_is_trivial(self):
        params = CurveParams(t=0.5, A=0.7)
        th = np.linspace(0, 2 * np.pi, 200)
        loop = 2.5 + 0.4j + 0.3 * np.exp(1j * th)
        seed = solve_cubic_xi(params, loop[0])
        sp = continue_xi_pair(params, loop, seed)
        assert np.max(np.abs(sp.roots[-1] - seed)) < 1e-9

    def test_bad_seed_rejected(self):
        params = CurveParams(t=0.5, A=0.7)
        with pytest.raises(DomainError):
            continue_xi_pair(params, [1.0, 2.0], np.array([1.0, 2.0, 3.0]))
