"""Quadrature and root-tracking plumbing behind the period integrals."""

import numpy as np
import pytest

from motherbody.contour import (
    _half_nodes,
    gl_rule,
    pair_difference_integral,
    panel_nodes,
    polyline_pair_integral,
    values_along,
)
from motherbody.curve import (
    CurveParams,
    branch_points,
    curve_polynomial,
    label_sheets_at,
)
from motherbody.errors import ContinuationAmbiguous, QuadratureNotConverged

PARAMS = CurveParams(t=0.2, A=0.3)


def _labeled(z):
    return label_sheets_at(PARAMS, complex(z)).as_array()


class TestRules:
    def test_gl_exactness(self):
        x, w = gl_rule(4)
        assert np.all((x > 0.0) & (x < 1.0))
        assert abs(np.sum(w) - 1.0) < 1e-14
        assert abs(np.sum(w * x**7) - 0.125) < 1e-14

    def test_panel_nodes_smooth(self):
        nodes, weights = panel_nodes(-1.0, 2.0, 6, 12)
        val = np.sum(weights * np.exp(nodes))
        assert abs(val - (np.exp(2.0) - np.exp(-1.0))) < 1e-12

    def test_half_nodes_sqrt_singularity(self):
        sig, w = _half_nodes(2, 8, 16)
        val = np.sum(w * sig**-0.5)
        assert abs(val - np.sqrt(2.0)) < 1e-12

    def test_half_nodes_cube_root_singularity(self):
        sig, w = _half_nodes(3, 8, 16)
        val = np.sum(w * sig ** (-2.0 / 3.0))
        assert abs(val - 3.0 * 0.5 ** (1.0 / 3.0)) < 1e-12


class TestValuesAlong:
    def test_residuals_and_branch_continuity(self):
        # quarter circle well outside the branch points
        ang = np.linspace(0.0, 0.5 * np.pi, 60)
        zs = 2.5 * np.exp(1j * ang)
        vals = values_along(PARAMS, zs, _labeled(zs[0]))
        res = curve_polynomial(PARAMS, zs[:, None], vals)
        assert np.max(np.abs(res)) < 1e-8 * (1.0 + 2.5) ** 6
        steps = np.abs(np.diff(vals, axis=0))
        seps = np.min(
            [
                np.abs(vals[:, 0] - vals[:, 1]),
                np.abs(vals[:, 0] - vals[:, 2]),
                np.abs(vals[:, 1] - vals[:, 2]),
            ],
            axis=0,
        )
        assert np.max(steps) < 0.5 * np.min(seps)

    def test_seed_bridging_matches_direct_seed(self):
        zs = np.linspace(2.5, 1.8, 9) + 0.4j
        direct = values_along(PARAMS, zs, _labeled(zs[0]))
        bridged = values_along(PARAMS, zs, _labeled(2.6 + 0.5j),
                               seed_at=2.6 + 0.5j)
        assert np.max(np.abs(direct - bridged)) < 1e-10

    def test_bad_seed_raises(self):
        zs = np.array([2.5 + 0j, 2.4 + 0j])
        seed = np.array([100.0 + 0j, 200.0 + 0j, 300.0 + 0j])
        with pytest.raises(ContinuationAmbiguous):
            values_along(PARAMS, zs, seed)


class TestPairIntegrals:
    def test_route_independence_between_branch_points(self):
        bs = branch_points(PARAMS)
        z1, z2 = complex(bs.z1), bs.z2
        d = z2 - z1
        unit = d / abs(d)
        got = []
        for frac in (0.1, 0.3):
            probe = z1 + 0.5 * d - 1j * frac * abs(d) * unit
            val, err = polyline_pair_integral(
                PARAMS, [z1, probe, z2], _labeled(probe), seed_index=1,
                exp_start=2, exp_end=2, rtol=1e-10, detail=True)
            assert err <= 1e-10 * max(1.0, abs(val))
            got.append(val)
        assert abs(got[0] - got[1]) < 1e-9

    def test_chord_matches_dogleg(self):
        bs = branch_points(PARAMS)
        z1 = complex(bs.z1)
        b = z1 + 1.5 - 0.9j
        mid = 0.5 * (z1 + b)
        chord = pair_difference_integral(
            PARAMS, z1, b, _labeled(mid), exp_a=2, exp_b=1, seed_at=mid)
        apex = mid - 0.08j * (b - z1) / abs(b - z1)
        dogleg = polyline_pair_integral(
            PARAMS, [z1, apex, b], _labeled(apex), seed_index=1,
            exp_start=2, exp_end=1)
        assert abs(chord - dogleg) < 1e-9

    def test_integrand_hook(self):
        bs = branch_points(PARAMS)
        z1 = complex(bs.z1)
        b = z1 + 1.5 - 0.9j
        mid = 0.5 * (z1 + b)
        seed = _labeled(mid)
        base = pair_difference_integral(
            PARAMS, z1, b, seed, exp_a=2, exp_b=1, seed_at=mid)
        same = pair_difference_integral(
            PARAMS, z1, b, seed, lambda z, xi: xi,
            exp_a=2, exp_b=1, seed_at=mid)
        twice = pair_difference_integral(
            PARAMS, z1, b, seed, lambda z, xi: 2.0 * xi,
            exp_a=2, exp_b=1, seed_at=mid)
        assert same == base
        assert abs(twice - 2.0 * base) < 1e-13 * max(1.0, abs(base))

    def test_missing_endpoint_substitution_is_caught(self):
        bs = branch_points(PARAMS)
        z1 = complex(bs.z1)
        b = z1 + 1.5 - 0.9j
        mid = 0.5 * (z1 + b)
        with pytest.raises(QuadratureNotConverged):
            pair_difference_integral(
                PARAMS, z1, b, _labeled(mid), exp_a=1, exp_b=1, seed_at=mid)

    def test_polyline_input_validation(self):
        bs = branch_points(PARAMS)
        z1, z2 = complex(bs.z1), bs.z2
        probe = 0.5 * (z1 + z2) - 0.1j
        seed = _labeled(probe)
        with pytest.raises(ValueError):
            polyline_pair_integral(PARAMS, [z1], seed)
        with pytest.raises(ValueError):
            polyline_pair_integral(PARAMS, [z1, z2], seed,
                                   exp_start=2, exp_end=2)
        with pytest.raises(ValueError):
            polyline_pair_integral(PARAMS, [z1, probe, z2], seed,
                                   seed_index=0, exp_start=2, exp_end=2)
