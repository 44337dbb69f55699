"""Radial grids, coupling families, and infrared classification."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsblab import (
    CouplingFamily,
    ModeSet,
    build_radial_grid,
    eval_coupling,
    ir_class_of,
    l2_criteria,
)

import oracle


def hard_family(rho0=1.0, p=0.0, uv=10.0):
    return CouplingFamily(rho0=rho0, p=p, uv=uv, profile="hard-cutoff")


class TestRadialGrid:
    def test_midpoint_matches_reference(self):
        grid = build_radial_grid(3, 0.1, 1.1, 5, rule="midpoint")
        pts, wts = oracle.midpoint_grid(3, 0.1, 1.1, 5)
        np.testing.assert_allclose(grid.points, pts, rtol=1e-14)
        np.testing.assert_allclose(grid.weights, wts, rtol=1e-14)

    def test_surface_constants(self):
        # nu=1: two half-lines; nu=3: 4 pi r^2
        g1 = build_radial_grid(1, 1.0, 2.0, 1, rule="midpoint")
        assert g1.weights[0] == pytest.approx(2.0 * 1.0)
        g3 = build_radial_grid(3, 1.0, 2.0, 1, rule="midpoint")
        assert g3.weights[0] == pytest.approx(4.0 * math.pi * 1.5**2 * 1.0)

    def test_log_midpoint_geometric(self):
        grid = build_radial_grid(3, 1e-2, 1.0, 8, rule="log-midpoint")
        ratios = grid.points[1:] / grid.points[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
        assert grid.points[0] > 1e-2
        assert grid.points[-1] < 1.0

    def test_weights_cover_measure(self):
        # total weight approximates the volume of the shell sigma..Lambda
        grid = build_radial_grid(3, 0.2, 1.0, 4000, rule="midpoint")
        vol = 4.0 / 3.0 * math.pi * (1.0**3 - 0.2**3)
        assert sum(grid.weights) == pytest.approx(vol, rel=1e-6)

    def test_massless_dispersion_is_radius(self):
        grid = build_radial_grid(2, 0.3, 0.9, 7)
        np.testing.assert_allclose(grid.omega, grid.points, rtol=0, atol=0)

    def test_massive_dispersion(self):
        grid = build_radial_grid(2, 0.3, 0.9, 7, mass=0.5)
        np.testing.assert_allclose(grid.omega, np.sqrt(grid.points**2 + 0.25),
                                   rtol=1e-14)

    def test_sigma_must_be_positive(self):
        with pytest.raises(ValueError):
            build_radial_grid(3, 0.0, 1.0, 4)
        with pytest.raises(ValueError):
            build_radial_grid(3, -0.1, 1.0, 4)

    def test_ordering_violation_rejected(self):
        with pytest.raises(ValueError):
            build_radial_grid(3, 1.0, 0.5, 4)

    @given(
        nu=st.sampled_from([1, 2, 3]),
        sigma=st.floats(1e-4, 0.5),
        n_shells=st.integers(1, 40),
        rule=st.sampled_from(["midpoint", "log-midpoint"]),
    )
    @settings(max_examples=60, deadline=None)
    def test_grid_invariants(self, nu, sigma, n_shells, rule):
        grid = build_radial_grid(nu, sigma, sigma + 1.0, n_shells, rule=rule)
        assert grid.n_modes == n_shells
        assert np.all(np.diff(grid.points) > 0)
        assert np.all(grid.weights > 0)
        assert np.all(grid.omega > 0)
        assert grid.points[0] >= sigma
        assert grid.points[-1] <= sigma + 1.0


class TestCouplingFamily:
    def test_power_law(self):
        fam = hard_family(rho0=2.0, p=1.5)
        r = np.array([0.25, 1.0, 4.0])
        np.testing.assert_allclose(fam.rho(r), 2.0 * r**1.5, rtol=1e-14)

    def test_hard_cutoff_envelope(self):
        fam = hard_family(uv=1.0)
        r = np.array([0.5, 1.0, 1.5])
        np.testing.assert_allclose(fam.envelope(r), [1.0, 1.0, 0.0])

    def test_gaussian_envelope(self):
        fam = CouplingFamily(rho0=1.0, p=0.0, uv=2.0, profile="gaussian")
        r = np.array([0.0, 2.0])
        np.testing.assert_allclose(fam.envelope(r), [1.0, math.exp(-0.5)],
                                   rtol=1e-14)

    def test_eval_divides_by_sqrt_omega(self):
        grid = build_radial_grid(3, 0.5, 1.5, 3)
        fam = hard_family(rho0=1.0, p=1.0)
        lam = eval_coupling(fam, grid)
        np.testing.assert_allclose(lam, grid.points / np.sqrt(grid.omega),
                                   rtol=1e-14)

    def test_eval_massive_override(self):
        grid = build_radial_grid(3, 0.5, 1.5, 3)
        fam = hard_family()
        lam = eval_coupling(fam, grid, dispersion_law=("massive", 2.0))
        np.testing.assert_allclose(
            lam, 1.0 / (grid.points**2 + 4.0) ** 0.25, rtol=1e-14
        )

    def test_negative_rho0_rejected(self):
        with pytest.raises(ValueError):
            CouplingFamily(rho0=-1.0, p=0.0, uv=1.0, profile="hard-cutoff")


class TestModeSet:
    def test_channel_round_trip(self):
        grid = build_radial_grid(1, 0.2, 1.2, 4)
        fam = hard_family()
        lam = eval_coupling(fam, grid)
        grid = grid.with_coupling(lam, fam)
        assert grid.n_channels == 1
        np.testing.assert_allclose(grid.channel(0), lam)
        assert grid.families[0] is fam

    def test_length_mismatch_rejected(self):
        grid = build_radial_grid(1, 0.2, 1.2, 4)
        with pytest.raises(ValueError):
            grid.with_coupling(np.ones(3), hard_family())

    def test_restrict_singleton(self):
        grid = build_radial_grid(3, 0.2, 1.2, 5)
        grid = grid.with_coupling(eval_coupling(hard_family(), grid), hard_family())
        sub = grid.restrict(2)
        assert sub.n_modes == 1
        assert sub.points[0] == grid.points[2]
        assert sub.weights[0] == grid.weights[2]
        assert sub.channel(0)[0] == grid.channel(0)[2]

    def test_head_prefix(self):
        grid = build_radial_grid(3, 0.2, 1.2, 5)
        grid = grid.with_coupling(eval_coupling(hard_family(), grid), hard_family())
        sub = grid.head(3)
        assert sub.n_modes == 3
        np.testing.assert_allclose(sub.points, grid.points[:3])
        np.testing.assert_allclose(sub.channel(0), grid.channel(0)[:3])

    def test_arrays_read_only(self):
        grid = build_radial_grid(3, 0.2, 1.2, 5)
        with pytest.raises((ValueError, RuntimeError)):
            grid.points[0] = 99.0


class TestIrClassification:
    @pytest.mark.parametrize(
        "nu,p,expected",
        [
            (3, 0.0, "singular"),
            (3, 1.0, "regular"),
            (1, 0.0, "singular"),
            (1, 1.0, "singular"),
            (1, 1.5, "regular"),
            (2, 0.5, "singular"),
            (2, 0.6, "regular"),
        ],
    )
    def test_massless_rule(self, nu, p, expected):
        fam = hard_family(p=p)
        assert ir_class_of(fam, nu, mass=0.0) == expected

    def test_massive_always_regular(self):
        fam = hard_family(p=0.0)
        assert ir_class_of(fam, 1, mass=0.3) == "regular"

    def test_l2_norms_single_mode(self):
        # one shell at r=1 with w=2: lam=1 so all three norms equal 2
        grid = build_radial_grid(1, 0.5, 1.5, 1)
        grid = grid.with_coupling(eval_coupling(hard_family(), grid), hard_family())
        crit = l2_criteria(grid)
        assert crit.norm_lam == pytest.approx(2.0)
        assert crit.norm_lam_over_sqrtw == pytest.approx(2.0)
        assert crit.norm_lam_over_w == pytest.approx(2.0)
        assert crit.ir_class == "singular"

    def test_l2_norm_values_match_sums(self):
        grid = build_radial_grid(3, 0.1, 1.0, 9, rule="log-midpoint")
        fam = hard_family(p=1.0)
        grid = grid.with_coupling(eval_coupling(fam, grid), fam)
        lam = np.asarray(grid.channel(0))
        w = np.asarray(grid.weights)
        om = np.asarray(grid.omega)
        crit = l2_criteria(grid)
        assert crit.norm_lam == pytest.approx(float(np.sum(w * lam**2)), rel=1e-13)
        assert crit.norm_lam_over_sqrtw == pytest.approx(
            float(np.sum(w * lam**2 / om)), rel=1e-13
        )
        assert crit.norm_lam_over_w == pytest.approx(
            float(np.sum(w * lam**2 / om**2)), rel=1e-13
        )
