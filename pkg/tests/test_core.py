import math

import numpy as np
import pytest

from photon_entrain import (
    FULL,
    GridCapError,
    InterferometerConfig,
    MirrorState,
    SpatialGrid,
    StateSpec,
    conditional_update,
    gaussian_pure,
    make_grid_for,
    purity,
    state_weight,
    thermal_gaussian,
)
from photon_entrain.core import DIAGONAL, DelayParams, check_history, chronological

import oracles


class TestSpatialGrid:
    def test_spacing_and_points(self):
        g = SpatialGrid(-1.0, 1.0, 5)
        assert g.spacing == 0.5
        np.testing.assert_allclose(g.x, [-1, -0.5, 0, 0.5, 1])

    @pytest.mark.parametrize("args", [(1.0, 1.0, 5), (2.0, 1.0, 5), (0.0, 1.0, 1), (0.0, 1.0, 2.5)])
    def test_rejects_invalid(self, args):
        with pytest.raises(ValueError):
            SpatialGrid(*args)

    def test_x_is_read_only(self):
        g = SpatialGrid(0.0, 1.0, 3)
        with pytest.raises(ValueError):
            g.x[0] = 5.0


class TestMakeGridFor:
    def test_single_bounce_sizing(self):
        g = make_grid_for(InterferometerConfig(1.0), 1.0, 16)
        assert g.spacing <= 0.015625 + 1e-15
        assert (g.x_min, g.x_max) == (-4.0, 4.0)
        assert g.n_points >= 513

    def test_spacing_halves_with_bounces(self):
        g = make_grid_for(InterferometerConfig(1.0, bounces=2), 1.0, 16)
        assert g.spacing <= 0.0078125 + 1e-15

    def test_full_matrix_cap(self):
        # lambda = 0.05 needs 10241 points, above the 8000-point full-matrix cap
        with pytest.raises(GridCapError):
            make_grid_for(InterferometerConfig(0.05), 1.0, 16, representation=FULL)
        make_grid_for(InterferometerConfig(0.05), 1.0, 16, representation=DIAGONAL)

    def test_lambda_tenth_fits_under_full_cap(self):
        g = make_grid_for(InterferometerConfig(0.1), 1.0, 16, representation=FULL)
        assert g.n_points == 5121

    def test_center_shift(self):
        g = make_grid_for(InterferometerConfig(1.0), 1.0, 16, center=3.0)
        assert (g.x_min, g.x_max) == (-1.0, 7.0)

    def test_halfwidth_multiples_are_nodes(self):
        g = make_grid_for(InterferometerConfig(0.37), 0.8, 9)
        for k in range(-4, 5):
            assert np.min(np.abs(g.x - 0.8 * k)) < 1e-12

    @pytest.mark.parametrize("hw, ppf", [(0.0, 16), (-1.0, 16), (1.0, 7)])
    def test_preconditions(self, hw, ppf):
        with pytest.raises(ValueError):
            make_grid_for(InterferometerConfig(1.0), hw, ppf)


class TestInterferometerConfig:
    def test_derived_quantities(self):
        c = InterferometerConfig(2 * math.pi * 2, reflectivity=0.6, incidence=math.pi / 3)
        assert c.wavenumber == pytest.approx(0.5)
        assert c.photon_momentum == pytest.approx(0.5)
        assert math.cos(c.theta) ** 2 == pytest.approx(0.6)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"wavelength": 0.0},
            {"wavelength": 1.0, "reflectivity": 1.2},
            {"wavelength": 1.0, "bounces": 0},
            {"wavelength": 1.0, "incidence": math.pi / 2},
            {"wavelength": 1.0, "entry_port": "X"},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            InterferometerConfig(**kwargs)


def test_history_labels():
    assert check_history("RLL") == "RLL"
    assert chronological("RLL") == "LLR"
    with pytest.raises(ValueError):
        check_history("LXR")


def test_delay_params_validation():
    DelayParams(1e-13, 0.0, 3)
    with pytest.raises(ValueError):
        DelayParams(0.0, 0.3)
    with pytest.raises(ValueError):
        DelayParams(1e-13, -0.3)


class TestMirrorState:
    def test_fresh_state_defaults(self):
        g = make_grid_for(InterferometerConfig(1.0), 1.0)
        s = gaussian_pure(g, StateSpec(), DIAGONAL)
        assert s.weight == 1.0
        assert s.history == ""
        assert s.representation == DIAGONAL

    def test_rejects_negative_density(self):
        g = SpatialGrid(0.0, 1.0, 3)
        with pytest.raises(ValueError):
            MirrorState(g, np.array([1.0, -1.0, 3.0]), 1.0)

    def test_rejects_non_hermitian(self):
        g = SpatialGrid(0.0, 1.0, 2)
        rho = np.array([[1.0, 0.5], [0.1, 1.0]], dtype=complex)
        with pytest.raises(ValueError):
            MirrorState(g, rho, 1.0)

    def test_rejects_weight_mismatch(self):
        g = SpatialGrid(0.0, 1.0, 3)
        with pytest.raises(ValueError):
            MirrorState(g, np.ones(3), 0.5)

    def test_immutable(self):
        g = SpatialGrid(0.0, 1.0, 3)
        s = MirrorState(g, np.ones(3), 1.0)
        with pytest.raises(ValueError):
            s.rho[0] = 2.0


class TestStateWeight:
    def test_fresh_gaussian(self):
        g = make_grid_for(InterferometerConfig(0.25), 1.0)
        assert state_weight(gaussian_pure(g, StateSpec(), DIAGONAL)) == pytest.approx(1.0, abs=1e-9)

    def test_after_left_detection(self):
        cfg = InterferometerConfig(0.1)
        g = make_grid_for(cfg, 1.0)
        s = conditional_update(gaussian_pure(g, StateSpec(), DIAGONAL), "L", cfg)
        expected = oracles.follow_probability(0, 0.1)
        assert abs(expected - 0.5) < 1e-6
        assert state_weight(s) == pytest.approx(expected, abs=1e-3)

    def test_branches_sum_to_one(self):
        cfg = InterferometerConfig(0.7, phase=0.3, reflectivity=0.8)
        g = make_grid_for(cfg, 1.0)
        s = gaussian_pure(g, StateSpec(), DIAGONAL)
        total = state_weight(conditional_update(s, "L", cfg)) + state_weight(conditional_update(s, "R", cfg))
        assert total == pytest.approx(1.0, abs=1e-9)


class TestPurity:
    def setup_method(self):
        self.grid = make_grid_for(InterferometerConfig(1.0), 1.0, 8)

    def test_pure_gaussian(self):
        assert purity(gaussian_pure(self.grid, StateSpec())) == pytest.approx(1.0, abs=1e-6)

    def test_thermal_short_coherence(self):
        spec = StateSpec("ThermalGaussian", coherence_length=0.25)
        p = purity(thermal_gaussian(self.grid, spec))
        assert p < 0.5
        assert p == pytest.approx(oracles.thermal_purity(1.0, 0.25), abs=1e-4)

    def test_thermal_long_coherence(self):
        spec = StateSpec("ThermalGaussian", coherence_length=1e6)
        assert purity(thermal_gaussian(self.grid, spec)) == pytest.approx(1.0, abs=1e-3)

    def test_rejects_diagonal(self):
        with pytest.raises(ValueError):
            purity(gaussian_pure(self.grid, StateSpec(), DIAGONAL))
