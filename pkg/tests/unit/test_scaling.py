"""
Unit tests for scaling laws, resampling and the closed-form constraint roots
"""

import os
import sys

import numpy as np
import pytest

# Add the nls-lab source directory to the path
sys.path.insert(
    0, os.path.join(os.path.dirname(__file__), "../../src/models/nls-lab/src")
)

from errors import DegenerateField, SupportOverflow
from field_corpus import gaussian
from functionals import Aggregates, AlphaBeta, default_test_set
from lab_core import FieldVector, RadialGrid, masses
from scaling import (
    AMPLITUDE,
    EXPONENTIAL,
    MASS_PRESERVING,
    ScalingLaw,
    dilate,
    dilation_action_profile,
    nehari_root_amplitude,
    nehari_root_amplitude_bisect,
    nehari_root_amplitude_from,
    nehari_root_dilation,
    nehari_root_dilation_bisect,
    nehari_root_dilation_from,
    rescale,
)


class TestScalingLaw:
    def test_exponential_needs_pair(self):
        with pytest.raises(ValueError):
            ScalingLaw(EXPONENTIAL, 1.0)

    def test_positive_parameter(self):
        with pytest.raises(ValueError):
            ScalingLaw(MASS_PRESERVING, 0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ScalingLaw("shear", 1.0)

    def test_factors(self):
        law = ScalingLaw(EXPONENTIAL, 0.5, AlphaBeta(2.0, -1.0))
        assert law.factor(3) == pytest.approx(np.e)
        assert law.scale() == pytest.approx(np.exp(0.5))
        assert ScalingLaw(MASS_PRESERVING, 4.0).factor(2) == pytest.approx(4.0)
        assert ScalingLaw(AMPLITUDE, 3.0).scale() == 1.0

    def test_mass_preserving_keeps_mass(self, unit_gaussian, reference_params):
        agg = Aggregates.of(unit_gaussian, reference_params)
        scaled = ScalingLaw(MASS_PRESERVING, 1.7).apply_to_aggregates(agg)
        assert scaled.M[0] == pytest.approx(agg.M[0], rel=1e-14)
        assert scaled.G[0] == pytest.approx(1.7**2 * agg.G[0], rel=1e-14)


class TestResampling:
    """rescale resamples the field itself; results must follow the aggregate laws"""

    @pytest.fixture
    def radial_gaussian(self):
        return gaussian(RadialGrid(N=2, n_r=4096, R=16.0))

    def test_dilation_keeps_mass(self, radial_gaussian):
        dilated = dilate(radial_gaussian, 1.3)
        assert masses(dilated)[0] == pytest.approx(masses(radial_gaussian)[0], rel=1e-5)

    def test_resampled_aggregates_follow_power_laws(
        self, radial_gaussian, reference_params
    ):
        agg = Aggregates.of(radial_gaussian, reference_params)
        for law in (
            ScalingLaw(MASS_PRESERVING, 1.25),
            ScalingLaw(EXPONENTIAL, 0.2, AlphaBeta(1.0, 1.0)),
        ):
            predicted = law.apply_to_aggregates(agg)
            actual = Aggregates.of(rescale(radial_gaussian, law), reference_params)
            assert actual.action() == pytest.approx(predicted.action(), rel=1e-4)
            assert actual.P[0, 0] == pytest.approx(predicted.P[0, 0], rel=1e-4)

    def test_amplitude_law_is_exact(self, unit_gaussian):
        scaled = rescale(unit_gaussian, ScalingLaw(AMPLITUDE, 2.5))
        assert np.array_equal(scaled.components, 2.5 * unit_gaussian.components)

    def test_support_overflow(self, box_grid):
        wide = gaussian(box_grid, width=2.0)
        with pytest.raises(SupportOverflow) as info:
            dilate(wide, 0.25)
        assert info.value.details["lost_fraction"] > 1e-8


class TestConstraintRoots:
    """Closed-form roots against the Gaussian values and bisection"""

    def test_gaussian_dilation_root(self, unit_gaussian, reference_params):
        lam0 = nehari_root_dilation(unit_gaussian, reference_params)
        assert lam0 == pytest.approx(1.0 / 0.24, rel=1e-12)

    def test_gaussian_amplitude_root(self, unit_gaussian, reference_params):
        t0 = nehari_root_amplitude(unit_gaussian, reference_params, AlphaBeta(0.0, 1.0))
        assert t0 == pytest.approx((1.0 / 0.16) ** (1.0 / 3.0), rel=1e-12)
        assert t0 == pytest.approx(1.84202, abs=1e-5)

    def test_root_zeroes_the_constraint(self, field_corpus):
        for u, params in field_corpus[:8]:
            agg = Aggregates.of(u, params)
            for ab in default_test_set(2):
                t0 = nehari_root_amplitude_from(agg, ab)
                at_root = ScalingLaw(AMPLITUDE, t0).apply_to_aggregates(agg)
                scale = float(np.sum(at_root.G + at_root.M))
                assert abs(at_root.constraint(ab)) < 1e-12 * scale

    def test_bisection_agrees(self, field_corpus):
        for u, params in field_corpus[:8]:
            agg = Aggregates.of(u, params)
            assert nehari_root_dilation_bisect(agg) == pytest.approx(
                nehari_root_dilation_from(agg), rel=1e-10
            )
            ab = AlphaBeta(1.0, 1.0)
            assert nehari_root_amplitude_bisect(agg, ab) == pytest.approx(
                nehari_root_amplitude_from(agg, ab), rel=1e-10
            )

    def test_zero_field_has_no_root(self, box_grid, reference_params):
        agg = Aggregates.of(FieldVector.zeros(box_grid, 1), reference_params)
        with pytest.raises(DegenerateField):
            nehari_root_dilation_from(agg)
        with pytest.raises(DegenerateField):
            nehari_root_amplitude_from(agg, AlphaBeta(1.0, 0.0))


class TestDilationProfile:
    def test_action_peaks_at_dilation_root(self, unit_gaussian, reference_params):
        agg = Aggregates.of(unit_gaussian, reference_params)
        lam0 = nehari_root_dilation_from(agg)
        profile = dilation_action_profile(agg, [0.5 * lam0, lam0, 2.0 * lam0])
        assert profile["dS"][1] == pytest.approx(0.0, abs=1e-12 * agg.G[0] * lam0)
        assert profile["sumQ"][1] == pytest.approx(0.0, abs=1e-10)
        assert profile["S"][1] > profile["S"][0]
        assert profile["S"][1] > profile["S"][2]

    def test_derivative_matches_virial_parts(self, field_corpus):
        for u, params in field_corpus[:5]:
            agg = Aggregates.of(u, params)
            lambdas = np.linspace(0.5, 3.0, 11)
            profile = dilation_action_profile(agg, lambdas)
            expected = 2.0 / (2.0 * lambdas) * profile["sumQ"]
            assert np.allclose(profile["dS"], expected, rtol=1e-12, atol=1e-12)

    def test_component_actions_sum(self, field_corpus):
        u, params = field_corpus[0]
        profile = dilation_action_profile(Aggregates.of(u, params), [1.0, 2.0])
        assert np.allclose(profile["Sj"].sum(axis=1), profile["S"], rtol=1e-12)
