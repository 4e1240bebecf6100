"""
Unit tests for the scalar functionals and their algebraic identities
"""

import os
import sys

import numpy as np
import pytest

# Add the nls-lab source directory to the path
sys.path.insert(
    0, os.path.join(os.path.dirname(__file__), "../../src/models/nls-lab/src")
)

from errors import DegenerateAlphaBeta, InadmissibleAlphaBeta, ZeroField
from functionals import (
    Aggregates,
    AlphaBeta,
    action,
    constraint_K,
    default_test_set,
    energy,
    functional_report,
    functional_T,
    gn_ratio,
    negative_constraint_levels,
)
from lab_core import FieldVector


class TestGaussianClosedForms:
    """exp(-|x|^2/2) in the plane with p = 2.5 and a = 1"""

    def test_aggregates(self, unit_gaussian, reference_params):
        agg = Aggregates.of(unit_gaussian, reference_params)
        assert agg.M[0] == pytest.approx(np.pi, rel=1e-12)
        assert agg.G[0] == pytest.approx(np.pi, rel=1e-12)
        assert agg.P[0, 0] == pytest.approx(0.4 * np.pi, rel=1e-12)

    def test_energy_and_action(self, unit_gaussian, reference_params):
        assert energy(unit_gaussian, reference_params) == pytest.approx(
            0.42 * np.pi, rel=1e-12
        )
        assert action(unit_gaussian, reference_params) == pytest.approx(
            0.92 * np.pi, rel=1e-12
        )

    def test_virial_constraint(self, unit_gaussian, reference_params):
        K = constraint_K(unit_gaussian, reference_params, AlphaBeta.virial(2))
        assert K == pytest.approx(0.76 * np.pi, rel=1e-12)

    def test_T_functional(self, unit_gaussian, reference_params):
        assert functional_T(unit_gaussian, reference_params) == pytest.approx(
            0.52 * np.pi, rel=1e-12
        )

    def test_report_matches_wrappers(self, unit_gaussian, reference_params):
        report = functional_report(unit_gaussian, reference_params)
        assert report.S == pytest.approx(0.92 * np.pi, rel=1e-12)
        assert set(report.K) == set(default_test_set(2))
        assert AlphaBeta.virial(2) not in report.H
        assert report.as_dict()["K"]["(1,-1)"] == pytest.approx(0.76 * np.pi)


class TestAlphaBeta:
    def test_admissible_pairs(self):
        assert AlphaBeta(1.0, 0.0).is_admissible(2)
        assert AlphaBeta(0.0, 1.0).is_admissible(3)
        assert AlphaBeta.virial(3).is_admissible(3)

    @pytest.mark.parametrize("pair", [(0.0, 0.0), (-1.0, 0.0), (1.0, -0.5)])
    def test_inadmissible_pairs(self, pair, unit_gaussian, reference_params):
        ab = AlphaBeta(*pair)
        assert not ab.is_admissible(2)
        with pytest.raises(InadmissibleAlphaBeta):
            constraint_K(unit_gaussian, reference_params, ab)

    def test_H_needs_nonzero_mass_rate(self, unit_gaussian, reference_params):
        agg = Aggregates.of(unit_gaussian, reference_params)
        with pytest.raises(DegenerateAlphaBeta):
            agg.functional_H(AlphaBeta.virial(2))

    def test_labels(self):
        assert AlphaBeta(1.0, 0.0).label() == "(1,0)"
        assert AlphaBeta.virial(4).label() == "(1,-0.5)"


class TestIdentities:
    """Identities that hold for every state, checked on the seeded corpus"""

    def test_Q_parts_sum_to_virial_constraint(self, field_corpus):
        for u, params in field_corpus:
            agg = Aggregates.of(u, params)
            virial = agg.constraint(AlphaBeta.virial(2))
            scale = float(np.sum(agg.G)) + agg.weighted_interaction
            assert float(np.sum(agg.Q_parts())) == pytest.approx(
                virial, rel=1e-12, abs=1e-13 * scale
            )

    def test_S_parts_sum_to_action(self, field_corpus):
        for u, params in field_corpus:
            agg = Aggregates.of(u, params)
            scale = float(np.sum(agg.G + agg.M)) + agg.weighted_interaction
            assert float(np.sum(agg.S_parts())) == pytest.approx(
                agg.action(), rel=1e-12, abs=1e-13 * scale
            )

    def test_H_is_action_minus_scaled_constraint(self, field_corpus):
        for u, params in field_corpus:
            agg = Aggregates.of(u, params)
            for ab in (AlphaBeta(1.0, 0.0), AlphaBeta(0.0, 1.0), AlphaBeta(2.0, 0.5)):
                expected = agg.action() - agg.constraint(ab) / ab.mass_rate(2)
                assert agg.functional_H(ab) == pytest.approx(expected, rel=1e-12)

    def test_interaction_matrix_symmetric(self, field_corpus):
        for u, params in field_corpus:
            P = Aggregates.of(u, params).P
            assert np.array_equal(P, P.T)


class TestGNRatio:
    def test_amplitude_invariance(self, unit_gaussian, reference_params):
        reference = gn_ratio(unit_gaussian, reference_params)
        for t in (0.3, 4.0):
            scaled = gn_ratio(unit_gaussian.scaled(t), reference_params)
            assert scaled == pytest.approx(reference, rel=1e-12)

    def test_gaussian_value(self, unit_gaussian, reference_params):
        # P / (G^{1.5} M) = 0.4 pi / pi^{2.5}
        assert gn_ratio(unit_gaussian, reference_params) == pytest.approx(
            0.4 / np.pi**1.5, rel=1e-12
        )

    def test_zero_field(self, box_grid, reference_params):
        with pytest.raises(ZeroField):
            gn_ratio(FieldVector.zeros(box_grid, 1), reference_params)


class TestNegativeConstraintLevels:
    def test_positive_constraints_give_no_levels(self, unit_gaussian, reference_params):
        assert negative_constraint_levels(unit_gaussian, reference_params) == {}

    def test_large_amplitude_reports_levels(self, unit_gaussian, reference_params):
        levels = negative_constraint_levels(unit_gaussian.scaled(3.0), reference_params)
        assert set(levels) == {"H(1,0)", "H(1,1)", "S-N/4K"}
        assert all(value > 0 for value in levels.values())
