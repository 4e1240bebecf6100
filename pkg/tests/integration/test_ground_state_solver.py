"""
Integration tests for the ground-state solver against the shooting oracle
"""

import os
import sys

import numpy as np
import pytest

# Add the nls-lab source directory to the path
sys.path.insert(
    0, os.path.join(os.path.dirname(__file__), "../../src/models/nls-lab/src")
)

from functionals import Aggregates, negative_constraint_levels
from ground_state import (
    GroundStateConfig,
    mu_sweep,
    semitrivial_identity,
    solve_ground_state,
    state_kind,
    stationary_residual,
    verify_pohozaev,
)
from lab_core import RadialGrid, validate_params
from shooting_oracle import shooting_oracle, shooting_profile


@pytest.fixture(scope="module")
def oracle():
    return shooting_profile(N=2, p=2.5)


def sup_error(result, oracle):
    exact = oracle(result.psi.grid.r)
    return float(np.max(np.abs(result.psi.components[0].real - exact))) / oracle.psi0


@pytest.mark.integration
class TestScalarGroundState:
    """N = 2, p = 2.5, a = 1 on the reference radial grid"""

    def test_matches_oracle(self, reference_ground, oracle):
        assert sup_error(reference_ground, oracle) <= 1e-4
        assert reference_ground.psi.components[0, 0].real == pytest.approx(
            oracle.psi0, rel=1e-4
        )

    def test_oracle_sampling(self, reference_params, reference_radial_grid, oracle):
        sampled = shooting_oracle(reference_params, reference_radial_grid)
        assert np.allclose(sampled.components[0].real, oracle(reference_radial_grid.r))

    def test_stationary(self, reference_ground, reference_params):
        assert reference_ground.residual <= 1e-8
        residual = stationary_residual(
            reference_ground.psi.components.real,
            reference_ground.psi.grid,
            reference_params,
        )
        assert np.max(np.abs(residual)) <= 1e-8
        assert reference_ground.omega == pytest.approx(1.0, abs=1e-3)

    def test_pohozaev_identities(self, reference_ground, reference_params):
        assert max(reference_ground.pohozaev_defects.values()) <= 1e-5
        defects = verify_pohozaev(reference_ground, reference_params)
        assert defects == reference_ground.pohozaev_defects
        assert reference_ground.level > 0.0
        agg = Aggregates.of(reference_ground.psi, reference_params)
        A = agg.weighted_interaction
        assert agg.G[0] == pytest.approx(0.6 * A, rel=1e-4)
        assert agg.M[0] == pytest.approx(0.4 * A, rel=1e-4)
        assert reference_ground.level == pytest.approx(0.3 * A, rel=1e-4)
        assert semitrivial_identity(reference_ground.psi, reference_params) <= 1e-4

    def test_positive_and_decreasing(self, reference_ground):
        grid = reference_ground.psi.grid
        profile = reference_ground.psi.components[0].real[grid.r <= 10.0]
        assert np.all(profile > 0.0)
        assert np.all(np.diff(profile) <= 0.0)

    def test_flow_descends(self, reference_ground):
        history = reference_ground.history
        level = reference_ground.level
        assert np.max(np.diff(history[10:])) <= 1e-12 * level
        assert history[-1] <= history[0] + 1e-10 * level
        assert history[-1] == pytest.approx(level, rel=1e-3)

    def test_negative_constraints_bound_level(self, reference_ground, reference_params):
        levels = negative_constraint_levels(
            reference_ground.psi.scaled(1.5), reference_params
        )
        assert set(levels) == {"H(1,0)", "H(1,1)", "S-N/4K"}
        for value in levels.values():
            assert value >= reference_ground.level * (1.0 - 1e-4)

    def test_second_order_convergence(self, reference_params, oracle):
        errors = []
        for n_r in (1024, 2048):
            cfg = GroundStateConfig(grid=RadialGrid(N=2, n_r=n_r, R=16.0))
            errors.append(sup_error(solve_ground_state(reference_params, cfg), oracle))
        assert errors[0] / errors[1] >= 3.0


@pytest.mark.integration
class TestCouplingSweep:
    """Two components with a_11 = a_22 = 1; the vector state wins once 1 + mu > 2^1.5"""

    @pytest.fixture(scope="class")
    def rows(self):
        base = validate_params({"N": 2, "p": 2.5, "A": [[1.0, 0.5], [0.5, 1.0]]})
        cfg = GroundStateConfig(
            grid=RadialGrid(N=2, n_r=2048, R=16.0), seed_widths=[1.0, 1.05]
        )
        return {row.mu: row for row in mu_sweep(base, [0.1, 1.0, 10.0], cfg)}

    def test_one_row_per_mu(self, rows):
        assert sorted(rows) == [0.1, 1.0, 10.0]

    def test_weak_coupling_selects_semitrivial(self, rows):
        weak = rows[0.1]
        assert weak.selected == "semitrivial"
        assert weak.min_mass_fraction < 1e-3
        assert weak.level == pytest.approx(weak.actions["semitrivial"], rel=1e-6)

    def test_strong_coupling_selects_vector(self, rows):
        strong = rows[10.0]
        assert strong.selected == "vector"
        assert strong.seed == "vector"
        assert strong.min_mass_fraction > 1e-2
        assert strong.level < strong.actions["semitrivial"]
        assert strong.level < rows[0.1].level

    def test_labels_follow_component_masses(self, rows):
        for row in rows.values():
            assert row.selected == state_kind(row.min_mass_fraction)
            levels = [value for value in row.actions.values() if value is not None]
            assert row.level <= min(levels) * (1.0 + 1e-12)

    def test_rows_serialize(self, rows):
        record = rows[10.0].as_dict()
        assert record["mu"] == 10.0
        assert record["selected"] == "vector"
        assert set(record["actions"]) == {"vector", "semitrivial"}
