"""
Unit tests for the seeded Gaussian-mixture corpus
"""

import os
import sys

import numpy as np
import pytest

# Add the nls-lab source directory to the path
sys.path.insert(
    0, os.path.join(os.path.dirname(__file__), "../../src/models/nls-lab/src")
)

from field_corpus import gaussian, plane_wave, random_corpus
from lab_core import CartesianGrid, RadialGrid, masses


class TestCorpus:
    def test_same_seed_same_fields(self, box_grid):
        first = random_corpus(box_grid, 5, seed=11)
        second = random_corpus(box_grid, 5, seed=11)
        for a, b in zip(first, second):
            assert np.array_equal(
                a.sample(box_grid).components, b.sample(box_grid).components
            )

    def test_different_seeds_differ(self, box_grid):
        a = random_corpus(box_grid, 1, seed=1, m=1)[0].sample(box_grid)
        b = random_corpus(box_grid, 1, seed=2, m=1)[0].sample(box_grid)
        assert not np.allclose(a.components, b.components)

    def test_component_counts(self, box_grid):
        corpus = random_corpus(box_grid, 30, seed=5)
        assert {mixture.m for mixture in corpus} <= {1, 2, 3}
        assert all(mixture.m == 2 for mixture in random_corpus(box_grid, 4, 5, m=2))

    def test_envelope_never_vanishes(self, box_grid):
        for mixture in random_corpus(box_grid, 5, seed=9):
            u = mixture.sample(box_grid)
            centre = box_grid.n // 2
            assert np.all(np.abs(u.components[:, centre, centre]) > 0)

    def test_radial_mixtures_are_real_up_to_phase(self):
        grid = RadialGrid(N=3, n_r=256, R=10.0)
        mixture = random_corpus(grid, 1, seed=4, m=1)[0]
        u = mixture.sample(grid).components[0]
        phase = u / np.abs(u)
        assert np.allclose(phase, phase[0])


class TestSampling:
    def test_dilation_and_amplitude(self, box_grid):
        mixture = random_corpus(box_grid, 1, seed=3, m=1)[0]
        base = mixture.sample(box_grid)
        scaled = mixture.sample(box_grid, dilation=1.0, amplitude=2.0)
        assert np.allclose(scaled.components, 2.0 * base.components, rtol=1e-14)
        dilated = mixture.sample(box_grid, dilation=2.0)
        # |u(2x)|^2 integrates to a quarter in the plane
        assert masses(dilated)[0] == pytest.approx(masses(base)[0] / 4.0, rel=1e-8)

    def test_gaussian_components(self, box_grid):
        u = gaussian(box_grid, amplitude=2.0, width=1.0, m=3)
        assert u.m == 3
        assert np.allclose(masses(u), 4.0 * np.pi, rtol=1e-12)

    def test_plane_wave_modulus(self):
        grid = CartesianGrid(N=2, n=32, L=4.0)
        u = plane_wave(grid, 0.5 + 0.5j, (1, -2))
        assert np.allclose(np.abs(u.components), abs(0.5 + 0.5j))
        assert masses(u)[0] == pytest.approx(0.5 * grid.volume, rel=1e-13)
