"""
Shared pytest fixtures for all tests
"""

import os
import sys

import numpy as np
import pytest

# Add the nls-lab source directory to the path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "../src/models/nls-lab/src"))

from field_corpus import gaussian, random_corpus
from ground_state import GroundStateConfig, solve_ground_state
from lab_core import CartesianGrid, RadialGrid, validate_params


def coupled_params(m: int, N: int = 2, p: float = 2.5):
    """Symmetric positive coupling with a stronger diagonal"""
    A = np.ones((m, m)) + 0.5 * np.eye(m)
    return validate_params({"N": N, "p": p, "m": m, "A": A})


@pytest.fixture(scope="session")
def coupling():
    """Factory for coupled parameter sets, coupling(m)"""
    return coupled_params


@pytest.fixture(scope="session")
def reference_params():
    """Scalar equation in the plane with p = 2.5 and a = 1"""
    return validate_params({"N": 2, "p": 2.5, "m": 1, "A": [[1.0]]})


@pytest.fixture(scope="session")
def reference_radial_grid():
    return RadialGrid(N=2, n_r=4096, R=16.0)


@pytest.fixture(scope="session")
def reference_ground(reference_params, reference_radial_grid):
    """Ground state shared by the solver, well and dynamics tests"""
    cfg = GroundStateConfig(grid=reference_radial_grid)
    return solve_ground_state(reference_params, cfg)


@pytest.fixture(scope="session")
def box_grid():
    """Box wide enough that unit Gaussians are spectrally exact"""
    return CartesianGrid(N=2, n=128, L=10.0)


@pytest.fixture(scope="session")
def dynamics_grid():
    return CartesianGrid(N=2, n=128, L=12.0)


@pytest.fixture
def unit_gaussian(box_grid):
    """exp(-|x|^2 / 2) with M = G = pi and P = 0.4 pi at p = 2.5"""
    return gaussian(box_grid, amplitude=1.0, width=1.0)


@pytest.fixture(scope="session")
def field_corpus(box_grid):
    """Twenty seeded mixtures with 1 to 3 components and their coupling"""
    states = []
    for mixture in random_corpus(box_grid, 20, seed=7):
        states.append((mixture.sample(box_grid), coupled_params(mixture.m)))
    return states
