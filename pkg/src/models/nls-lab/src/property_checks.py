"""
Property suites run by the check command
Each suite is deterministic for a seed and reports pass/fail with its worst defect
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

import numpy as np
import scipy.fft as sfft

from errors import NLSLabError
from evolution import step
from field_corpus import plane_wave, random_corpus
from functionals import Aggregates, AlphaBeta, default_test_set
from ground_state import GroundStateConfig, solve_ground_state
from lab_core import (
    CartesianGrid,
    RadialGrid,
    inner,
    laplacian,
    masses,
    validate_params,
)
from observability import timed_span
from potential_well import sign_agreement_corpus
from scaling import (
    EXPONENTIAL,
    ScalingLaw,
    dilation_action_profile,
    nehari_root_amplitude_bisect,
    nehari_root_amplitude_from,
    nehari_root_dilation_bisect,
    nehari_root_dilation_from,
)

N = 2
P = 2.5


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: Dict[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": self.details}


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), np.finfo(float).tiny)


def _params(m: int):
    A = np.ones((m, m)) + 0.5 * np.eye(m)
    return validate_params({"N": N, "p": P, "m": m, "A": A})


def _corpus_states(grid, count: int, seed: int):
    states = []
    for mixture in random_corpus(grid, count, seed):
        states.append((mixture.sample(grid), _params(mixture.m)))
    return states


def check_quadrature(seed: int) -> Tuple[bool, dict]:
    box = CartesianGrid(N=N, n=64, L=8.0)
    ball = RadialGrid(N=N, n_r=1024, R=16.0)
    box_error = _relative(float(box.integrate(np.ones(box.shape))), box.volume)
    ball_error = _relative(float(ball.integrate(np.ones(ball.shape))), ball.volume)
    return box_error <= 1e-14 and ball_error <= 1e-10, {
        "box": box_error,
        "ball": ball_error,
    }


def check_parseval(seed: int) -> Tuple[bool, dict]:
    grid = CartesianGrid(N=N, n=128, L=10.0)
    worst = 0.0
    for u, _ in _corpus_states(grid, 5, seed):
        spectrum = sfft.fftn(u.components, axes=(1, 2))
        frequency = np.sum(np.abs(spectrum) ** 2, axis=(1, 2)) * grid.cell_volume
        frequency /= grid.n**grid.N
        worst = max(worst, float(np.max(np.abs(frequency - masses(u)) / masses(u))))
    return worst <= 1e-12, {"max_relative": worst}


def check_laplacian_symmetry(seed: int) -> Tuple[bool, dict]:
    worst = 0.0
    for grid in (CartesianGrid(N=N, n=128, L=10.0), RadialGrid(N=N, n_r=1024)):
        corpus = random_corpus(grid, 6, seed, m=1)
        for first, second in zip(corpus[::2], corpus[1::2]):
            u, v = first.sample(grid), second.sample(grid)
            if isinstance(grid, RadialGrid):
                u.components[:, -1] = 0.0
                v.components[:, -1] = 0.0
            gap = abs(inner(laplacian(u), v) - inner(u, laplacian(v)))
            norm = np.sqrt(abs(inner(u, u)) * abs(inner(v, v)))
            worst = max(worst, gap / norm)
    return worst <= 1e-10, {"max_relative": worst}


def check_algebraic_identities(seed: int) -> Tuple[bool, dict]:
    grid = CartesianGrid(N=N, n=64, L=8.0)
    worst = {"sum_Q": 0.0, "sum_S": 0.0, "H": 0.0}
    for u, params in _corpus_states(grid, 20, seed):
        agg = Aggregates.of(u, params)
        virial = agg.constraint(AlphaBeta.virial(N))
        sum_Q = _relative(float(np.sum(agg.Q_parts())), virial)
        sum_S = _relative(float(np.sum(agg.S_parts())), agg.action())
        worst["sum_Q"] = max(worst["sum_Q"], sum_Q)
        worst["sum_S"] = max(worst["sum_S"], sum_S)
        for ab in default_test_set(N)[:3]:
            expected = agg.action() - agg.constraint(ab) / ab.mass_rate(N)
            worst["H"] = max(worst["H"], _relative(agg.functional_H(ab), expected))
    return max(worst.values()) <= 1e-12, worst


def _action_derivative(agg: Aggregates, ab: AlphaBeta, h: float) -> float:
    def action_at(lam):
        return ScalingLaw(EXPONENTIAL, lam, ab).apply_to_aggregates(agg).action()

    def central(step_size):
        return (action_at(step_size) - action_at(-step_size)) / (2.0 * step_size)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def check_derivative_anchor(seed: int) -> Tuple[bool, dict]:
    grid = CartesianGrid(N=N, n=64, L=8.0)
    worst = 0.0
    for u, params in _corpus_states(grid, 20, seed):
        agg = Aggregates.of(u, params)
        for ab in default_test_set(N):
            worst = max(
                worst, _relative(_action_derivative(agg, ab, 1e-2), agg.constraint(ab))
            )
    return worst <= 1e-6, {"max_relative": worst}


def check_gn_invariance(seed: int) -> Tuple[bool, dict]:
    grid = CartesianGrid(N=N, n=1024, L=14.0)
    corpus = random_corpus(
        grid,
        5,
        seed,
        m=1,
        width_range=(0.5, 0.7),
        center_spread=0.5,
        bumps=2,
    )
    params = _params(1)
    worst = 0.0
    for mixture in corpus:
        u = mixture.sample(grid)
        reference = Aggregates.of(u, params).gn_ratio()
        for factor in (0.5, 2.0, 5.0):
            amplified = Aggregates.of(u.scaled(factor), params).gn_ratio()
            dilated = Aggregates.of(mixture.sample(grid, dilation=factor), params)
            worst = max(
                worst,
                _relative(amplified, reference),
                _relative(dilated.gn_ratio(), reference),
            )
    return worst <= 1e-10, {"max_relative": worst}


def check_constraint_roots(seed: int) -> Tuple[bool, dict]:
    grid = CartesianGrid(N=N, n=64, L=8.0)
    worst = 0.0
    for u, params in _corpus_states(grid, 10, seed):
        agg = Aggregates.of(u, params)
        lam = nehari_root_dilation_from(agg)
        worst = max(worst, _relative(lam, nehari_root_dilation_bisect(agg)))
        for ab in default_test_set(N):
            t0 = nehari_root_amplitude_from(agg, ab)
            worst = max(worst, _relative(t0, nehari_root_amplitude_bisect(agg, ab)))
    return worst <= 1e-10, {"max_relative": worst}


def check_dilation_profile(seed: int) -> Tuple[bool, dict]:
    grid = CartesianGrid(N=N, n=64, L=8.0)
    derivative_gap = 0.0
    concavity = -np.inf
    for u, params in _corpus_states(grid, 10, seed):
        agg = Aggregates.of(u, params)
        lam0 = nehari_root_dilation_from(agg)
        lambdas = lam0 * np.linspace(1.0, 3.0, 41)
        profile = dilation_action_profile(agg, lambdas)
        expected = N / (2.0 * lambdas) * profile["sumQ"]
        scale = float(np.max(np.abs(profile["dS"])))
        gap = float(np.max(np.abs(profile["dS"] - expected))) / scale
        derivative_gap = max(derivative_gap, gap)
        # S is concave past the Nehari dilation root
        second = np.diff(profile["S"], 2) / float(np.max(np.abs(profile["S"])))
        concavity = max(concavity, float(np.max(second)))
    return derivative_gap <= 1e-12 and concavity <= 1e-10, {
        "derivative_gap": derivative_gap,
        "max_second_difference": concavity,
    }


def check_split_step(seed: int) -> Tuple[bool, dict]:
    grid = CartesianGrid(N=N, n=64, L=8.0)
    params = _params(1)
    amplitude = 0.5
    u = plane_wave(grid, amplitude, (1, 2))
    dt, steps = 1e-3, 100
    v = u
    for _ in range(steps):
        v = step(v, params, dt)
    k2 = float(np.sum((np.pi * np.array([1, 2]) / grid.L) ** 2))
    a = float(params.A[0, 0])
    rate = a * amplitude ** (2 * P - 2) - k2
    exact = u.components * np.exp(1j * rate * dt * steps)
    plane_error = float(np.max(np.abs(v.components - exact)) / amplitude)

    mixture = random_corpus(grid, 1, seed, m=2)[0]
    w = mixture.sample(grid)
    params2 = _params(2)
    forward = step(w, params2, dt)
    mass_error = float(np.max(np.abs(masses(forward) - masses(w)) / masses(w)))
    back = step(forward, params2, -dt)
    reversal = float(np.max(np.abs(back.components - w.components)))
    passed = plane_error <= 1e-10 and mass_error <= 1e-13 and reversal <= 1e-10
    return passed, {
        "plane_wave": plane_error,
        "mass": mass_error,
        "time_reversal": reversal,
    }


def check_ground_state(seed: int) -> Tuple[bool, dict]:
    params = _params(1)
    grid = RadialGrid(N=N, n_r=4096, R=16.0)
    result = solve_ground_state(params, GroundStateConfig(grid=grid))
    corpus = sign_agreement_corpus(result.psi, params, result.level, seed=seed)
    defects = max(result.pohozaev_defects.values())
    passed = result.level > 0 and defects <= 1e-5 and corpus["disagreements"] == 0
    return passed, {
        "level": result.level,
        "max_pohozaev_defect": defects,
        "sign_disagreements": corpus["disagreements"],
    }


SUITES: List[Tuple[str, Callable[[int], Tuple[bool, dict]]]] = [
    ("quadrature", check_quadrature),
    ("parseval", check_parseval),
    ("laplacian_symmetry", check_laplacian_symmetry),
    ("algebraic_identities", check_algebraic_identities),
    ("derivative_anchor", check_derivative_anchor),
    ("gn_invariance", check_gn_invariance),
    ("constraint_roots", check_constraint_roots),
    ("dilation_profile", check_dilation_profile),
    ("split_step", check_split_step),
    ("ground_state", check_ground_state),
]


def run_suites(seed: int = 0) -> List[SuiteResult]:
    results = []
    for name, suite in SUITES:
        with timed_span("property_suite", suite=name):
            try:
                passed, details = suite(seed)
            except NLSLabError as exc:
                passed, details = False, {"error": exc.to_dict()}
        results.append(SuiteResult(name, bool(passed), details))
    return results
