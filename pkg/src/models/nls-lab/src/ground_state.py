"""
Ground states of the stationary coupled system
Nehari-projected gradient flow, omega normalization and a Newton polish
"""

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import structlog
from joblib import Parallel, delayed
from scipy.linalg import solveh_banded
from scipy.sparse.linalg import spsolve

from errors import (
    CollapseToZero,
    DegenerateField,
    NegativeOmega,
    NoConvergence,
    ParameterError,
    SolverError,
)
from functionals import Aggregates, AlphaBeta, default_test_set
from lab_core import FieldVector, RadialGrid, SystemParams, coupling_potential
from observability import get_logger
from scaling import (
    AMPLITUDE,
    EXPONENTIAL,
    ScalingLaw,
    nehari_root_amplitude_from,
    rescale,
)

logger = structlog.get_logger(__name__)

NEHARI = AlphaBeta(1.0, 0.0)
MAX_AMPLITUDE_ROOT = 1e8
# a sweep minimizer is a vector state when its smallest component holds
# more than this share of the total mass
VECTOR_MASS_FRACTION = 1e-2
ACTION_TIE_RTOL = 1e-12


@dataclass
class GroundStateConfig:
    """Settings of one ground-state solve

    seed_widths gives one Gaussian width per component for vector seeds; semitrivial
    seeds keep only the first component.
    """

    grid: RadialGrid
    tau: float = 0.02
    tolerance: float = 1e-8
    max_iterations: int = 20000
    flow_tolerance: float = 1e-9
    newton_max_iterations: int = 30
    omega_window: int = 20
    seed_widths: Optional[Sequence[float]] = None
    seed_amplitude: float = 1.0
    semitrivial: bool = False
    log_every: int = 500

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.tolerance <= 0 or self.flow_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1 or self.newton_max_iterations < 1:
            raise ValueError("iteration limits must be positive")
        if self.seed_widths is not None and min(self.seed_widths) <= 0:
            raise ValueError("seed widths must be positive")


@dataclass
class GroundStateResult:
    psi: FieldVector
    omega: float
    residual: float
    level: float
    pohozaev_defects: Dict[str, float]
    component_masses: np.ndarray
    iterations: int
    newton_iterations: int
    history: np.ndarray = field(repr=False)
    seed: str = "vector"

    def summary(self) -> dict:
        return {
            "level": self.level,
            "omega": self.omega,
            "residual": self.residual,
            "pohozaev_defects": self.pohozaev_defects,
            "component_masses": self.component_masses.tolist(),
            "iterations": self.iterations,
            "newton_iterations": self.newton_iterations,
            "seed": self.seed,
        }


def seed_profiles(params: SystemParams, cfg: GroundStateConfig) -> np.ndarray:
    """Positive Gaussian seeds, real storage of shape (m, n_r)"""
    r = cfg.grid.r
    widths = cfg.seed_widths
    if widths is None:
        widths = [1.0 + 0.05 * j for j in range(params.m)]
    if len(widths) != params.m:
        raise ParameterError(
            "seed_widths needs one width per component",
            {"seed_widths": list(widths), "m": params.m},
        )
    seeds = np.stack(
        [cfg.seed_amplitude * np.exp(-(r**2) / (2.0 * w**2)) for w in widths]
    )
    if cfg.semitrivial:
        seeds[1:] = 0.0
    seeds[:, -1] = 0.0
    return seeds


def nonlinear_force(phi: np.ndarray, params: SystemParams) -> np.ndarray:
    return coupling_potential(phi, params) * phi


def _aggregates(grid: RadialGrid, phi: np.ndarray, params: SystemParams):
    return Aggregates.of(FieldVector(grid, phi), params)


def _nehari_flow(params: SystemParams, cfg: GroundStateConfig, phi: np.ndarray):
    """Semi-implicit steps ((1 + tau) W + tau S) phi* = W (phi + tau F(phi)), each
    projected back onto K_{1,0} = 0 by the amplitude root"""
    grid = cfg.grid
    free = grid.n_r - 1
    weights = grid.w[:free]
    banded = cfg.tau * grid.stiffness_banded()
    banded[1] += (1.0 + cfg.tau) * weights

    omegas = deque(maxlen=cfg.omega_window)
    history: List[float] = []
    t0 = 1.0
    for iteration in range(1, cfg.max_iterations + 1):
        rhs = weights[:, None] * (phi + cfg.tau * nonlinear_force(phi, params))[
            :, :free
        ].T
        star = np.zeros_like(phi)
        star[:, :free] = solveh_banded(banded, rhs).T

        agg = _aggregates(grid, star, params)
        try:
            t0 = nehari_root_amplitude_from(agg, NEHARI)
        except DegenerateField as exc:
            raise CollapseToZero(
                "iterate lost its interaction mass", {"iteration": iteration}
            ) from exc
        if not np.isfinite(t0) or t0 > MAX_AMPLITUDE_ROOT:
            raise CollapseToZero(
                "amplitude projection diverged", {"iteration": iteration, "t0": t0}
            )

        projected = t0 * star
        omegas.append(1.0 + (1.0 - t0) / cfg.tau)
        history.append(ScalingLaw(AMPLITUDE, t0).apply_to_aggregates(agg).action())

        change = np.max(np.abs(projected - phi)) / np.max(np.abs(projected))
        phi = projected
        if iteration % cfg.log_every == 0:
            get_logger().log_solver_progress(
                "nehari_flow",
                iteration,
                change=float(change),
                omega=float(np.mean(omegas)),
                action=history[-1],
            )
        if change < cfg.flow_tolerance:
            return phi, float(np.mean(omegas)), iteration, np.array(history)

    raise NoConvergence(
        "gradient flow did not settle",
        {"iterations": cfg.max_iterations, "change": float(change)},
    )


def _omega_normalize(
    grid: RadialGrid, phi: np.ndarray, omega: float, params: SystemParams, tau: float
) -> np.ndarray:
    """psi(x) = omega^{-1/(2p-2)} phi~(x / sqrt(omega)), phi~ = t0^{1/(2p-2)} phi"""
    if omega <= 0.0:
        raise NegativeOmega("chemical potential must be positive", {"omega": omega})
    q = 2.0 * params.p - 2.0
    t0 = 1.0 - tau * (omega - 1.0)
    amplified = t0 ** (1.0 / q) * phi
    if omega == 1.0:
        return amplified
    log_omega = float(np.log(omega))
    law = ScalingLaw(EXPONENTIAL, 1.0, AlphaBeta(-log_omega / q, 0.5 * log_omega))
    return np.real(rescale(FieldVector(grid, amplified), law).components)


def _laplacian_matrix(grid: RadialGrid) -> sp.csr_matrix:
    """-W^{-1} S on the free nodes"""
    off, diag = grid.stiffness_banded()
    stiffness = sp.diags([off[1:], diag, off[1:]], [-1, 0, 1], format="csr")
    return -sp.diags(1.0 / grid.w[: grid.n_r - 1]) @ stiffness


def stationary_residual(psi: np.ndarray, grid: RadialGrid, params: SystemParams):
    """Delta psi_j - psi_j + sum_k a_jk |psi_k|^p |psi_j|^{p-2} psi_j on free nodes"""
    free = grid.n_r - 1
    lap = _laplacian_matrix(grid)
    out = np.stack([lap @ comp[:free] for comp in psi])
    return out - psi[:, :free] + nonlinear_force(psi, params)[:, :free]


def _force_jacobian_blocks(psi: np.ndarray, params: SystemParams, active):
    p, A = params.p, params.A
    modulus = np.abs(psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        odd = np.where(modulus > 0.0, modulus ** (p - 2.0) * psi, 0.0)
        inverse = np.where(modulus > 0.0, modulus ** (p - 2.0), 0.0)
    powered = modulus**p
    blocks = {}
    for j in active:
        diagonal = A[j, j] * (2.0 * p - 1.0) * modulus[j] ** (2.0 * p - 2.0)
        for k in active:
            if k != j:
                diagonal = diagonal + A[j, k] * powered[k] * (p - 1.0) * inverse[j]
        blocks[j, j] = diagonal
        for k in active:
            if k != j:
                blocks[j, k] = A[j, k] * p * odd[k] * odd[j]
    return blocks


def _newton_polish(psi: np.ndarray, params: SystemParams, cfg: GroundStateConfig):
    grid = cfg.grid
    free = grid.n_r - 1
    active = [j for j in range(params.m) if np.max(np.abs(psi[j])) > 0.0]
    linear = _laplacian_matrix(grid) - sp.identity(free, format="csr")

    residual = np.max(np.abs(stationary_residual(psi, grid, params)))
    for iteration in range(cfg.newton_max_iterations + 1):
        if residual <= cfg.tolerance:
            return psi, float(residual), iteration
        if iteration == cfg.newton_max_iterations:
            break
        blocks = _force_jacobian_blocks(psi[:, :free], params, active)
        layout = []
        for j in active:
            row = []
            for k in active:
                block = sp.diags(blocks[j, k])
                row.append(linear + block if j == k else block)
            layout.append(row)
        jacobian = sp.bmat(layout, format="csc")
        rhs = -stationary_residual(psi, grid, params)[active].ravel()
        step = spsolve(jacobian, rhs).reshape(len(active), free)
        psi = psi.copy()
        psi[active, :free] += step
        residual = np.max(np.abs(stationary_residual(psi, grid, params)))
        get_logger().log_solver_progress("newton", iteration + 1, residual=residual)

    raise NoConvergence(
        "Newton polish stagnated above tolerance",
        {"residual": float(residual), "tolerance": cfg.tolerance},
    )


def verify_pohozaev(
    result: Union[GroundStateResult, FieldVector],
    params: SystemParams,
    ab_set: Optional[Iterable[AlphaBeta]] = None,
) -> Dict[str, float]:
    """Relative defect |K_{alpha,beta}| / (sum of the magnitudes of its three terms)

    Accepts a solver result or a bare profile.
    """
    u = result.psi if isinstance(result, GroundStateResult) else result
    agg = Aggregates.of(u, params)
    N, p = params.N, params.p
    ab_set = tuple(ab_set) if ab_set is not None else default_test_set(N)
    G, M = float(np.sum(agg.G)), float(np.sum(agg.M))
    A = agg.weighted_interaction
    defects = {}
    for ab in ab_set:
        scale = (
            0.5 * abs(ab.gradient_rate(N)) * G
            + 0.5 * abs(ab.mass_rate(N)) * M
            + abs(ab.interaction_rate(N, p)) / (2.0 * p) * A
        )
        value = agg.constraint(ab)
        defects[ab.label()] = abs(value) / scale if scale > 0 else abs(value)
    return defects


def solve_ground_state(
    params: SystemParams, cfg: GroundStateConfig
) -> GroundStateResult:
    """Solve Delta psi_j - psi_j + sum_k a_jk |psi_k|^p |psi_j|^{p-2} psi_j = 0"""
    if cfg.grid.N != params.N:
        raise ParameterError(
            "grid dimension differs from the problem dimension",
            {"grid_N": cfg.grid.N, "N": params.N},
        )
    seed = "semitrivial" if cfg.semitrivial else "vector"
    log = get_logger()

    phi, omega, iterations, history = _nehari_flow(
        params, cfg, seed_profiles(params, cfg)
    )
    psi = _omega_normalize(cfg.grid, phi, omega, params, cfg.tau)
    psi, residual, newton_iterations = _newton_polish(psi, params, cfg)

    u = FieldVector(cfg.grid, psi)
    agg = Aggregates.of(u, params)
    level = agg.action()
    if not level > 0.0:
        raise CollapseToZero("converged state has nonpositive action", {"level": level})

    result = GroundStateResult(
        psi=u,
        omega=omega,
        residual=residual,
        level=level,
        pohozaev_defects=verify_pohozaev(u, params),
        component_masses=agg.M,
        iterations=iterations,
        newton_iterations=newton_iterations,
        history=history,
        seed=seed,
    )
    log.log_solver_converged(
        "ground_state",
        iterations,
        residual,
        level=level,
        omega=omega,
        seed=seed,
        newton_iterations=newton_iterations,
    )
    return result


def coupled_dilation_bound(u: FieldVector, params: SystemParams) -> Dict[str, float]:
    """Max over t > 0 of S(u(./t)) = t^{N-2} G/2 - t^N D/2 with D = A/p - M

    Finite only when D > 0; for N = 2 the supremum G/2 is approached as t -> 0.
    """
    agg = Aggregates.of(u, params)
    N, p = params.N, params.p
    G = float(np.sum(agg.G))
    M = float(np.sum(agg.M))
    D = agg.weighted_interaction / p - M
    if D <= 0.0:
        return {"t_bar": float("inf"), "level_bound": float("inf"), "bounded": False}
    if N == 2:
        return {"t_bar": 0.0, "level_bound": 0.5 * G, "bounded": True}
    t_bar = float(np.sqrt((N - 2.0) * G / (N * D)))
    bound = 0.5 * t_bar ** (N - 2) * G - 0.5 * t_bar**N * D
    return {"t_bar": t_bar, "level_bound": float(bound), "bounded": True}


def semitrivial_identity(u: FieldVector, params: SystemParams) -> float:
    """Relative defect of sum M_j = (1 - N/2 + N/(2p)) sum a_jk P_jk on a solution"""
    agg = Aggregates.of(u, params)
    N, p = params.N, params.p
    coefficient = 1.0 - N / 2.0 + N / (2.0 * p)
    mass = float(np.sum(agg.M))
    predicted = coefficient * agg.weighted_interaction
    return abs(mass - predicted) / (abs(mass) + abs(predicted))


@dataclass
class MuSweepRow:
    mu: float
    selected: str
    seed: str
    level: float
    component_masses: List[float]
    min_mass_fraction: float
    actions: Dict[str, Optional[float]]
    failures: Dict[str, str]
    dilation_bound: Dict[str, float]

    def as_dict(self) -> dict:
        return {
            "mu": self.mu,
            "selected": self.selected,
            "seed": self.seed,
            "level": self.level,
            "component_masses": self.component_masses,
            "min_mass_fraction": self.min_mass_fraction,
            "actions": self.actions,
            "failures": self.failures,
            "dilation_bound": self.dilation_bound,
        }


def sweep_coupling(base: SystemParams, mu: float) -> SystemParams:
    """Keep the diagonal a_jj = mu_j of base and set every off-diagonal entry to mu"""
    A = np.full((base.m, base.m), float(mu))
    np.fill_diagonal(A, np.diag(base.A))
    return base.with_coupling(A)


def select_candidate(levels: Dict[str, float]) -> str:
    """Seed with the lowest level; ties within ACTION_TIE_RTOL go to the semitrivial"""
    if len(levels) == 1:
        return next(iter(levels))
    vector, semitrivial = levels["vector"], levels["semitrivial"]
    margin = ACTION_TIE_RTOL * max(abs(vector), abs(semitrivial))
    return "vector" if vector < semitrivial - margin else "semitrivial"


def state_kind(min_mass_fraction: float) -> str:
    return "vector" if min_mass_fraction > VECTOR_MASS_FRACTION else "semitrivial"


def _sweep_point(base: SystemParams, mu: float, cfg: GroundStateConfig) -> MuSweepRow:
    params = sweep_coupling(base, mu)
    candidates: Dict[str, GroundStateResult] = {}
    failures: Dict[str, str] = {}
    first_error: Optional[SolverError] = None
    for seed in ("vector", "semitrivial"):
        try:
            candidates[seed] = solve_ground_state(
                params, replace(cfg, semitrivial=(seed == "semitrivial"))
            )
        except SolverError as exc:
            failures[seed] = exc.code
            first_error = first_error or exc
            logger.warning(
                "mu_sweep_candidate_failed", mu=mu, seed=seed, error=exc.code
            )
    if not candidates:
        raise first_error

    seed = select_candidate({name: res.level for name, res in candidates.items()})
    best = candidates[seed]
    masses = best.component_masses
    fraction = float(np.min(masses) / np.sum(masses))
    bound = {}
    if "semitrivial" in candidates:
        profile = candidates["semitrivial"].psi.components[0]
        replicated = FieldVector(cfg.grid, np.stack([profile] * params.m))
        bound = coupled_dilation_bound(replicated, params)
    return MuSweepRow(
        mu=float(mu),
        selected=state_kind(fraction),
        seed=seed,
        level=best.level,
        component_masses=masses.tolist(),
        min_mass_fraction=fraction,
        actions={
            name: (candidates[name].level if name in candidates else None)
            for name in ("vector", "semitrivial")
        },
        failures=failures,
        dilation_bound=bound,
    )


def mu_sweep(
    base: SystemParams,
    mus: Sequence[float],
    cfg: GroundStateConfig,
    jobs: int = 1,
) -> List[MuSweepRow]:
    """Vector and semitrivial candidates per coupling strength; the lower action wins"""
    if base.m < 2:
        raise ParameterError("mu sweep needs at least two components", {"m": base.m})
    rows = Parallel(n_jobs=jobs)(
        delayed(_sweep_point)(base, float(mu), cfg) for mu in mus
    )
    return list(rows)
