"""
Time integration of the coupled focusing system
Strang splitting with an exact nonlinear phase substep plus virial diagnostics
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import scipy.fft as sfft
import structlog
from scipy.interpolate import PchipInterpolator

from errors import InsufficientRows, ParameterError, PoisonedState
from functionals import Aggregates, AlphaBeta
from lab_core import (
    CartesianGrid,
    FieldVector,
    RadialGrid,
    SystemParams,
    coupling_potential,
)
from observability import get_logger

logger = structlog.get_logger(__name__)

COMPLETED = "completed"
BLOWUP = "blowup_detected"
POISONED = "poisoned"

LOCALIZED = "ok"
DELOCALIZED = "delocalized"

Observer = Callable[[float, FieldVector, Aggregates], None]


@dataclass
class EvolutionConfig:
    grid: CartesianGrid
    dt: float = 1e-3
    t_end: float = 5.0
    stride: int = 10
    gamma_blow: float = 100.0
    energy_drift_max: float = 1e-3
    localization_tol: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.gamma_blow <= 1:
            raise ValueError("gamma_blow must exceed 1")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class EvolutionTrace:
    """Diagnostics sampled every stride steps; rows are appended in time order"""

    m: int
    times: List[float] = field(default_factory=list)
    masses: List[np.ndarray] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    gradients: List[np.ndarray] = field(default_factory=list)
    interaction: List[float] = field(default_factory=list)
    variance: List[float] = field(default_factory=list)
    virial_K: List[float] = field(default_factory=list)
    virial_rhs: List[float] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)
    verdict: str = COMPLETED
    t_star: Optional[float] = None
    reason: Optional[str] = None
    final_state: Optional[FieldVector] = field(default=None, repr=False)

    def append(self, t: float, agg: Aggregates, variance: float, flag: str):
        if self.times and t <= self.times[-1]:
            raise ValueError("trace rows must be strictly increasing in time")
        self.times.append(float(t))
        self.masses.append(np.array(agg.M, dtype=float))
        self.energy.append(agg.energy())
        self.gradients.append(np.array(agg.G, dtype=float))
        self.interaction.append(agg.weighted_interaction)
        self.variance.append(float(variance))
        self.virial_K.append(agg.constraint(AlphaBeta.virial(agg.params.N)))
        self.virial_rhs.append(agg.virial_rhs())
        self.flags.append(flag)

    @property
    def rows(self) -> int:
        return len(self.times)

    def total_gradient(self) -> np.ndarray:
        return np.array([float(np.sum(g)) for g in self.gradients])

    def to_frame(self) -> pd.DataFrame:
        data: Dict[str, object] = {"t": self.times}
        masses = np.array(self.masses).reshape(self.rows, self.m)
        gradients = np.array(self.gradients).reshape(self.rows, self.m)
        for j in range(self.m):
            data[f"M_{j + 1}"] = masses[:, j]
        data["E"] = self.energy
        for j in range(self.m):
            data[f"G_{j + 1}"] = gradients[:, j]
        data["Q"] = self.variance
        data["K_virial"] = self.virial_K
        data["flag"] = self.flags
        return pd.DataFrame(data)

    def summary(self) -> dict:
        return {
            "verdict": self.verdict,
            "t_star": self.t_star,
            "reason": self.reason,
            "rows": self.rows,
            "t_final": self.times[-1] if self.times else None,
        }


class SplitStepper:
    """Strang step L(dt/2) N(dt) L(dt/2) with the half-step multiplier cached"""

    def __init__(
        self, grid: CartesianGrid, params: SystemParams, dt: float, workers: int = 1
    ):
        if not isinstance(grid, CartesianGrid):
            raise ParameterError("split-step evolution needs a Cartesian grid")
        self.grid = grid
        self.params = params
        self.dt = dt
        self.workers = workers
        self.axes = tuple(range(1, grid.N + 1))
        self._half_linear = np.exp(-1j * grid.ksq * (dt / 2.0))

    def _linear(self, comps: np.ndarray) -> np.ndarray:
        spectrum = sfft.fftn(comps, axes=self.axes, workers=self.workers)
        return sfft.ifftn(
            self._half_linear * spectrum, axes=self.axes, workers=self.workers
        )

    def _nonlinear(self, comps: np.ndarray) -> np.ndarray:
        # |u_j| is invariant under this substep, so V_j is frozen along it
        return comps * np.exp(1j * self.dt * coupling_potential(comps, self.params))

    def __call__(self, comps: np.ndarray) -> np.ndarray:
        out = self._linear(self._nonlinear(self._linear(comps)))
        if not np.all(np.isfinite(out)):
            raise PoisonedState("split step produced NaN or Inf samples")
        return out


def step(u: FieldVector, params: SystemParams, dt: float, workers: int = 1):
    """One Strang step of i u_t + Delta u = -V u"""
    u.check_finite()
    return u.with_components(SplitStepper(u.grid, params, dt, workers)(u.components))


def variance(u: FieldVector) -> float:
    """Q = sum_j int |x|^2 |u_j|^2 with box-centered coordinates"""
    density = np.sum(np.abs(u.components) ** 2, axis=0)
    return float(u.grid.integrate(u.grid.r2 * density))


def localization_flag(u: FieldVector, tolerance: float) -> str:
    """Mass fraction outside radius L/2 must stay below tolerance"""
    grid = u.grid
    density = np.sum(np.abs(u.components) ** 2, axis=0)
    total = float(grid.integrate(density))
    if total == 0.0:
        return LOCALIZED
    outside = grid.r2 > (grid.L / 2.0) ** 2
    tail = float(grid.integrate(np.where(outside, density, 0.0))) / total
    return LOCALIZED if tail <= tolerance else DELOCALIZED


def evolve(
    u0: FieldVector,
    params: SystemParams,
    cfg: EvolutionConfig,
    observer: Optional[Observer] = None,
) -> EvolutionTrace:
    """Integrate to t_end, stopping early at the first blow-up trigger"""
    u0.check_finite()
    stepper = SplitStepper(cfg.grid, params, cfg.dt, cfg.workers)
    trace = EvolutionTrace(m=u0.m)
    log = get_logger()

    def record(t: float, u: FieldVector) -> Aggregates:
        agg = Aggregates.of(u, params, workers=cfg.workers)
        trace.append(t, agg, variance(u), localization_flag(u, cfg.localization_tol))
        if observer is not None:
            observer(t, u, agg)
        return agg

    agg0 = record(0.0, u0)
    G0 = float(np.sum(agg0.G))
    E0 = agg0.energy()
    energy_scale = max(abs(E0), 1e-8 * 0.5 * G0, np.finfo(float).tiny)

    comps = u0.components.copy()
    for n in range(1, cfg.steps + 1):
        try:
            comps = stepper(comps)
        except PoisonedState:
            trace.verdict, trace.t_star, trace.reason = POISONED, n * cfg.dt, "nan"
            logger.error("evolution_poisoned", t=n * cfg.dt)
            trace.final_state = u0.with_components(comps)
            return trace
        if n % cfg.stride:
            continue

        t = n * cfg.dt
        agg = record(t, u0.with_components(comps))
        G = float(np.sum(agg.G))
        drift = abs(agg.energy() - E0) / energy_scale
        if G > cfg.gamma_blow * G0 or drift > cfg.energy_drift_max:
            grew = G > cfg.gamma_blow * G0
            trace.verdict, trace.t_star = BLOWUP, t
            trace.reason = "gradient_growth" if grew else "energy_drift"
            log.log_blowup(t, trace.reason, gradient_ratio=G / G0, energy_drift=drift)
            break

    trace.final_state = u0.with_components(comps)
    return trace


def virial_check(trace: EvolutionTrace, params: SystemParams) -> dict:
    """Second difference of Q/8 against sum G - N(p-1)/(2p) sum a P at interior rows

    Defects are relative to the sum of the magnitudes of both right-hand terms.
    Delocalized rows are reported but excluded from the maximum.
    """
    if trace.rows < 5:
        raise InsufficientRows(
            "virial check needs at least 5 diagnostic rows", {"rows": trace.rows}
        )
    times = np.array(trace.times)
    spacing = np.diff(times)
    if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0.0):
        raise InsufficientRows("virial check needs uniformly spaced rows")
    dt = spacing[0]
    Q = np.array(trace.variance)
    lhs = (Q[2:] - 2.0 * Q[1:-1] + Q[:-2]) / (8.0 * dt**2)
    rhs = np.array(trace.virial_rhs)[1:-1]
    N, p = params.N, params.p
    scale = (
        trace.total_gradient()[1:-1]
        + N * (p - 1.0) / (2.0 * p) * np.array(trace.interaction)[1:-1]
    )
    defects = np.abs(lhs - rhs) / scale
    flags = np.array(trace.flags)
    localized = (flags[:-2] == LOCALIZED) & (flags[1:-1] == LOCALIZED) & (
        flags[2:] == LOCALIZED
    )
    max_defect = float(np.max(defects[localized])) if np.any(localized) else None
    return {
        "max_defect": max_defect,
        "max_defect_all_rows": float(np.max(defects)),
        "delocalized_rows": int(np.sum(~localized)),
        "rows": int(defects.size),
        "defects": defects,
    }


def embed_profile(profile: FieldVector, grid: CartesianGrid) -> FieldVector:
    """Transplant a radial profile into the box by monotone cubic interpolation in r"""
    if not isinstance(profile.grid, RadialGrid):
        raise ParameterError("embed_profile expects a radial profile")
    if profile.grid.N != grid.N:
        raise ParameterError(
            "profile and box dimensions differ",
            {"profile_N": profile.grid.N, "box_N": grid.N},
        )
    radial = profile.grid
    r = np.sqrt(grid.r2)
    inside = r <= radial.R
    comps = np.zeros((profile.m,) + grid.shape, dtype=complex)
    for j, comp in enumerate(profile.components):
        re = PchipInterpolator(radial.r, comp.real)(r[inside])
        im = PchipInterpolator(radial.r, comp.imag)(r[inside])
        comps[j][inside] = re + 1j * im
    return FieldVector(grid, comps)
