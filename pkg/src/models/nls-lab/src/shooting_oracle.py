"""
Radial shooting oracle for the single-component ground state
Independent check of the gradient-flow solver: bisection on psi(0) with adaptive RK45
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
import structlog
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import kve

from errors import BracketFailure, ParameterError
from lab_core import FieldVector, Grid, SystemParams, sample_radial_profile

logger = structlog.get_logger(__name__)

CROSSED = "crossed"
TURNED = "turned"
UNDECIDED = "undecided"

R_START = 1e-4
SEPARATION_TOL = 1e-9


@dataclass(frozen=True)
class ShotOutcome:
    psi0: float
    outcome: str
    r_event: float
    solution: object


@dataclass(frozen=True)
class ShootingProfile:
    """Positive decaying solution of psi'' + (N-1)/r psi' - psi + a psi^{2p-1} = 0

    The profile is the mean of the two bracketing shots up to r_match, where they
    start to separate, and the exact linear decay r^{-nu} K_nu(r) beyond it.
    """

    N: int
    p: float
    a: float
    psi0: float
    bracket: Tuple[float, float]
    r_match: float
    r_table: np.ndarray
    psi_table: np.ndarray

    @cached_property
    def _inner(self) -> CubicSpline:
        return CubicSpline(self.r_table, self.psi_table)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        nu = (self.N - 2) / 2.0
        inner = self._inner(np.minimum(r, self.r_match))
        rm = self.r_match
        psi_m = self.psi_table[-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = (
                psi_m
                * (kve(nu, r) / kve(nu, rm))
                * np.exp(-(r - rm))
                * (rm / r) ** nu
            )
        values = np.where(r <= rm, inner, tail)
        return self.a ** (-1.0 / (2.0 * self.p - 2.0)) * values

    def sample(self, grid: Grid) -> FieldVector:
        return sample_radial_profile(grid, self, m=1)


def _rhs(N: int, p: float):
    def rhs(r, y):
        psi, dpsi = y
        return [dpsi, -(N - 1) / r * dpsi + psi - np.abs(psi) ** (2 * p - 2) * psi]

    return rhs


def _crossing(r, y):
    return y[0]


_crossing.terminal = True
_crossing.direction = -1


def _turning(r, y):
    return y[1]


_turning.terminal = True
_turning.direction = 1


def shoot(N: int, p: float, psi0: float, r_max: float = 60.0) -> ShotOutcome:
    """Integrate from the series start psi0 + c r^2 until a zero crossing or a turn"""
    c = (psi0 - psi0 ** (2 * p - 1)) / (2.0 * N)
    y0 = [psi0 + c * R_START**2, 2.0 * c * R_START]
    sol = solve_ivp(
        _rhs(N, p),
        (R_START, r_max),
        y0,
        method="RK45",
        rtol=1e-12,
        atol=1e-14,
        events=(_crossing, _turning),
        dense_output=True,
    )
    if sol.t_events[0].size:
        return ShotOutcome(psi0, CROSSED, float(sol.t_events[0][0]), sol)
    if sol.t_events[1].size:
        return ShotOutcome(psi0, TURNED, float(sol.t_events[1][0]), sol)
    return ShotOutcome(psi0, UNDECIDED, float(sol.t[-1]), sol)


def _initial_bracket(N: int, p: float, r_max: float):
    low = shoot(N, p, 1.0 + 1e-3, r_max)
    if low.outcome != TURNED:
        raise BracketFailure(
            "small initial value did not turn back upward",
            {"psi0": low.psi0, "outcome": low.outcome},
        )
    high = shoot(N, p, 2.0, r_max)
    while high.outcome != CROSSED:
        if high.psi0 > 1e3:
            raise BracketFailure(
                "no initial value up to 1e3 crosses zero",
                {"psi0": high.psi0, "outcome": high.outcome},
            )
        high = shoot(N, p, 2.0 * high.psi0, r_max)
    return low, high


def _assemble(low: ShotOutcome, high: ShotOutcome, samples: int = 20001):
    r_end = min(low.r_event, high.r_event)
    r = np.linspace(R_START, r_end, samples)
    psi_low = low.solution.sol(r)[0]
    psi_high = high.solution.sol(r)[0]
    apart = np.abs(psi_low - psi_high) > SEPARATION_TOL * low.psi0
    cut = int(np.argmax(apart)) if np.any(apart) else samples - 1
    cut = max(cut, 2)
    psi = 0.5 * (psi_low[:cut] + psi_high[:cut])
    r_table = np.concatenate(([0.0], r[:cut]))
    psi_table = np.concatenate(([0.5 * (low.psi0 + high.psi0)], psi))
    return r_table, psi_table


def shooting_profile(
    N: int,
    p: float,
    a: float = 1.0,
    tolerance: float = 1e-12,
    r_max: float = 60.0,
    max_bisections: int = 200,
) -> ShootingProfile:
    """Bisect on psi(0): too large crosses zero, too small turns back upward"""
    low, high = _initial_bracket(N, p, r_max)
    logger.info(
        "shooting_bracket",
        low=low.psi0,
        low_outcome=low.outcome,
        high=high.psi0,
        high_outcome=high.outcome,
    )

    for _ in range(max_bisections):
        if high.psi0 - low.psi0 <= tolerance:
            break
        mid = shoot(N, p, 0.5 * (low.psi0 + high.psi0), r_max)
        if mid.outcome == CROSSED:
            high = mid
        elif mid.outcome == TURNED:
            low = mid
        else:
            low = high = mid
            break
    else:
        raise BracketFailure(
            "bisection did not reach the tolerance",
            {"low": low.psi0, "high": high.psi0, "tolerance": tolerance},
        )

    r_table, psi_table = _assemble(low, high)
    logger.info(
        "shooting_certificate",
        psi0=0.5 * (low.psi0 + high.psi0),
        low=low.psi0,
        low_event_r=low.r_event,
        high=high.psi0,
        high_event_r=high.r_event,
        r_match=float(r_table[-1]),
    )
    return ShootingProfile(
        N=N,
        p=p,
        a=a,
        psi0=0.5 * (low.psi0 + high.psi0),
        bracket=(low.psi0, high.psi0),
        r_match=float(r_table[-1]),
        r_table=r_table,
        psi_table=psi_table,
    )


def shooting_oracle(
    params: SystemParams, grid: Optional[Grid] = None, tolerance: float = 1e-12
):
    """Oracle profile for m = 1, sampled on the grid when one is given"""
    if params.m != 1:
        raise ParameterError(
            "the shooting oracle handles a single component", {"m": params.m}
        )
    profile = shooting_profile(
        params.N, params.p, a=float(params.A[0, 0]), tolerance=tolerance
    )
    if grid is None:
        return profile
    return profile.sample(grid)
