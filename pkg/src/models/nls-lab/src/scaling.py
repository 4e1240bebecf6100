"""
Scaling operators and closed-form constraint roots
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import structlog
from scipy.interpolate import PchipInterpolator
from scipy.ndimage import map_coordinates
from scipy.optimize import bisect

from errors import DegenerateField, SupportOverflow
from functionals import Aggregates, AlphaBeta
from lab_core import CartesianGrid, FieldVector, SystemParams

logger = structlog.get_logger(__name__)

EXPONENTIAL = "exponential"
MASS_PRESERVING = "mass_preserving"
AMPLITUDE = "amplitude"

TAIL_TOLERANCE = 1e-8
BISECT_XTOL = 1e-12
BISECT_MAXITER = 200


@dataclass(frozen=True)
class ScalingLaw:
    """u -> factor * u(scale * x)

    exponential (alpha, beta): factor e^{alpha lam}, scale e^{-beta lam}
    mass_preserving:           factor lam^{N/2},     scale lam
    amplitude:                 factor lam,           scale 1
    """

    kind: str
    lam: float
    ab: Optional[AlphaBeta] = None

    def __post_init__(self):
        if self.kind not in (EXPONENTIAL, MASS_PRESERVING, AMPLITUDE):
            raise ValueError(f"unknown scaling kind {self.kind!r}")
        if self.kind == EXPONENTIAL and self.ab is None:
            raise ValueError("exponential scaling needs (alpha, beta)")
        if self.kind != EXPONENTIAL and self.lam <= 0:
            raise ValueError(f"{self.kind} scaling needs lam > 0")

    def factor(self, N: int) -> float:
        if self.kind == EXPONENTIAL:
            return float(np.exp(self.ab.alpha * self.lam))
        if self.kind == MASS_PRESERVING:
            return self.lam ** (N / 2.0)
        return self.lam

    def scale(self) -> float:
        if self.kind == EXPONENTIAL:
            return float(np.exp(-self.ab.beta * self.lam))
        if self.kind == MASS_PRESERVING:
            return self.lam
        return 1.0

    def apply_to_aggregates(self, agg: Aggregates) -> Aggregates:
        """Exact change of variables on (M, G, P)"""
        N, p = agg.params.N, agg.params.p
        a, s = self.factor(N), self.scale()
        return agg.scaled(
            mass=a**2 * s ** (-N),
            gradient=a**2 * s ** (2 - N),
            interaction=a ** (2 * p) * s ** (-N),
        )


def _lost_tail_fraction(u: FieldVector, scale: float) -> float:
    """Fraction of mass that the dilation pushes outside the domain"""
    if scale >= 1.0:
        return 0.0
    density = np.sum(np.abs(u.components) ** 2, axis=0)
    total = float(u.grid.integrate(density))
    if total == 0.0:
        return 0.0
    grid = u.grid
    if isinstance(grid, CartesianGrid):
        extent = np.max(np.abs(np.stack(grid.coordinates())), axis=0)
        outside = extent >= scale * grid.L
    else:
        outside = grid.r > scale * grid.R
    return float(grid.integrate(np.where(outside, density, 0.0))) / total


def _resample_cartesian(grid: CartesianGrid, comps: np.ndarray, scale: float):
    coords = grid.coordinates()
    index = np.stack([(scale * x + grid.L) / grid.h for x in coords])
    out = np.empty_like(comps)
    for j, comp in enumerate(comps):
        re = map_coordinates(comp.real, index, order=3, mode="constant", cval=0.0)
        im = map_coordinates(comp.imag, index, order=3, mode="constant", cval=0.0)
        out[j] = re + 1j * im
    return out


def _resample_radial(grid, comps: np.ndarray, scale: float):
    target = scale * grid.r
    inside = target <= grid.R
    out = np.zeros_like(comps)
    for j, comp in enumerate(comps):
        re = PchipInterpolator(grid.r, comp.real)(target[inside])
        im = PchipInterpolator(grid.r, comp.imag)(target[inside])
        out[j, inside] = re + 1j * im
    return out


def rescale(u: FieldVector, law: ScalingLaw) -> FieldVector:
    """Resample factor * u(scale * x) on the same grid; tails beyond it are zero"""
    u.check_finite()
    N = u.grid.N
    factor, scale = law.factor(N), law.scale()
    if scale == 1.0:
        return u.with_components(factor * u.components)

    lost = _lost_tail_fraction(u, scale)
    if lost > TAIL_TOLERANCE:
        raise SupportOverflow(
            f"dilation by {scale:g} pushes {lost:.3e} of the mass out of the domain",
            {"scale": scale, "lost_fraction": lost},
        )
    if isinstance(u.grid, CartesianGrid):
        comps = _resample_cartesian(u.grid, u.components, scale)
    else:
        comps = _resample_radial(u.grid, u.components, scale)
    return u.with_components(factor * comps)


def dilate(u: FieldVector, lam: float) -> FieldVector:
    """Mass-preserving dilation u_lam = lam^{N/2} u(lam .)"""
    return rescale(u, ScalingLaw(MASS_PRESERVING, lam))


def _dilation_parts(agg: Aggregates):
    G = float(np.sum(agg.G))
    A = agg.weighted_interaction
    if G <= 0.0 or A <= 0.0:
        raise DegenerateField(
            "dilation root needs positive gradient and interaction aggregates",
            {"gradient": G, "interaction": A},
        )
    return G, A


def nehari_root_dilation_from(agg: Aggregates) -> float:
    N, p = agg.params.N, agg.params.p
    G, A = _dilation_parts(agg)
    ratio = (2.0 * G / N) / ((1.0 - 1.0 / p) * A)
    return ratio ** (1.0 / (N * (p - 1.0) - 2.0))


def nehari_root_dilation(u: FieldVector, params: SystemParams) -> float:
    """lam_0 with sum_j Q_j(u_lam0) = 0 for u_lam = lam^{N/2} u(lam .)"""
    return nehari_root_dilation_from(Aggregates.of(u, params))


def _amplitude_parts(agg: Aggregates, ab: AlphaBeta):
    N, p = agg.params.N, agg.params.p
    quadratic = 0.5 * float(
        np.sum(ab.gradient_rate(N) * agg.G + ab.mass_rate(N) * agg.M)
    )
    interaction = ab.interaction_rate(N, p) / (2.0 * p) * agg.weighted_interaction
    if quadratic <= 0.0 or interaction <= 0.0:
        raise DegenerateField(
            f"amplitude root for {ab.label()} needs positive quadratic and "
            "interaction parts",
            {"quadratic": quadratic, "interaction": interaction},
        )
    return quadratic, interaction


def nehari_root_amplitude_from(agg: Aggregates, ab: AlphaBeta) -> float:
    quadratic, interaction = _amplitude_parts(agg, ab)
    return (quadratic / interaction) ** (1.0 / (2.0 * agg.params.p - 2.0))


def nehari_root_amplitude(u: FieldVector, params: SystemParams, ab: AlphaBeta) -> float:
    """t_0 with K_{alpha,beta}(t_0 u) = 0; K(t u) = t^2 quad - t^{2p} inter"""
    return nehari_root_amplitude_from(Aggregates.of(u, params), ab)


def _bracketed_root(f, start: float = 1.0) -> float:
    lo, hi = start, start
    while f(lo) <= 0.0:
        lo /= 2.0
        if lo < 1e-300:
            raise DegenerateField("could not bracket a sign change from above")
    while f(hi) >= 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise DegenerateField("could not bracket a sign change from below")
    return bisect(f, lo, hi, xtol=BISECT_XTOL, maxiter=BISECT_MAXITER)


def nehari_root_dilation_bisect(agg: Aggregates) -> float:
    """Bisection fallback for the dilation root; sum Q_j(u_lam) > 0 for small lam"""
    _dilation_parts(agg)
    return _bracketed_root(
        lambda lam: float(
            np.sum(ScalingLaw(MASS_PRESERVING, lam).apply_to_aggregates(agg).Q_parts())
        )
    )


def nehari_root_amplitude_bisect(agg: Aggregates, ab: AlphaBeta) -> float:
    """Bisection fallback for the amplitude root; K(t u) > 0 for small t"""
    _amplitude_parts(agg, ab)
    return _bracketed_root(
        lambda t: ScalingLaw(AMPLITUDE, t)
        .apply_to_aggregates(agg)
        .constraint(ab, strict=False)
    )


def dilation_action_profile(agg: Aggregates, lambdas) -> Dict[str, np.ndarray]:
    """S(u_lam), S_j(u_lam), sum_j Q_j(u_lam) and d/dlam S(u_lam) from the power laws"""
    N, p = agg.params.N, agg.params.p
    lambdas = np.asarray(lambdas, dtype=float)
    G = float(np.sum(agg.G))
    A = agg.weighted_interaction
    scaled = [
        ScalingLaw(MASS_PRESERVING, lam).apply_to_aggregates(agg) for lam in lambdas
    ]
    return {
        "lam": lambdas,
        "S": np.array([s.action() for s in scaled]),
        "Sj": np.array([s.S_parts() for s in scaled]),
        "sumQ": np.array([float(np.sum(s.Q_parts())) for s in scaled]),
        "dS": lambdas * G
        - N * (p - 1.0) / (2.0 * p) * lambdas ** (N * (p - 1.0) - 1.0) * A,
    }
