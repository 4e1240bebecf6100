"""
Scalar functionals of a field vector
Mass, energy, action, the K constraint family, H, T, Q_j, S_j and the GN ratio
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from errors import DegenerateAlphaBeta, InadmissibleAlphaBeta, ZeroField
from lab_core import FieldVector, SystemParams, gradient_norms, masses

ADMISSIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class AlphaBeta:
    """Parameters of the scaling family u -> e^{alpha l} u(e^{-beta l} .)"""

    alpha: float
    beta: float

    def mass_rate(self, N: int) -> float:
        return 2.0 * self.alpha + N * self.beta

    def gradient_rate(self, N: int) -> float:
        return 2.0 * self.alpha + (N - 2) * self.beta

    def interaction_rate(self, N: int, p: float) -> float:
        return 2.0 * p * self.alpha + N * self.beta

    def is_admissible(self, N: int) -> bool:
        """(alpha, beta) in R_+^2 minus the origin, or exactly (1, -2/N)"""
        if self.alpha >= 0 and self.beta >= 0:
            return self.alpha > 0 or self.beta > 0
        return (
            abs(self.alpha - 1.0) <= ADMISSIBILITY_TOL
            and abs(self.beta + 2.0 / N) <= ADMISSIBILITY_TOL
        )

    def label(self) -> str:
        return f"({self.alpha:g},{self.beta:g})"

    @classmethod
    def virial(cls, N: int) -> "AlphaBeta":
        return cls(1.0, -2.0 / N)


def default_test_set(N: int) -> Tuple[AlphaBeta, ...]:
    return (
        AlphaBeta(1.0, 0.0),
        AlphaBeta(0.0, 1.0),
        AlphaBeta(1.0, 1.0),
        AlphaBeta.virial(N),
    )


def interaction_matrix(u: FieldVector, params: SystemParams) -> np.ndarray:
    """P_jk = int |u_j|^p |u_k|^p dx, filled from j <= k so it is exactly symmetric"""
    u.check_finite()
    powered = np.abs(u.components) ** params.p
    P = np.zeros((u.m, u.m))
    for j in range(u.m):
        for k in range(j, u.m):
            P[j, k] = float(u.grid.integrate(powered[j] * powered[k]))
            P[k, j] = P[j, k]
    return P


@dataclass(frozen=True)
class Aggregates:
    """Per-component masses, gradient norms and the interaction matrix of one state

    Every functional is an explicit combination of these numbers, so scaling laws
    can be applied to the aggregates directly.
    """

    params: SystemParams
    M: np.ndarray
    G: np.ndarray
    P: np.ndarray

    @classmethod
    def of(cls, u: FieldVector, params: SystemParams, workers: int = 1):
        u.check_finite()
        return cls(
            params=params,
            M=masses(u),
            G=gradient_norms(u, workers=workers),
            P=interaction_matrix(u, params),
        )

    @property
    def weighted_interaction(self) -> float:
        """sum_{j,k} a_jk P_jk"""
        return float(np.sum(self.params.A * self.P))

    def scaled(self, mass: float, gradient: float, interaction: float) -> "Aggregates":
        return Aggregates(
            self.params, self.M * mass, self.G * gradient, self.P * interaction
        )

    def energy(self) -> float:
        p = self.params.p
        return 0.5 * float(np.sum(self.G)) - self.weighted_interaction / (2.0 * p)

    def action(self) -> float:
        p = self.params.p
        return (
            0.5 * float(np.sum(self.G + self.M)) - self.weighted_interaction / (2.0 * p)
        )

    def constraint(self, ab: AlphaBeta, strict: bool = True) -> float:
        N, p = self.params.N, self.params.p
        if strict and not ab.is_admissible(N):
            raise InadmissibleAlphaBeta(
                f"(alpha, beta) = {ab.label()} is not admissible for N={N}",
                {"alpha": ab.alpha, "beta": ab.beta, "N": N},
            )
        quadratic = 0.5 * float(
            np.sum(ab.gradient_rate(N) * self.G + ab.mass_rate(N) * self.M)
        )
        return quadratic - ab.interaction_rate(N, p) / (2.0 * p) * (
            self.weighted_interaction
        )

    def functional_H(self, ab: AlphaBeta) -> float:
        N, p = self.params.N, self.params.p
        rate = ab.mass_rate(N)
        if abs(rate) <= ADMISSIBILITY_TOL:
            raise DegenerateAlphaBeta(
                f"2 alpha + N beta vanishes at {ab.label()}; use functional_T",
                {"alpha": ab.alpha, "beta": ab.beta, "N": N},
            )
        bracket = ab.beta * float(np.sum(self.G)) + ab.alpha * (
            1.0 - 1.0 / p
        ) * self.weighted_interaction
        return bracket / rate

    def functional_T(self) -> float:
        N, p = self.params.N, self.params.p
        coefficient = N / 8.0 * (1.0 - 1.0 / p - 2.0 / (N * p))
        return 0.5 * float(np.sum(self.M)) + coefficient * self.weighted_interaction

    def row_interaction(self) -> np.ndarray:
        """sum_k a_jk P_jk for every j"""
        return np.sum(self.params.A * self.P, axis=1)

    def Q_parts(self) -> np.ndarray:
        N, p = self.params.N, self.params.p
        return 2.0 / N * self.G - (1.0 - 1.0 / p) * self.row_interaction()

    def S_parts(self) -> np.ndarray:
        p = self.params.p
        return 0.5 * (self.G + self.M) - self.row_interaction() / (2.0 * p)

    def virial_rhs(self) -> float:
        """sum ||grad u_j||^2 - N(p-1)/(2p) sum a_jk P_jk, the value of Q''/8"""
        N, p = self.params.N, self.params.p
        return float(np.sum(self.G)) - N * (p - 1.0) / (2.0 * p) * (
            self.weighted_interaction
        )

    def gn_ratio(self) -> float:
        N, p = self.params.N, self.params.p
        total_G = float(np.sum(self.G))
        total_M = float(np.sum(self.M))
        if total_G <= 0.0 or total_M <= 0.0:
            raise ZeroField("Gagliardo-Nirenberg ratio needs a nonzero field")
        denominator = total_G ** (N * (p - 1.0) / 2.0) * total_M ** (
            (N - p * (N - 2.0)) / 2.0
        )
        return float(np.sum(self.P)) / denominator


@dataclass
class FunctionalReport:
    """All scalar functionals of one state from a single quadrature pass"""

    M: np.ndarray
    G: np.ndarray
    P: np.ndarray
    E: float
    S: float
    T: float
    Qj: np.ndarray
    Sj: np.ndarray
    K: Dict[AlphaBeta, float] = field(default_factory=dict)
    H: Dict[AlphaBeta, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "M": self.M.tolist(),
            "G": self.G.tolist(),
            "P": self.P.tolist(),
            "E": self.E,
            "S": self.S,
            "T": self.T,
            "Qj": self.Qj.tolist(),
            "Sj": self.Sj.tolist(),
            "K": {ab.label(): v for ab, v in self.K.items()},
            "H": {ab.label(): v for ab, v in self.H.items()},
        }


def functional_report(
    u: FieldVector,
    params: SystemParams,
    ab_set: Optional[Iterable[AlphaBeta]] = None,
    workers: int = 1,
) -> FunctionalReport:
    agg = Aggregates.of(u, params, workers=workers)
    return report_from_aggregates(agg, ab_set)


def report_from_aggregates(
    agg: Aggregates, ab_set: Optional[Iterable[AlphaBeta]] = None
) -> FunctionalReport:
    ab_set = tuple(ab_set) if ab_set is not None else default_test_set(agg.params.N)
    K = {ab: agg.constraint(ab) for ab in ab_set}
    H = {
        ab: agg.functional_H(ab)
        for ab in ab_set
        if abs(ab.mass_rate(agg.params.N)) > ADMISSIBILITY_TOL
    }
    return FunctionalReport(
        M=agg.M,
        G=agg.G,
        P=agg.P,
        E=agg.energy(),
        S=agg.action(),
        T=agg.functional_T(),
        Qj=agg.Q_parts(),
        Sj=agg.S_parts(),
        K=K,
        H=H,
    )


def energy(u: FieldVector, params: SystemParams) -> float:
    return Aggregates.of(u, params).energy()


def action(u: FieldVector, params: SystemParams) -> float:
    return Aggregates.of(u, params).action()


def constraint_K(u: FieldVector, params: SystemParams, ab: AlphaBeta) -> float:
    return Aggregates.of(u, params).constraint(ab)


def functional_H(u: FieldVector, params: SystemParams, ab: AlphaBeta) -> float:
    return Aggregates.of(u, params).functional_H(ab)


def functional_T(u: FieldVector, params: SystemParams) -> float:
    return Aggregates.of(u, params).functional_T()


def gn_ratio(u: FieldVector, params: SystemParams) -> float:
    return Aggregates.of(u, params).gn_ratio()


def negative_constraint_levels(
    u: FieldVector, params: SystemParams
) -> Dict[str, float]:
    """Values bounding the ground-state level from above on K < 0 states

    m <= H_{alpha,beta}(u) whenever K_{alpha,beta}(u) <= 0 with (alpha, beta) in R_+^2
    and (N, alpha) != (2, 0), and m <= S(u) - (N/4) K_{1,-2/N}(u) whenever
    K_{1,-2/N}(u) <= 0. The second bound uses the S - (N/4) K form, which equals S on
    the constraint set; the expanded T display undercounts its interaction term.
    """
    agg = Aggregates.of(u, params)
    N = params.N
    levels = {}
    for ab in default_test_set(N):
        if ab.alpha < 0 or ab.beta < 0 or (N == 2 and ab.alpha == 0):
            continue
        if agg.constraint(ab) <= 0:
            levels[f"H{ab.label()}"] = agg.functional_H(ab)
    virial = agg.constraint(AlphaBeta.virial(N))
    if virial <= 0:
        levels["S-N/4K"] = agg.action() - N / 4.0 * virial
    return levels
