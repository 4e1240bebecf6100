"""
Potential-well classification and the global-versus-blow-up experiments
States below the ground-state level are split by the common sign of the K constraints
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from joblib import Parallel, delayed

from errors import ParameterError, SignDisagreement
from evolution import (
    BLOWUP,
    COMPLETED,
    EvolutionConfig,
    EvolutionTrace,
    embed_profile,
    evolve,
)
from functionals import Aggregates, AlphaBeta, default_test_set
from lab_core import FieldVector, RadialGrid, SystemParams, inner_products
from scaling import AMPLITUDE, MASS_PRESERVING, ScalingLaw, dilate

logger = structlog.get_logger(__name__)

A_PLUS = "A_plus"
A_MINUS = "A_minus"
ABOVE_WELL = "above_well"
BOUNDARY = "boundary"
MIXED = "sign_disagreement"

BOUNDARY_RESOLUTION = 1e-8
GRADIENT_BOUND_SLACK = 1e-2


@dataclass
class Classification:
    S_value: float
    m_ref: float
    K_values: Dict[str, float]
    verdict: str

    def as_dict(self) -> dict:
        return {
            "S_value": self.S_value,
            "m_ref": self.m_ref,
            "K_values": self.K_values,
            "verdict": self.verdict,
        }


def classify_aggregates(
    agg: Aggregates,
    m_ref: float,
    ab_set: Optional[Iterable[AlphaBeta]] = None,
    resolution: float = BOUNDARY_RESOLUTION,
) -> Classification:
    if m_ref <= 0:
        raise ParameterError("m_ref must be positive", {"m_ref": m_ref})
    ab_set = tuple(ab_set) if ab_set is not None else default_test_set(agg.params.N)
    S = agg.action()
    K = {ab.label(): agg.constraint(ab) for ab in ab_set}

    if abs(S - m_ref) <= resolution * m_ref:
        verdict = BOUNDARY
    elif S > m_ref:
        verdict = ABOVE_WELL
    elif all(value >= 0.0 for value in K.values()):
        verdict = A_PLUS
    elif all(value < 0.0 for value in K.values()):
        verdict = A_MINUS
    else:
        raise SignDisagreement(
            "K signs differ across the test set below the ground-state level",
            {"S": S, "m_ref": m_ref, "K": K},
        )
    return Classification(S_value=S, m_ref=m_ref, K_values=K, verdict=verdict)


def classify(
    u: FieldVector,
    params: SystemParams,
    m_ref: float,
    ab_set: Optional[Iterable[AlphaBeta]] = None,
    resolution: float = BOUNDARY_RESOLUTION,
) -> Classification:
    """A_plus, A_minus, above_well or boundary relative to the level m_ref"""
    return classify_aggregates(Aggregates.of(u, params), m_ref, ab_set, resolution)


def gradient_bound(params: SystemParams, m_ref: float) -> float:
    """Bound on sup_t sum ||grad u_j||^2 for runs inside A_plus

    K_{0,1} >= 0 with S < m gives sum G_j <= N m; at N = 2 this is (2 + N) m / 2.
    """
    N = params.N
    return max((2.0 + N) / 2.0, float(N)) * m_ref


@dataclass
class DichotomyReport:
    classification: Classification
    trace: EvolutionTrace
    row_verdicts: List[str]
    flipped: bool
    gradient_sup: float
    gradient_bound: Optional[float]
    certificate: Dict[str, object] = field(default_factory=dict)
    consistency: str = "FAIL"

    def as_dict(self) -> dict:
        return {
            "classification": self.classification.as_dict(),
            "trace": self.trace.summary(),
            "flipped": self.flipped,
            "gradient_sup": self.gradient_sup,
            "gradient_bound": self.gradient_bound,
            "certificate": self.certificate,
            "consistency": self.consistency,
        }


def dichotomy_experiment(
    u0: FieldVector,
    params: SystemParams,
    cfg: EvolutionConfig,
    m_ref: float,
    ab_set: Optional[Iterable[AlphaBeta]] = None,
) -> DichotomyReport:
    """Evolve a state from A_plus or A_minus and check the predicted fate

    The class is recomputed at every diagnostic row before blow-up detection and must
    never change.
    """
    ab_set = tuple(ab_set) if ab_set is not None else default_test_set(params.N)
    initial = classify(u0, params, m_ref, ab_set)
    if initial.verdict not in (A_PLUS, A_MINUS):
        raise ParameterError(
            "dichotomy experiment needs a state in A_plus or A_minus",
            {"verdict": initial.verdict, "S": initial.S_value, "m_ref": m_ref},
        )

    row_verdicts: List[str] = []

    def observe(t: float, u: FieldVector, agg: Aggregates):
        try:
            row_verdicts.append(classify_aggregates(agg, m_ref, ab_set).verdict)
        except SignDisagreement:
            row_verdicts.append(MIXED)

    trace = evolve(u0, params, cfg, observer=observe)
    times = np.array(trace.times)
    if trace.t_star is None:
        checked = np.ones(times.shape, dtype=bool)
    else:
        checked = times < trace.t_star
    flipped = any(
        verdict != initial.verdict
        for verdict, keep in zip(row_verdicts, checked)
        if keep
    )
    gradients = trace.total_gradient()
    gradient_sup = float(np.max(gradients))

    report = DichotomyReport(
        classification=initial,
        trace=trace,
        row_verdicts=row_verdicts,
        flipped=flipped,
        gradient_sup=gradient_sup,
        gradient_bound=None,
    )
    if initial.verdict == A_PLUS:
        bound = gradient_bound(params, m_ref)
        report.gradient_bound = bound
        fate = trace.verdict == COMPLETED
        bounded = gradient_sup <= bound * (1.0 + GRADIENT_BOUND_SLACK)
        report.certificate = {"completed": fate, "gradient_bounded": bounded}
        passed = fate and bounded
    else:
        K = np.array(trace.virial_K)[checked]
        delta = 0.5 * abs(trace.virial_K[0])
        negative = bool(np.all(K <= -delta))
        fate = trace.verdict == BLOWUP
        report.certificate = {
            "blowup_detected": fate,
            "delta": delta,
            "virial_K_max": float(np.max(K)),
            "virial_K_negative": negative,
        }
        passed = fate and negative

    report.consistency = "PASS" if passed and not flipped else "FAIL"
    logger.info(
        "dichotomy_finished",
        verdict=initial.verdict,
        evolution=trace.verdict,
        t_star=trace.t_star,
        consistency=report.consistency,
    )
    return report


def h1_distance(u: FieldVector, v: FieldVector) -> float:
    M, G = inner_products(u.with_components(u.components - v.components))
    return float(np.sqrt(np.sum(M) + np.sum(G)))


@dataclass
class InstabilityRow:
    lam: float
    h1_distance: float
    classification: Classification
    dichotomy: DichotomyReport
    exploratory: bool

    def as_dict(self) -> dict:
        return {
            "lam": self.lam,
            "h1_distance": self.h1_distance,
            "classification": self.classification.as_dict(),
            "dichotomy": self.dichotomy.as_dict(),
            "exploratory": self.exploratory,
        }


def _instability_row(
    ground: FieldVector,
    params: SystemParams,
    lam: float,
    cfg: EvolutionConfig,
    m_ref: float,
    ab_set: Tuple[AlphaBeta, ...],
) -> InstabilityRow:
    dilated = dilate(ground, lam)
    classification = classify(dilated, params, m_ref, ab_set)
    u0 = embed_profile(dilated, cfg.grid)
    report = dichotomy_experiment(u0, params, cfg, m_ref, ab_set)
    return InstabilityRow(
        lam=lam,
        h1_distance=h1_distance(dilated, ground),
        classification=classification,
        dichotomy=report,
        exploratory=lam <= 1.0,
    )


def instability_experiment(
    ground: FieldVector,
    params: SystemParams,
    lambdas: Sequence[float],
    cfg: EvolutionConfig,
    m_ref: float,
    exploratory: bool = False,
    jobs: int = 1,
    ab_set: Optional[Iterable[AlphaBeta]] = None,
) -> List[InstabilityRow]:
    """Dilations Psi_lam = lam^{N/2} Psi(lam .) of the ground state, each evolved

    lam > 1 is the strong-instability construction; lam <= 1 runs only in exploratory
    mode and is marked as such.
    """
    if not isinstance(ground.grid, RadialGrid):
        raise ParameterError("instability experiment expects a radial ground state")
    lambdas = [float(lam) for lam in lambdas]
    if not exploratory and any(lam <= 1.0 for lam in lambdas):
        raise ParameterError(
            "dilations lam <= 1 need exploratory mode", {"lambdas": lambdas}
        )
    ab_set = tuple(ab_set) if ab_set is not None else default_test_set(params.N)
    return list(
        Parallel(n_jobs=jobs)(
            delayed(_instability_row)(ground, params, lam, cfg, m_ref, ab_set)
            for lam in lambdas
        )
    )


def _weighted_aggregates(agg: Aggregates, weights: np.ndarray) -> Aggregates:
    p = agg.params.p
    return Aggregates(
        agg.params,
        agg.M * weights**2,
        agg.G * weights**2,
        agg.P * np.outer(weights, weights) ** p,
    )


def sign_agreement_corpus(
    ground: FieldVector,
    params: SystemParams,
    m_ref: float,
    count: int = 200,
    seed: int = 0,
    ab_set: Optional[Iterable[AlphaBeta]] = None,
) -> Dict[str, object]:
    """States t * (c_j Psi_j)_lam below the level; counts K-sign disagreements

    Amplitudes, dilations and per-component weights act exactly on the aggregates of
    Psi, so no resampling is involved.
    """
    ab_set = tuple(ab_set) if ab_set is not None else default_test_set(params.N)
    rng = np.random.default_rng(seed)
    base = Aggregates.of(ground, params)
    kept = disagreements = generated = 0
    verdicts = {A_PLUS: 0, A_MINUS: 0}
    while kept < count and generated < 50 * count:
        generated += 1
        t = rng.uniform(0.2, 1.5)
        lam = rng.uniform(0.5, 2.0)
        weights = np.ones(params.m)
        if params.m > 1:
            weights = rng.uniform(0.5, 1.5, size=params.m)
        agg = _weighted_aggregates(base, weights)
        agg = ScalingLaw(MASS_PRESERVING, lam).apply_to_aggregates(agg)
        agg = ScalingLaw(AMPLITUDE, t).apply_to_aggregates(agg)
        if agg.action() >= m_ref * (1.0 - BOUNDARY_RESOLUTION):
            continue
        kept += 1
        try:
            verdicts[classify_aggregates(agg, m_ref, ab_set).verdict] += 1
        except SignDisagreement:
            disagreements += 1
    logger.info(
        "sign_agreement_corpus",
        generated=generated,
        kept=kept,
        disagreements=disagreements,
        **verdicts,
    )
    return {
        "generated": generated,
        "kept": kept,
        "disagreements": disagreements,
        "verdicts": verdicts,
    }
