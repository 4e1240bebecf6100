"""
Run configuration for laboratory commands
YAML files validated by pydantic; unknown keys are rejected
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import ConfigError
from evolution import EvolutionConfig
from functionals import AlphaBeta, default_test_set
from ground_state import GroundStateConfig
from lab_core import CartesianGrid, RadialGrid, SystemParams, validate_params


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSection(Section):
    N: int = 2
    p: float = 2.5
    m: int = 1
    coupling: List[List[float]] = Field(default_factory=lambda: [[1.0]])


class CartesianSection(Section):
    n: int = Field(256, ge=4)
    L: float = Field(16.0, gt=0)


class RadialSection(Section):
    n_r: int = Field(4096, ge=3)
    R: float = Field(16.0, gt=0)


class GridSection(Section):
    cartesian: CartesianSection = Field(default_factory=CartesianSection)
    radial: RadialSection = Field(default_factory=RadialSection)


class SolverSection(Section):
    tau: float = Field(0.02, gt=0)
    tolerance: float = Field(1e-8, gt=0)
    max_iterations: int = Field(20000, ge=1)
    flow_tolerance: float = Field(1e-9, gt=0)
    newton_max_iterations: int = Field(30, ge=1)
    omega_window: int = Field(20, ge=1)
    seed_widths: Optional[List[float]] = None
    seed_amplitude: float = Field(1.0, gt=0)
    semitrivial: bool = False


class EvolutionSection(Section):
    dt: float = Field(1e-3, gt=0)
    t_end: float = Field(5.0, gt=0)
    stride: int = Field(10, ge=1)
    gamma_blow: float = Field(100.0, gt=1)
    energy_drift_max: float = Field(1e-3, gt=0)
    localization_tol: float = Field(1e-6, gt=0)
    workers: int = Field(1, ge=1)


class InitialState(Section):
    """Initial data: a centered Gaussian or the scaled, dilated ground state"""

    kind: Literal["gaussian", "ground_state"] = "ground_state"
    amplitude: float = 0.1
    width: float = Field(1.0, gt=0)
    scale: float = 1.0
    dilation: float = Field(1.0, gt=0)


class ExperimentSection(Section):
    ground_state: Optional[str] = None
    initial: InitialState = Field(default_factory=InitialState)
    lambdas: List[float] = Field(default_factory=lambda: [1.2, 1.1, 1.05, 1.01])
    exploratory: bool = False
    mus: List[float] = Field(default_factory=lambda: [0.1, 1.0, 10.0])
    test_set: Optional[List[Tuple[float, float]]] = None
    corpus_size: int = Field(200, ge=1)


class OutputSection(Section):
    directory: str = "runs"
    name: Optional[str] = None


class RunConfig(Section):
    problem: ProblemSection = Field(default_factory=ProblemSection)
    grid: GridSection = Field(default_factory=GridSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    evolution: EvolutionSection = Field(default_factory=EvolutionSection)
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    output: OutputSection = Field(default_factory=OutputSection)
    seed: int = 0

    def system_params(self) -> SystemParams:
        return validate_params(
            {
                "N": self.problem.N,
                "p": self.problem.p,
                "m": self.problem.m,
                "A": self.problem.coupling,
            }
        )

    def radial_grid(self) -> RadialGrid:
        spec = self.grid.radial
        return RadialGrid(N=self.problem.N, n_r=spec.n_r, R=spec.R)

    def cartesian_grid(self) -> CartesianGrid:
        spec = self.grid.cartesian
        return CartesianGrid(N=self.problem.N, n=spec.n, L=spec.L)

    def ground_state_config(self) -> GroundStateConfig:
        try:
            return GroundStateConfig(
                grid=self.radial_grid(), **self.solver.model_dump()
            )
        except ValueError as exc:
            raise ConfigError(f"invalid solver section: {exc}") from exc

    def evolution_config(self) -> EvolutionConfig:
        try:
            return EvolutionConfig(
                grid=self.cartesian_grid(), **self.evolution.model_dump()
            )
        except ValueError as exc:
            raise ConfigError(f"invalid evolution section: {exc}") from exc

    def test_set(self) -> Tuple[AlphaBeta, ...]:
        if self.experiment.test_set is None:
            return default_test_set(self.problem.N)
        return tuple(AlphaBeta(a, b) for a, b in self.experiment.test_set)

    def as_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def expand_dotted(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Turn {'problem.N': 2} into {'problem': {'N': 2}}, merging with nested sections"""
    expanded: Dict[str, Any] = {}
    for key, value in raw.items():
        parts = str(key).split(".")
        target = expanded
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"key {key!r} conflicts with a scalar entry")
            target = node
        leaf = parts[-1]
        if isinstance(value, dict):
            value = expand_dotted(value)
            existing = target.get(leaf)
            if isinstance(existing, dict):
                existing.update(value)
                continue
        elif leaf in target:
            raise ConfigError(f"key {key!r} is given twice")
        target[leaf] = value
    return expanded


def parse_run_config(raw: Optional[Dict[str, Any]]) -> RunConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("run config must be a mapping")
    try:
        return RunConfig.model_validate(expand_dotted(raw))
    except ValidationError as exc:
        problems = [
            f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in exc.errors()
        ]
        raise ConfigError("invalid run config", {"errors": problems}) from exc


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", {"path": str(path)})
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(
            f"config is not valid YAML: {exc}", {"path": str(path)}
        ) from exc
    return parse_run_config(raw)
