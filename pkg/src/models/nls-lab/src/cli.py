"""
Command-line front end for the NLS laboratory
Every command reads one YAML run config and writes its artifacts plus a JSON manifest
"""

import json
import time
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import click
import pandas as pd
from dotenv import load_dotenv

from artifacts import (
    FLOAT_FORMAT,
    LoadedProfile,
    load_profile,
    save_profile,
    to_jsonable,
    write_manifest,
    write_trace,
)
from errors import ConfigError, InsufficientRows, MissingArtifact, NLSLabError
from evolution import embed_profile, evolve, virial_check
from field_corpus import gaussian
from ground_state import mu_sweep, solve_ground_state
from lab_core import FieldVector, SystemParams
from observability import configure_logging, get_logger, timed_span
from potential_well import (
    A_MINUS,
    A_PLUS,
    classify,
    dichotomy_experiment,
    instability_experiment,
    sign_agreement_corpus,
)
from property_checks import SUITES, run_suites
from run_config import RunConfig, load_run_config
from scaling import dilate

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_MISSING_ARTIFACT = 2
EXIT_CONFIG = 3

PROFILE_FILE = "ground_state.dat"
TRACE_FILE = "trace.csv"
MANIFEST_FILE = "manifest.json"

CommandBody = Callable[[RunConfig, Path, int], Tuple[dict, dict, dict]]


def exit_code_for(error: NLSLabError) -> int:
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, MissingArtifact):
        return EXIT_MISSING_ARTIFACT
    return EXIT_FAILURE


def _echo(payload: Dict[str, Any]):
    click.echo(json.dumps(to_jsonable(payload), indent=2, sort_keys=True))


def _run(
    command: str, config_path: str, out: Optional[str], jobs: int, body: CommandBody
):
    """Load the config, run the body and map library errors onto exit codes"""
    log = get_logger()
    start = time.perf_counter()
    code = EXIT_OK
    cfg: Optional[RunConfig] = None
    out_dir: Optional[Path] = None
    try:
        cfg = load_run_config(config_path)
        out_dir = Path(out or cfg.output.directory) / (cfg.output.name or command)
        with timed_span("command", command=command, config=config_path):
            results, artifacts, inputs = body(cfg, out_dir, jobs)
        manifest = write_manifest(
            out_dir / MANIFEST_FILE,
            command,
            cfg.as_dict(),
            results,
            artifacts,
            inputs,
        )
        _echo({"command": command, "results": results, "manifest": str(manifest)})
    except NLSLabError as exc:
        code = exit_code_for(exc)
        log.log_error(exc, {"command": command, "config": config_path})
        if cfg is not None and out_dir is not None:
            error = {"error": exc.to_dict()}
            write_manifest(out_dir / MANIFEST_FILE, command, cfg.as_dict(), error)
        _echo({"command": command, "error": exc.to_dict()})

    duration = time.perf_counter() - start
    log.log_run_completed(command, code, duration=duration)
    log.log_slow_run(duration, threshold=600.0, name=command)
    click.get_current_context().exit(code)


def run_options(func):
    """--config, --out and --jobs shared by every experiment command"""
    func = click.option(
        "--jobs", default=1, show_default=True, type=click.IntRange(min=1)
    )(func)
    func = click.option("--out", default=None, help="Output directory")(func)
    return click.option(
        "--config", "config_path", required=True, help="YAML run config"
    )(func)


def _load_ground_state(
    cfg: RunConfig, params: SystemParams
) -> Tuple[LoadedProfile, Path]:
    if cfg.experiment.ground_state is None:
        raise ConfigError("experiment.ground_state must name a ground-state file")
    path = Path(cfg.experiment.ground_state)
    loaded = load_profile(path)
    same = (
        loaded.params.N == params.N
        and loaded.params.p == params.p
        and loaded.params.m == params.m
        and (loaded.params.A == params.A).all()
    )
    if not same:
        raise ConfigError(
            "ground-state file was computed for different parameters",
            {"file": loaded.params.as_dict(), "config": params.as_dict()},
        )
    return loaded, path


def _initial_state(
    cfg: RunConfig, params: SystemParams, loaded: Optional[LoadedProfile]
) -> FieldVector:
    initial = cfg.experiment.initial
    grid = cfg.cartesian_grid()
    if initial.kind == "gaussian":
        return gaussian(grid, initial.amplitude, initial.width, params.m)
    profile = loaded.psi
    if initial.dilation != 1.0:
        profile = dilate(profile, initial.dilation)
    return embed_profile(profile.scaled(initial.scale), grid)


def _ground(cfg: RunConfig, out_dir: Path, jobs: int):
    params = cfg.system_params()
    result = solve_ground_state(params, cfg.ground_state_config())
    summary = result.summary()
    header = dict(summary, config=cfg.as_dict())
    profile = save_profile(out_dir / PROFILE_FILE, result.psi, params, header)
    summary["sign_agreement"] = sign_agreement_corpus(
        result.psi,
        params,
        result.level,
        count=cfg.experiment.corpus_size,
        seed=cfg.seed,
        ab_set=cfg.test_set(),
    )
    return summary, {"profile": profile}, {}


def _evolve(cfg: RunConfig, out_dir: Path, jobs: int):
    params = cfg.system_params()
    loaded, inputs = None, {}
    if cfg.experiment.initial.kind == "ground_state":
        loaded, path = _load_ground_state(cfg, params)
        inputs["ground_state"] = path
    u0 = _initial_state(cfg, params, loaded)
    trace = evolve(u0, params, cfg.evolution_config())
    trace_path = write_trace(out_dir / TRACE_FILE, trace)
    results: Dict[str, Any] = {"trace": trace.summary()}
    try:
        virial = virial_check(trace, params)
        results["virial"] = {
            key: virial[key]
            for key in ("max_defect", "max_defect_all_rows", "delocalized_rows", "rows")
        }
    except InsufficientRows as exc:
        results["virial"] = {"error": exc.to_dict()}
    return results, {"trace": trace_path}, inputs


def _classify(cfg: RunConfig, out_dir: Path, jobs: int, static: bool = False):
    params = cfg.system_params()
    loaded, path = _load_ground_state(cfg, params)
    u0 = _initial_state(cfg, params, loaded)
    ab_set = cfg.test_set()
    classification = classify(u0, params, loaded.level, ab_set)
    results: Dict[str, Any] = {
        "m_ref": loaded.level,
        "classification": classification.as_dict(),
        "verdict": classification.verdict,
    }
    artifacts = {}
    if not static and classification.verdict in (A_PLUS, A_MINUS):
        report = dichotomy_experiment(
            u0, params, cfg.evolution_config(), loaded.level, ab_set
        )
        results["dichotomy"] = report.as_dict()
        results["consistency"] = report.consistency
        artifacts["trace"] = write_trace(out_dir / TRACE_FILE, report.trace)
    return results, artifacts, {"ground_state": path}


def _instability(cfg: RunConfig, out_dir: Path, jobs: int):
    params = cfg.system_params()
    loaded, path = _load_ground_state(cfg, params)
    rows = instability_experiment(
        loaded.psi,
        params,
        cfg.experiment.lambdas,
        cfg.evolution_config(),
        loaded.level,
        exploratory=cfg.experiment.exploratory,
        jobs=jobs,
        ab_set=cfg.test_set(),
    )
    artifacts = {}
    for row in rows:
        name = f"trace_lam_{row.lam:g}"
        artifacts[name] = write_trace(out_dir / f"{name}.csv", row.dichotomy.trace)
    results = {
        "m_ref": loaded.level,
        "rows": [row.as_dict() for row in rows],
        "verdicts": {
            f"{row.lam:g}": {
                "classification": row.classification.verdict,
                "evolution": row.dichotomy.trace.verdict,
                "consistency": row.dichotomy.consistency,
            }
            for row in rows
        },
    }
    return results, artifacts, {"ground_state": path}


def _sweep_mu(cfg: RunConfig, out_dir: Path, jobs: int):
    params = cfg.system_params()
    rows = mu_sweep(params, cfg.experiment.mus, cfg.ground_state_config(), jobs=jobs)
    table = pd.DataFrame(
        [
            {
                "mu": row.mu,
                "selected": row.selected,
                "seed": row.seed,
                "level": row.level,
                "min_mass_fraction": row.min_mass_fraction,
                **{f"M_{j + 1}": mass for j, mass in enumerate(row.component_masses)},
            }
            for row in rows
        ]
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / "mu_sweep.csv"
    table.to_csv(table_path, index=False, float_format=FLOAT_FORMAT)
    return {"rows": [row.as_dict() for row in rows]}, {"table": table_path}, {}


@click.group()
@click.option("--log-level", default=None, help="Overrides LOG_LEVEL")
def cli(log_level: Optional[str]):
    """Coupled nonlinear Schrodinger laboratory"""
    load_dotenv()
    configure_logging(log_level)


@cli.command()
@run_options
def ground(config_path: str, out: Optional[str], jobs: int):
    """Compute a ground state and save its radial profile"""
    _run("ground", config_path, out, jobs, _ground)


@cli.command("evolve")
@run_options
def evolve_cmd(config_path: str, out: Optional[str], jobs: int):
    """Evolve an initial state and write its diagnostic trace"""
    _run("evolve", config_path, out, jobs, _evolve)


@cli.command("classify")
@run_options
@click.option("--static", is_flag=True, help="Classify without evolving")
def classify_cmd(config_path: str, out: Optional[str], jobs: int, static: bool):
    """Place an initial state in the potential well and check its fate"""

    def body(cfg, out_dir, n_jobs):
        return _classify(cfg, out_dir, n_jobs, static=static)

    _run("classify", config_path, out, jobs, body)


@cli.command()
@run_options
def instability(config_path: str, out: Optional[str], jobs: int):
    """Evolve dilations of the ground state"""
    _run("instability", config_path, out, jobs, _instability)


@cli.command("sweep-mu")
@run_options
def sweep_mu(config_path: str, out: Optional[str], jobs: int):
    """Vector against semitrivial ground states across coupling strengths"""
    _run("sweep-mu", config_path, out, jobs, _sweep_mu)


@cli.command()
@click.option("--config", "config_path", default=None, help="YAML run config")
@click.option("--seed", default=None, type=int, help="Overrides the config seed")
@click.option("--out", default=None, help="Write a JSON report into this directory")
def check(config_path: Optional[str], seed: Optional[int], out: Optional[str]):
    """Run the property suites"""
    log = get_logger()
    start = time.perf_counter()
    if config_path is not None:
        try:
            cfg = load_run_config(config_path)
        except ConfigError as exc:
            log.log_error(exc, {"command": "check", "config": config_path})
            _echo({"command": "check", "error": exc.to_dict()})
            click.get_current_context().exit(EXIT_CONFIG)
        seed = cfg.seed if seed is None else seed
    seed = 0 if seed is None else seed
    results = run_suites(seed)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        click.echo(f"{status} {result.name} {json.dumps(to_jsonable(result.details))}")
    failed = [result.name for result in results if not result.passed]
    click.echo(f"suites: {len(SUITES)} passed: {len(results) - len(failed)}")
    if failed:
        click.echo(f"failed: {', '.join(failed)}")
    if out is not None:
        report = Path(out) / "check.json"
        report.parent.mkdir(parents=True, exist_ok=True)
        with open(report, "w") as f:
            payload = {"seed": seed, "suites": [r.as_dict() for r in results]}
            json.dump(to_jsonable(payload), f, indent=2, sort_keys=True)
    code = EXIT_FAILURE if failed else EXIT_OK
    log.log_run_completed("check", code, duration=time.perf_counter() - start)
    click.get_current_context().exit(code)


if __name__ == "__main__":
    cli()
