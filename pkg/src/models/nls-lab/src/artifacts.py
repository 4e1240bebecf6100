"""
Run artifacts: ground-state profile files, trace CSVs and JSON manifests
All floats are written with 17 significant digits so files reload bit-exactly
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np

from errors import ConfigError, MissingArtifact
from evolution import EvolutionTrace
from lab_core import (
    FieldVector,
    RadialGrid,
    SystemParams,
    grid_from_spec,
    validate_params,
)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"
COLUMNS_KEY = "columns"


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars and arrays for json.dump"""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class LoadedProfile:
    params: SystemParams
    psi: FieldVector
    header: Dict[str, Any]

    @property
    def level(self) -> float:
        return float(self.header["level"])


def save_profile(
    path: PathLike,
    psi: FieldVector,
    params: SystemParams,
    header: Optional[Dict[str, Any]] = None,
) -> Path:
    """Header lines '# key: <json>', then '# columns: ...', then one row per node"""
    if not isinstance(psi.grid, RadialGrid):
        raise ValueError("profile files hold radial states")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = {
        "N": params.N,
        "p": params.p,
        "m": params.m,
        "coupling": params.A.tolist(),
        "grid": psi.grid.spec(),
    }
    fields.update(to_jsonable(header or {}))
    columns = ["r"] + [f"psi_{j + 1}" for j in range(psi.m)]

    lines = [f"# {key}: {json.dumps(fields[key], sort_keys=True)}" for key in fields]
    lines.append(f"# {COLUMNS_KEY}: {' '.join(columns)}")
    table = np.column_stack([psi.grid.r] + [np.real(c) for c in psi.components])
    for row in table:
        lines.append(" ".join(FLOAT_FORMAT % value for value in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_profile(path: PathLike) -> LoadedProfile:
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(
            f"ground-state file not found: {path}", {"path": str(path)}
        )

    header: Dict[str, Any] = {}
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            key = key.strip()
            if key != COLUMNS_KEY:
                header[key] = json.loads(value)
        elif line.strip():
            rows.append([float(token) for token in line.split()])

    try:
        raw = {key: header[key] for key in ("N", "p", "m")}
        raw["A"] = header["coupling"]
        params = validate_params(raw)
        grid = grid_from_spec(header["grid"])
    except KeyError as exc:
        raise ConfigError(
            f"profile header lacks {exc.args[0]!r}", {"path": str(path)}
        ) from exc

    table = np.array(rows)
    if table.shape != (grid.n_r, params.m + 1) or not np.array_equal(
        table[:, 0], grid.r
    ):
        raise ConfigError(
            "profile rows do not match the radial grid in the header",
            {"path": str(path), "shape": list(table.shape)},
        )
    psi = FieldVector(grid, table[:, 1:].T)
    return LoadedProfile(params=params, psi=psi, header=header)


def write_trace(path: PathLike, trace: EvolutionTrace) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_manifest(
    path: PathLike,
    command: str,
    config: Dict[str, Any],
    results: Dict[str, Any],
    artifacts: Optional[Dict[str, PathLike]] = None,
    inputs: Optional[Dict[str, PathLike]] = None,
) -> Path:
    """One JSON document per run with the config and SHA-256 of every file involved"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "config": config,
        "results": results,
        "artifacts": {
            name: {"path": str(p), "sha256": sha256_file(p)}
            for name, p in (artifacts or {}).items()
        },
        "inputs": {
            name: {"path": str(p), "sha256": sha256_file(p)}
            for name, p in (inputs or {}).items()
        },
    }
    with open(path, "w") as f:
        json.dump(to_jsonable(payload), f, indent=2, sort_keys=True)
    return path
