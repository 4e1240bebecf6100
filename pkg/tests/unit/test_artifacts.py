"""
Unit tests for profile files, trace CSVs and run manifests
"""

import hashlib
import json
import os
import sys

import numpy as np
import pandas as pd
import pytest

# Add the nls-lab source directory to the path
sys.path.insert(
    0, os.path.join(os.path.dirname(__file__), "../../src/models/nls-lab/src")
)

from artifacts import (
    load_profile,
    save_profile,
    sha256_file,
    to_jsonable,
    write_manifest,
    write_trace,
)
from errors import ConfigError, MissingArtifact
from evolution import EvolutionTrace
from field_corpus import gaussian, random_corpus
from functionals import Aggregates
from lab_core import RadialGrid, masses


@pytest.fixture
def small_profile():
    grid = RadialGrid(N=2, n_r=64, R=8.0)
    return random_corpus(grid, 1, seed=2, m=2)[0].sample(grid)


class TestProfiles:
    def test_round_trip_is_bit_exact(self, tmp_path, small_profile, coupling):
        params = coupling(2)
        real = small_profile.with_components(np.abs(small_profile.components))
        path = save_profile(tmp_path / "gs.dat", real, params, {"level": 1.25})
        loaded = load_profile(path)
        assert np.array_equal(loaded.psi.components, real.components)
        assert np.array_equal(loaded.params.A, params.A)
        assert loaded.psi.grid.spec() == real.grid.spec()
        assert loaded.level == 1.25

    def test_header_is_json(self, tmp_path, reference_params):
        psi = gaussian(RadialGrid(N=2, n_r=16, R=4.0))
        path = save_profile(tmp_path / "gs.dat", psi, reference_params)
        lines = path.read_text().splitlines()
        assert lines[0] == "# N: 2"
        assert "# columns: r psi_1" in lines
        assert len([line for line in lines if not line.startswith("#")]) == 16

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingArtifact) as info:
            load_profile(tmp_path / "absent.dat")
        assert info.value.code == "MissingArtifact"

    def test_truncated_file(self, tmp_path, reference_params):
        psi = gaussian(RadialGrid(N=2, n_r=16, R=4.0))
        path = save_profile(tmp_path / "gs.dat", psi, reference_params)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(ConfigError):
            load_profile(path)

    def test_header_without_coupling(self, tmp_path, reference_params):
        psi = gaussian(RadialGrid(N=2, n_r=16, R=4.0))
        path = save_profile(tmp_path / "gs.dat", psi, reference_params)
        lines = [
            line
            for line in path.read_text().splitlines()
            if not line.startswith("# coupling")
        ]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ConfigError):
            load_profile(path)

    def test_box_states_rejected(self, tmp_path, unit_gaussian, reference_params):
        with pytest.raises(ValueError):
            save_profile(tmp_path / "gs.dat", unit_gaussian, reference_params)


class TestTraceAndManifest:
    def test_trace_columns(self, tmp_path, box_grid, coupling):
        params = coupling(2)
        u = gaussian(box_grid, amplitude=0.5, m=2)
        trace = EvolutionTrace(m=2)
        for t in (0.0, 0.1):
            trace.append(t, Aggregates.of(u, params), 1.0, "ok")
        path = write_trace(tmp_path / "trace.csv", trace)
        frame = pd.read_csv(path)
        assert list(frame.columns) == [
            "t",
            "M_1",
            "M_2",
            "E",
            "G_1",
            "G_2",
            "Q",
            "K_virial",
            "flag",
        ]
        assert frame["M_1"].iloc[0] == pytest.approx(masses(u)[0], rel=1e-15)
        assert list(frame["flag"]) == ["ok", "ok"]

    def test_manifest_hashes(self, tmp_path):
        artifact = tmp_path / "table.csv"
        artifact.write_text("a,b\n1,2\n")
        path = write_manifest(
            tmp_path / "manifest.json",
            "evolve",
            {"seed": 0},
            {"value": np.float64(0.5), "array": np.arange(3)},
            artifacts={"table": artifact},
        )
        manifest = json.loads(path.read_text())
        expected = hashlib.sha256(artifact.read_bytes()).hexdigest()
        assert manifest["artifacts"]["table"]["sha256"] == expected
        assert sha256_file(artifact) == expected
        assert manifest["results"] == {"value": 0.5, "array": [0, 1, 2]}
        assert manifest["inputs"] == {}

    def test_jsonable(self, tmp_path):
        value = to_jsonable({1: (np.int64(2), tmp_path)})
        assert value == {"1": [2, str(tmp_path)]}
