"""Tests for result files."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from cran_compression.config import ExperimentConfig
from cran_compression.experiment import ExperimentResult, run_experiment
from cran_compression.output_files import (
    default_output_path,
    metadata_path_for,
    read_rows,
    write_results,
)
from cran_compression.rows import ROW_FIELDS


@pytest.fixture
def result(tiny_config: ExperimentConfig) -> ExperimentResult:
    return run_experiment(tiny_config)


class TestWriteResults:
    """Tests for write_results."""

    def test_header(self, result: ExperimentResult, tmp_path: Path) -> None:
        """Test the fixed column order."""
        files = write_results(result, tmp_path / "out.csv")
        header = files.csv_path.read_text(encoding="utf-8").splitlines()[0]
        assert header == ",".join(ROW_FIELDS)
        assert header == "sweep_value,scheme,per_ms_rate_mean,per_ms_rate_stderr,n_drops"

    def test_rows_read_back(self, result: ExperimentResult, tmp_path: Path) -> None:
        """Test that written values are read back exactly."""
        files = write_results(result, tmp_path / "out.csv")
        assert read_rows(files.csv_path) == result.rows

    def test_rerun_is_bit_identical(
        self, tiny_config: ExperimentConfig, result: ExperimentResult, tmp_path: Path
    ) -> None:
        """Test that the same config writes the same bytes."""
        first = write_results(result, tmp_path / "a.csv")
        second = write_results(run_experiment(tiny_config), tmp_path / "b.csv")
        assert first.csv_path.read_bytes() == second.csv_path.read_bytes()
        assert first.metadata_path.read_bytes() == second.metadata_path.read_bytes()

    def test_metadata(self, result: ExperimentResult, tmp_path: Path) -> None:
        """Test the sidecar records how to reproduce the table."""
        files = write_results(result, tmp_path / "nested" / "out.csv")
        assert files.metadata_path == tmp_path / "nested" / "out.meta.json"
        meta = json.loads(files.metadata_path.read_text(encoding="utf-8"))
        assert meta["config_hash"] == result.config_hash
        assert meta["base_seed"] == 11
        assert meta["scenario"] == "compare_schemes"
        assert meta["sweep_axis"] == "omega"
        assert meta["config"]["n_drops"] == 3

    def test_default_path(
        self, result: ExperimentResult, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """Test that the CSV is named after the scenario by default."""
        monkeypatch.chdir(tmp_path)
        files = write_results(result)
        assert files.csv_path == Path("compare_schemes.csv")
        assert (tmp_path / "compare_schemes.csv").exists()
        assert (tmp_path / "compare_schemes.meta.json").exists()


class TestPaths:
    """Tests for the path helpers."""

    def test_default_output_path(self) -> None:
        """Test one file per scenario."""
        assert default_output_path("robustness", "results") == Path("results/robustness.csv")

    def test_metadata_path(self) -> None:
        """Test that the sidecar sits next to the CSV."""
        assert metadata_path_for("out/run.csv") == Path("out/run.meta.json")
