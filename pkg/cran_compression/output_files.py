"""
Result file utilities.

An experiment writes one CSV table plus a JSON sidecar that records the
config hash and seed needed to reproduce it.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .experiment import ExperimentResult
from .rows import ROW_FIELDS, ResultRow

logger = logging.getLogger(__name__)

METADATA_SUFFIX = ".meta.json"


@dataclass
class OutputFiles:
    """Paths written for one experiment."""

    csv_path: Path
    metadata_path: Path


def default_output_path(scenario: str, directory: str | Path = ".") -> Path:
    """One file per scenario: `<directory>/<scenario>.csv`."""
    return Path(directory) / f"{scenario}.csv"


def metadata_path_for(csv_path: str | Path) -> Path:
    path = Path(csv_path)
    return path.with_name(path.stem + METADATA_SUFFIX)


def write_rows(rows: list[ResultRow], path: str | Path) -> Path:
    """
    Write result rows as CSV with the fixed header.

    Floats are written with `repr`, so identical results give identical bytes.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(ROW_FIELDS), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(dict(row))
    return target


def read_rows(path: str | Path) -> list[ResultRow]:
    """Read a result CSV written by `write_rows`."""
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return [
            ResultRow(
                sweep_value=float(record["sweep_value"]),
                scheme=record["scheme"],
                per_ms_rate_mean=float(record["per_ms_rate_mean"]),
                per_ms_rate_stderr=float(record["per_ms_rate_stderr"]),
                n_drops=int(record["n_drops"]),
            )
            for record in csv.DictReader(handle)
        ]


def build_metadata(result: ExperimentResult) -> dict[str, Any]:
    cfg = result.config
    return {
        "config_hash": result.config_hash,
        "base_seed": cfg.get("base_seed", 0),
        "scenario": cfg.get("scenario"),
        "n_drops": cfg.get("n_drops"),
        "sweep_axis": cfg.get("sweep_axis"),
        "config": cfg,
    }


def write_results(result: ExperimentResult, path: str | Path | None = None) -> OutputFiles:
    """
    Write the CSV table and its metadata sidecar.

    Args:
        result: Completed experiment.
        path: CSV path; defaults to `<scenario>.csv` in the working directory.

    Returns:
        OutputFiles with both paths.
    """
    csv_path = Path(path) if path is not None else default_output_path(
        str(result.config.get("scenario", "experiment"))
    )
    write_rows(result.rows, csv_path)
    meta_path = metadata_path_for(csv_path)
    meta_path.write_text(
        json.dumps(build_metadata(result), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    logger.info("Wrote %s and %s", csv_path, meta_path)
    return OutputFiles(csv_path=csv_path, metadata_path=meta_path)
