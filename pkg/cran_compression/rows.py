"""
Result row and drop outcome type definitions.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import TypedDict

import numpy as np


class DropOutcome(TypedDict, total=False):
    """Per-MS rates of every scheme in one Monte-Carlo drop."""

    drop: int
    """Index of the drop within its sweep point."""

    seed: int
    """Seed the drop was generated from (base_seed + drop)."""

    rates: dict[str, float]
    """Per-MS rate of each scheme, in bits per channel use."""

    failures: dict[str, int]
    """Number of descriptions the cloud could not recover (robustness scenario)."""

    n_active: int
    """HBSs activated by the two-phase selection (selection scenario)."""


class ResultRow(TypedDict):
    """One line of the result table."""

    sweep_value: float
    scheme: str
    per_ms_rate_mean: float
    per_ms_rate_stderr: float
    n_drops: int


ROW_FIELDS: tuple[str, ...] = tuple(ResultRow.__annotations__)
"""Column order of the result CSV."""


def aggregate_rows(
    sweep_value: float,
    schemes: Sequence[str],
    outcomes: Sequence[DropOutcome],
) -> list[ResultRow]:
    """
    Reduce drop outcomes to one row per scheme.

    Outcomes are reduced in drop order, so the result does not depend on the
    order in which drops finished. The standard error is the sample standard
    deviation over sqrt(n); it is 0 for a single drop.
    """
    ordered = sorted(outcomes, key=lambda o: o.get("drop", 0))
    rows: list[ResultRow] = []
    for scheme in schemes:
        values = np.array([o["rates"][scheme] for o in ordered], dtype=np.float64)
        n = int(values.size)
        mean = float(np.mean(values)) if n else math.nan
        stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rows.append(
            ResultRow(
                sweep_value=float(sweep_value),
                scheme=scheme,
                per_ms_rate_mean=mean,
                per_ms_rate_stderr=stderr,
                n_drops=n,
            )
        )
    return rows
