"""
Closed vocabularies used by the configuration and the experiment runner.
"""

from __future__ import annotations

from enum import StrEnum


class BsRole(StrEnum):
    """Role of a base station in the topology."""

    MBS = "mbs"
    HBS = "hbs"


class MmseTarget(StrEnum):
    """Reconstruction target of an MMSE compressor."""

    DIRECT = "direct"
    INDIRECT = "indirect"


class Scenario(StrEnum):
    """Numerical study run by an experiment."""

    COMPARE_SCHEMES = "compare_schemes"
    ROBUSTNESS = "robustness"
    SELECTION = "selection"


class CompressionScheme(StrEnum):
    """Per-BS compression design used inside the greedy ordering."""

    MAXRATE_SI = "maxrate_si"
    MAXRATE_NSI = "maxrate_nsi"
    MMSE_DIRECT_SI = "mmse_direct_si"
    MMSE_DIRECT_NSI = "mmse_direct_nsi"
    MMSE_INDIRECT_SI = "mmse_indirect_si"
    MMSE_INDIRECT_NSI = "mmse_indirect_nsi"

    @property
    def uses_side_info(self) -> bool:
        return self.value.endswith("_si") and not self.value.endswith("_nsi")

    @property
    def is_mmse(self) -> bool:
        return self.value.startswith("mmse_")

    @property
    def mmse_target(self) -> MmseTarget | None:
        if not self.is_mmse:
            return None
        return MmseTarget.INDIRECT if "_indirect_" in self.value else MmseTarget.DIRECT


class RobustnessScheme(StrEnum):
    """Pipelines compared when the conditional covariance is uncertain."""

    PERFECT_SI = "perfect_si"
    ROBUST = "robust"
    IMPERFECT_SI = "imperfect_si"
    NO_SI = "no_si"


class SelectionScheme(StrEnum):
    """HBS selection strategies."""

    TWO_PHASE = "two_phase"
    EXHAUSTIVE = "exhaustive"
    LOCAL = "local"
    RANDOM = "random"


class SweepAxis(StrEnum):
    """Configuration axis varied across the rows of an experiment."""

    OMEGA = "omega"
    SNR_DB = "snr_db"
    CAPACITY = "capacity"
    N_HBS = "n_hbs"
    RADIUS_RATIO = "radius_ratio"
    Q_H = "q_h"


SCENARIO_SCHEMES: dict[Scenario, tuple[str, ...]] = {
    Scenario.COMPARE_SCHEMES: tuple(s.value for s in CompressionScheme),
    Scenario.ROBUSTNESS: tuple(s.value for s in RobustnessScheme),
    Scenario.SELECTION: tuple(s.value for s in SelectionScheme),
}
"""Scheme names accepted by each scenario, in default reporting order."""
