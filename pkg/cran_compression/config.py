"""
Experiment configuration type definitions, defaults and validation.

Configuration is plain JSON-compatible dictionaries typed as TypedDicts, so a
config file maps field-for-field onto `ExperimentConfig`.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from pathlib import Path
from typing import Any, TypedDict

from .errors import ConfigError
from .schemes import SCENARIO_SCHEMES, Scenario, SweepAxis


class HotSpotConfig(TypedDict, total=False):
    """A smaller disc overlaid on the first cell that hosts a second node group."""

    radius_ratio: float
    """R_spot / R_cell, in (0, 1]."""

    n_hbs: int
    """Number of HBSs dropped inside the hot spot."""

    n_ms: int
    """Number of MSs dropped inside the hot spot."""


class TopologyConfig(TypedDict, total=False):
    """Network layout parameters."""

    n_cells: int
    """Number of cells; each has one MBS at its center."""

    cell_radius: float
    """R_cell, in arbitrary length units."""

    n_hbs_per_cell: int
    """HBSs dropped uniformly in each cell."""

    n_ms_per_cell: int
    """MSs dropped uniformly in each cell."""

    hot_spot: HotSpotConfig
    """Optional hot spot inside cell 0."""

    pathloss_exponent: float
    """nu, must exceed 2."""

    reference_distance: float
    """D0; defaults to cell_radius / 2."""

    cell_spacing: float
    """Distance between adjacent cell centers; defaults to 2 R_cell cos(30 deg)."""


class AntennaConfig(TypedDict, total=False):
    """Antenna counts applied to every node of a kind."""

    n_bs: int
    n_ms: int


class SelectionConfig(TypedDict, total=False):
    """Joint HBS selection parameters."""

    q_h: float
    """Activation cost per HBS (per unit trace of its compression covariance)."""

    c_h: float
    """Shared HBS backhaul budget in bits."""

    c_mbs: float
    """MBS backhaul budget in bits."""

    activation_threshold: float
    """An HBS is active when trace(Omega_i) exceeds this value."""

    max_iters: int
    """Maximum number of block-coordinate sweeps."""

    convergence_tol: float
    """Relative objective change below which the sweeps stop."""


class ExperimentConfig(TypedDict, total=False):
    """Configuration of one Monte-Carlo experiment."""

    scenario: str
    topology: TopologyConfig
    antennas: AntennaConfig

    snr_db: float
    """Transmit power P_tx in dB (unit noise, so this is the SNR at D0)."""

    capacity: float
    """MBS backhaul C in bits per channel use."""

    omega: float
    """HBS backhaul fraction; HBS links carry omega * C."""

    n_drops: int
    base_seed: int
    schemes: list[str]

    uncertainty: bool
    """Perturb the conditional covariance seen by the BSs (robustness scenario)."""

    selection: SelectionConfig

    sweep_axis: str
    """Axis varied across rows (see SweepAxis)."""

    sweep_values: list[float]


DEFAULT_TOPOLOGY: TopologyConfig = {
    "n_cells": 1,
    "cell_radius": 1.0,
    "n_hbs_per_cell": 3,
    "n_ms_per_cell": 4,
    "pathloss_exponent": 3.5,
}

DEFAULT_ANTENNAS: AntennaConfig = {"n_bs": 2, "n_ms": 1}

DEFAULT_SELECTION: SelectionConfig = {
    "q_h": 1.0,
    "c_h": 12.0,
    "c_mbs": 8.0,
    "activation_threshold": 1e-6,
    "max_iters": 200,
    "convergence_tol": 1e-6,
}

DEFAULT_SWEEP_VALUES: dict[SweepAxis, float] = {
    SweepAxis.OMEGA: 0.5,
    SweepAxis.SNR_DB: 0.0,
    SweepAxis.CAPACITY: 6.0,
}

DEFAULT_EXPERIMENT: ExperimentConfig = {
    "scenario": Scenario.COMPARE_SCHEMES.value,
    "snr_db": 0.0,
    "capacity": 6.0,
    "omega": 0.5,
    "n_drops": 50,
    "base_seed": 0,
    "uncertainty": False,
}

_EXPERIMENT_KEYS = set(ExperimentConfig.__annotations__)
_TOPOLOGY_KEYS = set(TopologyConfig.__annotations__)
_HOT_SPOT_KEYS = set(HotSpotConfig.__annotations__)
_ANTENNA_KEYS = set(AntennaConfig.__annotations__)
_SELECTION_KEYS = set(SelectionConfig.__annotations__)


def resolve_topology(options: TopologyConfig | None = None) -> TopologyConfig:
    """Return a topology config with every default filled in."""
    resolved: TopologyConfig = copy.deepcopy(DEFAULT_TOPOLOGY)
    resolved.update(copy.deepcopy(options or {}))
    radius = float(resolved["cell_radius"])
    resolved.setdefault("reference_distance", radius / 2.0)
    resolved.setdefault("cell_spacing", 2.0 * radius * math.cos(math.radians(30.0)))
    return resolved


def resolve_selection(options: SelectionConfig | None = None) -> SelectionConfig:
    """Return a selection config with every default filled in."""
    resolved: SelectionConfig = copy.deepcopy(DEFAULT_SELECTION)
    resolved.update(copy.deepcopy(options or {}))
    return resolved


def resolve_config(cfg: ExperimentConfig) -> ExperimentConfig:
    """
    Return a deep copy of the config with all defaults filled in.

    Raises:
        ConfigError: If the config is invalid.
    """
    validate_experiment_config(cfg)
    resolved: ExperimentConfig = copy.deepcopy(DEFAULT_EXPERIMENT)
    resolved.update(copy.deepcopy(cfg))
    resolved["topology"] = resolve_topology(cfg.get("topology"))
    antennas: AntennaConfig = copy.deepcopy(DEFAULT_ANTENNAS)
    antennas.update(cfg.get("antennas", {}))
    resolved["antennas"] = antennas
    resolved["selection"] = resolve_selection(cfg.get("selection"))
    scenario = Scenario(resolved["scenario"])
    resolved.setdefault("schemes", list(SCENARIO_SCHEMES[scenario]))
    if "sweep_axis" not in resolved:
        resolved["sweep_axis"] = _default_axis(scenario).value
    if "sweep_values" not in resolved:
        resolved["sweep_values"] = [current_axis_value(resolved, SweepAxis(resolved["sweep_axis"]))]
    return resolved


def _default_axis(scenario: Scenario) -> SweepAxis:
    if scenario is Scenario.ROBUSTNESS:
        return SweepAxis.CAPACITY
    if scenario is Scenario.SELECTION:
        return SweepAxis.Q_H
    return SweepAxis.OMEGA


def current_axis_value(cfg: ExperimentConfig, axis: SweepAxis) -> float:
    """Read the value a resolved config currently holds on a sweep axis."""
    topology = cfg.get("topology", {})
    if axis is SweepAxis.OMEGA:
        return float(cfg.get("omega", 0.5))
    if axis is SweepAxis.SNR_DB:
        return float(cfg.get("snr_db", 0.0))
    if axis is SweepAxis.CAPACITY:
        return float(cfg.get("capacity", 6.0))
    if axis is SweepAxis.N_HBS:
        return float(topology.get("n_hbs_per_cell", 0))
    if axis is SweepAxis.RADIUS_RATIO:
        return float(topology.get("hot_spot", {}).get("radius_ratio", 1.0))
    return float(cfg.get("selection", {}).get("q_h", DEFAULT_SELECTION["q_h"]))


def apply_sweep_value(cfg: ExperimentConfig, axis: SweepAxis, value: float) -> ExperimentConfig:
    """Return a copy of a resolved config with one axis set to `value`."""
    point: ExperimentConfig = copy.deepcopy(cfg)
    if axis is SweepAxis.OMEGA:
        point["omega"] = float(value)
    elif axis is SweepAxis.SNR_DB:
        point["snr_db"] = float(value)
    elif axis is SweepAxis.CAPACITY:
        point["capacity"] = float(value)
    elif axis is SweepAxis.N_HBS:
        point["topology"]["n_hbs_per_cell"] = int(round(value))
    elif axis is SweepAxis.RADIUS_RATIO:
        hot_spot = point["topology"].get("hot_spot")
        if hot_spot is None:
            raise ConfigError("sweep axis radius_ratio requires topology.hot_spot")
        hot_spot["radius_ratio"] = float(value)
    else:
        point["selection"]["q_h"] = float(value)
    validate_experiment_config(point)
    return point


def _check_keys(section: str, given: dict[str, Any], allowed: set[str]) -> None:
    unknown = sorted(set(given) - allowed)
    if unknown:
        raise ConfigError(f"Unknown {section} option(s): {', '.join(unknown)}")


def _check_number(name: str, value: Any, *, minimum: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {type(value).__name__}")
    number = float(value)
    if not math.isfinite(number):
        raise ConfigError(f"{name} must be finite")
    if minimum is not None and number < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {number}")
    return number


def _check_count(name: str, value: Any, *, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def validate_topology_config(options: TopologyConfig) -> None:
    """
    Check a topology config.

    Raises:
        ConfigError: If a field is out of range.
    """
    _check_keys("topology", dict(options), _TOPOLOGY_KEYS)
    if "n_cells" in options:
        _check_count("topology.n_cells", options["n_cells"], minimum=1)
    if "cell_radius" in options:
        if _check_number("topology.cell_radius", options["cell_radius"]) <= 0:
            raise ConfigError("topology.cell_radius must be positive")
    for key in ("n_hbs_per_cell", "n_ms_per_cell"):
        if key in options:
            _check_count(f"topology.{key}", dict(options)[key])
    if "pathloss_exponent" in options:
        if _check_number("topology.pathloss_exponent", options["pathloss_exponent"]) <= 2:
            raise ConfigError("topology.pathloss_exponent must exceed 2")
    if "reference_distance" in options:
        if _check_number("topology.reference_distance", options["reference_distance"]) <= 0:
            raise ConfigError("topology.reference_distance must be positive")
    if "cell_spacing" in options:
        if _check_number("topology.cell_spacing", options["cell_spacing"]) <= 0:
            raise ConfigError("topology.cell_spacing must be positive")
    hot_spot = options.get("hot_spot")
    if hot_spot is not None:
        _check_keys("topology.hot_spot", dict(hot_spot), _HOT_SPOT_KEYS)
        ratio = _check_number("hot_spot.radius_ratio", hot_spot.get("radius_ratio", 1.0))
        if not 0.0 < ratio <= 1.0:
            raise ConfigError(f"hot_spot.radius_ratio must be in (0, 1], got {ratio}")
        _check_count("hot_spot.n_hbs", hot_spot.get("n_hbs", 0))
        _check_count("hot_spot.n_ms", hot_spot.get("n_ms", 0))


def validate_selection_config(options: SelectionConfig) -> None:
    """
    Check a selection config.

    Raises:
        ConfigError: If a field is out of range.
    """
    _check_keys("selection", dict(options), _SELECTION_KEYS)
    for key in ("q_h", "c_h", "c_mbs", "convergence_tol"):
        if key in options:
            _check_number(f"selection.{key}", dict(options)[key], minimum=0.0)
    if "activation_threshold" in options:
        if _check_number("selection.activation_threshold", options["activation_threshold"]) <= 0:
            raise ConfigError("selection.activation_threshold must be positive")
    if "max_iters" in options:
        _check_count("selection.max_iters", options["max_iters"], minimum=1)


def validate_experiment_config(cfg: ExperimentConfig) -> None:
    """
    Check an experiment config against its invariants.

    Raises:
        ConfigError: If any field is invalid.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("experiment config must be a plain JSON object")
    _check_keys("experiment", dict(cfg), _EXPERIMENT_KEYS)

    scenario_name = cfg.get("scenario", DEFAULT_EXPERIMENT["scenario"])
    try:
        scenario = Scenario(scenario_name)
    except ValueError as e:
        raise ConfigError(f"Unknown scenario: {scenario_name}") from e

    validate_topology_config(cfg.get("topology", {}))
    antennas = cfg.get("antennas", {})
    _check_keys("antennas", dict(antennas), _ANTENNA_KEYS)
    for key in ("n_bs", "n_ms"):
        if key in antennas:
            _check_count(f"antennas.{key}", dict(antennas)[key], minimum=1)
    validate_selection_config(cfg.get("selection", {}))

    if "snr_db" in cfg:
        _check_number("snr_db", cfg["snr_db"])
    if "capacity" in cfg:
        _check_number("capacity", cfg["capacity"], minimum=0.0)
    if "omega" in cfg:
        omega = _check_number("omega", cfg["omega"])
        if not 0.0 < omega <= 1.0:
            raise ConfigError(f"omega must be in (0, 1], got {omega}")
    if "n_drops" in cfg:
        _check_count("n_drops", cfg["n_drops"], minimum=1)
    if "base_seed" in cfg:
        _check_count("base_seed", cfg["base_seed"])

    allowed = SCENARIO_SCHEMES[scenario]
    for name in cfg.get("schemes", []):
        if name not in allowed:
            raise ConfigError(
                f"Unknown scheme {name!r} for scenario {scenario.value}; "
                f"expected one of {', '.join(allowed)}"
            )

    if "sweep_axis" in cfg:
        try:
            axis = SweepAxis(cfg["sweep_axis"])
        except ValueError as e:
            raise ConfigError(f"Unknown sweep axis: {cfg['sweep_axis']}") from e
        if axis is SweepAxis.RADIUS_RATIO and "hot_spot" not in cfg.get("topology", {}):
            raise ConfigError("sweep axis radius_ratio requires topology.hot_spot")
    for value in cfg.get("sweep_values", []):
        _check_number("sweep_values[]", value)

    if scenario is Scenario.SELECTION and cfg.get("topology", {}).get("n_cells", 1) != 1:
        raise ConfigError("selection scenario supports a single cell only")


def load_config(path: str | Path) -> ExperimentConfig:
    """
    Load and validate an experiment config from a JSON file.

    Raises:
        ConfigError: If the file is not valid JSON or the config is invalid.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        parsed = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Failed to parse config {path}: {e}") from e
    validate_experiment_config(parsed)
    config: ExperimentConfig = parsed
    return config


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form of a config."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


PRESETS: dict[str, ExperimentConfig] = {
    "schemes_vs_omega": {
        "scenario": Scenario.COMPARE_SCHEMES.value,
        "topology": {"n_cells": 3, "n_hbs_per_cell": 2, "n_ms_per_cell": 3},
        "antennas": {"n_bs": 2, "n_ms": 1},
        "snr_db": -5.0,
        "capacity": 6.0,
        "n_drops": 50,
        "sweep_axis": SweepAxis.OMEGA.value,
        "sweep_values": [0.1, 0.25, 0.5, 0.75, 1.0],
    },
    "maxrate_vs_snr": {
        "scenario": Scenario.COMPARE_SCHEMES.value,
        "topology": {"n_cells": 3, "n_hbs_per_cell": 2, "n_ms_per_cell": 3},
        "antennas": {"n_bs": 2, "n_ms": 1},
        "capacity": 10.0,
        "omega": 0.5,
        "n_drops": 50,
        "schemes": ["maxrate_si", "maxrate_nsi"],
        "sweep_axis": SweepAxis.SNR_DB.value,
        "sweep_values": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
    },
    "robust_vs_capacity": {
        "scenario": Scenario.ROBUSTNESS.value,
        "topology": {"n_cells": 1, "n_hbs_per_cell": 3, "n_ms_per_cell": 8},
        "antennas": {"n_bs": 2, "n_ms": 1},
        "snr_db": 10.0,
        "omega": 0.5,
        "n_drops": 50,
        "uncertainty": True,
        "sweep_axis": SweepAxis.CAPACITY.value,
        "sweep_values": [2.0, 4.0, 6.0, 8.0, 10.0],
    },
    "robust_vs_hbs": {
        "scenario": Scenario.ROBUSTNESS.value,
        "topology": {"n_cells": 1, "n_hbs_per_cell": 3, "n_ms_per_cell": 8},
        "antennas": {"n_bs": 2, "n_ms": 1},
        "snr_db": 10.0,
        "capacity": 6.0,
        "omega": 0.5,
        "n_drops": 50,
        "uncertainty": True,
        "sweep_axis": SweepAxis.N_HBS.value,
        "sweep_values": [1.0, 2.0, 3.0, 4.0, 5.0],
    },
    "selection_vs_hotspot": {
        "scenario": Scenario.SELECTION.value,
        "topology": {
            "n_cells": 1,
            "n_hbs_per_cell": 3,
            "n_ms_per_cell": 4,
            "hot_spot": {"radius_ratio": 0.5, "n_hbs": 3, "n_ms": 3},
        },
        "antennas": {"n_bs": 2, "n_ms": 1},
        "snr_db": 10.0,
        "n_drops": 30,
        "selection": {"q_h": 4.0, "c_h": 12.0, "c_mbs": 8.0},
        "sweep_axis": SweepAxis.RADIUS_RATIO.value,
        "sweep_values": [0.1, 0.25, 0.5, 1.0],
    },
}
"""Desk-scale versions of the five numerical studies."""


def preset_config(name: str) -> ExperimentConfig:
    """
    Return a copy of a named preset.

    Raises:
        ConfigError: If the preset does not exist.
    """
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError as e:
        raise ConfigError(f"Unknown preset {name!r}; expected one of {', '.join(PRESETS)}") from e
