"""
One Monte-Carlo drop of an experiment.

A drop draws a topology and a channel realization from its seed, runs every
configured scheme of the scenario on it and reports per-MS rates. Drops share
no state, so they can run concurrently in worker threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .channel_model import (
    AntennaCounts,
    ChannelSet,
    Topology,
    db_to_linear,
    generate_channels,
    generate_topology,
)
from .config import ExperimentConfig
from .greedy import Capacities, SideInfoState, greedy_compress, push_side_info
from .rates import CompressionSolution, side_rate_f, sum_rate
from .robust import PerturbedDesigner
from .rows import DropOutcome
from .schemes import BsRole, CompressionScheme, RobustnessScheme, Scenario, SelectionScheme
from .selection import baseline_select, design_mbs, two_phase_select

logger = logging.getLogger(__name__)

FAILURE_TOLERANCE = 1e-9
"""Bits by which a description may exceed its backhaul before it is lost."""


@dataclass(frozen=True)
class DropSeeds:
    """Independent seeds derived from the seed of a drop."""

    topology: int
    channels: int
    perturbation: int

    @classmethod
    def derive(cls, seed: int) -> DropSeeds:
        words = np.random.SeedSequence(seed).generate_state(3)
        return cls(topology=int(words[0]), channels=int(words[1]), perturbation=int(words[2]))


@dataclass(frozen=True)
class DropRealization:
    """Topology and channels of one drop."""

    topology: Topology
    channels: ChannelSet
    seeds: DropSeeds

    @property
    def n_ms(self) -> int:
        return max(1, self.topology.n_m)


def realize_drop(cfg: ExperimentConfig, seed: int) -> DropRealization:
    """Draw the topology and channels of the drop with the given seed."""
    seeds = DropSeeds.derive(seed)
    topology = generate_topology(cfg.get("topology", {}), seeds.topology)
    antennas = AntennaCounts.uniform(topology, cfg.get("antennas", {}))
    p_tx = db_to_linear(float(cfg.get("snr_db", 0.0)))
    channels = generate_channels(topology, antennas, p_tx, seeds.channels)
    return DropRealization(topology=topology, channels=channels, seeds=seeds)


def backhaul_capacities(topology: Topology, capacity: float, omega: float) -> list[float]:
    """C for every MBS and omega * C for every HBS."""
    return [capacity if role is BsRole.MBS else omega * capacity for role in topology.bs_roles]


@dataclass(frozen=True)
class ImperfectSiOutcome:
    """What the cloud recovers when designs were built from perturbed statistics."""

    sum_rate: float
    failed: dict[int, bool]
    """Per BS: True when its description exceeded the backhaul and was lost."""

    survivors: tuple[int, ...]

    @property
    def n_failed(self) -> int:
        return sum(self.failed.values())


def evaluate_imperfect_si(
    channels: ChannelSet,
    solution: CompressionSolution,
    capacities: Capacities,
) -> ImperfectSiOutcome:
    """
    Replay a decoding order under the true statistics.

    Each BS's true backhaul need is evaluated given the descriptions that were
    actually recovered before it. A BS whose need exceeds its capacity is
    marked failed and its description is dropped, so later BSs are evaluated
    without it.

    Args:
        channels: Channel realization with the true transmit covariance.
        solution: Designs and decoding order built from perturbed statistics.
        capacities: Backhaul capacity of each BS.
    """
    state = SideInfoState.empty(channels.sigma_x)
    failed: dict[int, bool] = {}
    for bs in solution.order:
        design = solution[bs]
        if design.is_zero:
            failed[bs] = False
            continue
        need = side_rate_f(design.omega, channels.channels[bs], state.sigma_cond)
        if need > float(capacities[bs]) + FAILURE_TOLERANCE:
            logger.debug("BS %d needs %.6f bits over %.6f: lost", bs, need, capacities[bs])
            failed[bs] = True
            continue
        failed[bs] = False
        state = push_side_info(state, bs, design.gain, channels.channels[bs])
    rate = sum_rate(channels.sigma_x, channels, solution, state.selected)
    return ImperfectSiOutcome(sum_rate=rate, failed=failed, survivors=state.selected)


def _compare_schemes(
    cfg: ExperimentConfig, drop: DropRealization, capacities: list[float]
) -> DropOutcome:
    rates: dict[str, float] = {}
    for name in cfg.get("schemes", []):
        solution = greedy_compress(drop.channels, capacities, CompressionScheme(name))
        rates[name] = sum_rate(drop.channels.sigma_x, drop.channels, solution) / drop.n_ms
    return {"rates": rates}


def _robustness(
    cfg: ExperimentConfig, drop: DropRealization, capacities: list[float]
) -> DropOutcome:
    channels = drop.channels
    perturbed = bool(cfg.get("uncertainty", False))
    rates: dict[str, float] = {}
    failures: dict[str, int] = {}
    for name in cfg.get("schemes", []):
        scheme = RobustnessScheme(name)
        if scheme is RobustnessScheme.NO_SI:
            solution = greedy_compress(channels, capacities, CompressionScheme.MAXRATE_NSI)
        elif scheme is RobustnessScheme.PERFECT_SI or not perturbed:
            solution = greedy_compress(channels, capacities, CompressionScheme.MAXRATE_SI)
        else:
            designer = PerturbedDesigner(
                drop.seeds.perturbation, robust=scheme is RobustnessScheme.ROBUST
            )
            solution = greedy_compress(channels, capacities, designer=designer)
            outcome = evaluate_imperfect_si(channels, solution, capacities)
            rates[name] = outcome.sum_rate / drop.n_ms
            failures[name] = outcome.n_failed
            continue
        rates[name] = sum_rate(channels.sigma_x, channels, solution) / drop.n_ms
        failures[name] = 0
    return {"rates": rates, "failures": failures}


def _selection(cfg: ExperimentConfig, drop: DropRealization) -> DropOutcome:
    selection = cfg.get("selection", {})
    channels = drop.channels
    mbs = design_mbs(channels, float(selection.get("c_mbs", 8.0)))
    chosen = two_phase_select(channels, selection, mbs)
    k = len(chosen.active)
    rates: dict[str, float] = {}
    for name in cfg.get("schemes", []):
        scheme = SelectionScheme(name)
        if scheme is SelectionScheme.TWO_PHASE:
            rate = chosen.sum_rate
        else:
            baseline = baseline_select(
                channels, selection, k, scheme, drop.seeds.perturbation, mbs
            )
            rate = baseline.sum_rate
        rates[name] = rate / drop.n_ms
    return {"rates": rates, "n_active": k}


def run_drop(cfg: ExperimentConfig, drop: int) -> DropOutcome:
    """
    Run every scheme of a resolved config on one drop.

    Args:
        cfg: Resolved config of one sweep point.
        drop: Drop index; the drop seed is base_seed + drop.

    Returns:
        Per-MS rates keyed by scheme name, plus scenario-specific statistics.
    """
    seed = int(cfg.get("base_seed", 0)) + drop
    realization = realize_drop(cfg, seed)
    scenario = Scenario(cfg.get("scenario", Scenario.COMPARE_SCHEMES.value))
    capacities = backhaul_capacities(
        realization.topology, float(cfg.get("capacity", 6.0)), float(cfg.get("omega", 0.5))
    )
    if scenario is Scenario.COMPARE_SCHEMES:
        outcome = _compare_schemes(cfg, realization, capacities)
    elif scenario is Scenario.ROBUSTNESS:
        outcome = _robustness(cfg, realization, capacities)
    else:
        outcome = _selection(cfg, realization)
    outcome["drop"] = drop
    outcome["seed"] = seed
    return outcome
