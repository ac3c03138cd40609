"""Tests for the Monte-Carlo experiment runner."""

from __future__ import annotations

import asyncio

import numpy as np
import pytest

from cran_compression import Simulator
from cran_compression.channel_model import ChannelSet
from cran_compression.config import ExperimentConfig
from cran_compression.drop_runner import DropSeeds, evaluate_imperfect_si, run_drop
from cran_compression.errors import NumericalError
from cran_compression.experiment import Experiment, run_experiment
from cran_compression.greedy import greedy_compress
from cran_compression.rates import sum_rate
from cran_compression.robust import PerturbedDesigner
from cran_compression.rows import DropOutcome, aggregate_rows
from tests.conftest import ChannelFactory


def _robustness_config(uncertainty: bool) -> ExperimentConfig:
    return {
        "scenario": "robustness",
        "topology": {"n_cells": 1, "n_hbs_per_cell": 2, "n_ms_per_cell": 3},
        "snr_db": 10.0,
        "capacity": 4.0,
        "n_drops": 2,
        "base_seed": 5,
        "uncertainty": uncertainty,
    }


class TestExperimentRun:
    """Tests for Experiment.run and run_streamed."""

    @pytest.mark.asyncio
    async def test_run_rows(self, tiny_config: ExperimentConfig) -> None:
        """Test one row per scheme and one outcome per drop."""
        result = await Experiment(tiny_config).run()
        assert [row["scheme"] for row in result.rows] == ["maxrate_si", "maxrate_nsi"]
        assert all(row["n_drops"] == 3 for row in result.rows)
        assert all(row["sweep_value"] == 0.5 for row in result.rows)
        assert [outcome["drop"] for _, outcome in result.drops] == [0, 1, 2]
        assert [outcome["seed"] for _, outcome in result.drops] == [11, 12, 13]
        assert len(result.config_hash) == 64

    @pytest.mark.asyncio
    async def test_event_order(self, tiny_config: ExperimentConfig) -> None:
        """Test the order of streamed events."""
        tiny_config["sweep_values"] = [0.25, 0.5]
        streamed = await Experiment(tiny_config).run_streamed()
        types = [event["type"] async for event in streamed.events]
        point = ["drop.completed"] * 3 + ["point.completed"]
        assert types == ["experiment.started", *point, *point, "experiment.completed"]

    @pytest.mark.asyncio
    async def test_deterministic(self, tiny_config: ExperimentConfig) -> None:
        """Test that results do not depend on the number of concurrent drops."""
        a = await Experiment(tiny_config).run({"max_concurrency": 1})
        b = await Experiment(tiny_config).run({"max_concurrency": 3})
        assert a.rows == b.rows
        assert a.config_hash == b.config_hash

    @pytest.mark.asyncio
    async def test_failure_raises(
        self, tiny_config: ExperimentConfig, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """Test that a failing drop surfaces as RuntimeError from run()."""

        def broken(cfg: ExperimentConfig, drop: int) -> DropOutcome:
            raise NumericalError("water level underflows")

        monkeypatch.setattr("cran_compression.experiment.run_drop", broken)
        with pytest.raises(RuntimeError, match="NumericalError: water level underflows"):
            await Experiment(tiny_config).run()

    @pytest.mark.asyncio
    async def test_failure_event(
        self, tiny_config: ExperimentConfig, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """Test that the stream ends with experiment.failed."""

        def broken(cfg: ExperimentConfig, drop: int) -> DropOutcome:
            raise NumericalError("no bracket")

        monkeypatch.setattr("cran_compression.experiment.run_drop", broken)
        streamed = await Experiment(tiny_config).run_streamed()
        events = [event async for event in streamed.events]
        assert events[-1]["type"] == "experiment.failed"

    @pytest.mark.asyncio
    async def test_cancel(self, tiny_config: ExperimentConfig) -> None:
        """Test that a set cancel_event stops the run."""
        cancel = asyncio.Event()
        cancel.set()
        with pytest.raises(asyncio.CancelledError):
            await Experiment(tiny_config).run({"cancel_event": cancel})

    @pytest.mark.asyncio
    async def test_invalid_concurrency(self, tiny_config: ExperimentConfig) -> None:
        """Test that max_concurrency must be positive."""
        with pytest.raises(ValueError, match="max_concurrency"):
            await Experiment(tiny_config).run({"max_concurrency": 0})

    def test_sync_wrapper(self, tiny_config: ExperimentConfig) -> None:
        """Test run_experiment from synchronous code."""
        tiny_config["n_drops"] = 1
        result = run_experiment(tiny_config)
        assert all(row["per_ms_rate_stderr"] == 0.0 for row in result.rows)


class TestSimulator:
    """Tests for the Simulator entry point."""

    @pytest.mark.asyncio
    async def test_start_preset_with_overrides(self) -> None:
        """Test that top-level overrides replace the preset values."""
        experiment = Simulator().start_preset(
            "maxrate_vs_snr", {"n_drops": 1, "sweep_values": [0.0]}
        )
        assert experiment.config["capacity"] == 10.0
        result = await experiment.run()
        assert len(result.rows) == 2

    def test_default_options(self, tiny_config: ExperimentConfig) -> None:
        """Test that the simulator hands its options to each experiment."""
        experiment = Simulator({"max_concurrency": 2}).start_experiment(tiny_config)
        assert experiment.config["n_drops"] == 3


class TestScenarios:
    """Tests for run_drop on each scenario."""

    def test_side_information_helps(self, tiny_config: ExperimentConfig) -> None:
        """Test that using side information gives a higher average rate."""
        tiny_config["n_drops"] = 10
        result = run_experiment(tiny_config)
        si, nsi = (row["per_ms_rate_mean"] for row in result.rows)
        assert si >= nsi

    def test_drop_is_reproducible(self, tiny_config: ExperimentConfig) -> None:
        """Test that a drop depends only on its seed."""
        cfg = Experiment(tiny_config).sweep_points()[0][1]
        assert run_drop(cfg, 4) == run_drop(cfg, 4)

    def test_seeds_independent(self) -> None:
        """Test that the derived seeds differ from each other."""
        seeds = DropSeeds.derive(3)
        assert len({seeds.topology, seeds.channels, seeds.perturbation}) == 3
        assert DropSeeds.derive(3) == seeds

    def test_exact_statistics(self) -> None:
        """Test that without uncertainty every SI scheme matches perfect SI."""
        cfg = Experiment(_robustness_config(uncertainty=False)).sweep_points()[0][1]
        outcome = run_drop(cfg, 0)
        rates = outcome["rates"]
        assert rates["robust"] == rates["perfect_si"]
        assert rates["imperfect_si"] == rates["perfect_si"]
        assert outcome["failures"] == {s: 0 for s in rates}

    def test_uncertain_statistics(self) -> None:
        """Test that perturbed statistics never beat perfect side information."""
        cfg = Experiment(_robustness_config(uncertainty=True)).sweep_points()[0][1]
        for drop in range(2):
            outcome = run_drop(cfg, drop)
            rates = outcome["rates"]
            assert set(rates) == {"perfect_si", "robust", "imperfect_si", "no_si"}
            assert all(v >= 0.0 for v in rates.values())
            assert all(n >= 0 for n in outcome["failures"].values())

    def test_selection(self) -> None:
        """Test that the best subset of the same size is at least as good as two-phase."""
        cfg: ExperimentConfig = {
            "scenario": "selection",
            "topology": {"n_cells": 1, "n_hbs_per_cell": 3, "n_ms_per_cell": 2},
            "snr_db": 10.0,
            "selection": {"q_h": 0.5, "c_h": 6.0, "c_mbs": 4.0},
        }
        point = Experiment(cfg).sweep_points()[0][1]
        outcome = run_drop(point, 0)
        rates = outcome["rates"]
        assert 0 <= outcome["n_active"] <= 3
        assert rates["exhaustive"] >= rates["two_phase"] - 1e-9
        assert rates["exhaustive"] >= rates["random"] - 1e-9


class TestImperfectSi:
    """Tests for evaluate_imperfect_si."""

    def test_exact_designs_recovered(self, make_channels: ChannelFactory) -> None:
        """Test that designs built on the true statistics are all recovered."""
        channels = make_channels(n_b=3)
        capacities = [2.0, 1.0, 1.0]
        solution = greedy_compress(channels, capacities)
        outcome = evaluate_imperfect_si(channels, solution, capacities)
        assert outcome.n_failed == 0
        assert outcome.survivors == solution.order
        assert outcome.sum_rate == pytest.approx(sum_rate(channels.sigma_x, channels, solution))

    def test_overrun_is_lost(self, make_channels: ChannelFactory) -> None:
        """Test that descriptions exceeding a smaller backhaul are dropped."""
        channels = make_channels(n_b=3)
        solution = greedy_compress(channels, [2.0, 1.0, 1.0])
        outcome = evaluate_imperfect_si(channels, solution, [1.9, 0.9, 0.9])
        assert outcome.n_failed == 3
        assert outcome.survivors == ()
        assert outcome.sum_rate == 0.0

    def test_zero_design_never_fails(self) -> None:
        """Test that a BS forwarding nothing is not counted as lost."""
        channels = ChannelSet.from_matrices([[[1.0]], [[0.0]]])
        solution = greedy_compress(channels, [1.0, 1.0])
        outcome = evaluate_imperfect_si(channels, solution, [1.0, 1.0])
        assert outcome.failed == {0: False, 1: False}

    def test_robust_designs_never_fail(self, make_channels: ChannelFactory) -> None:
        """Test that designs robust to the drawn errors always fit their backhaul."""
        capacities = [2.0, 1.0, 1.0]
        for seed in range(100):
            channels = make_channels(n_b=3, p_tx=4.0)
            designer = PerturbedDesigner(seed, robust=True)
            solution = greedy_compress(channels, capacities, designer=designer)
            outcome = evaluate_imperfect_si(channels, solution, capacities)
            assert outcome.n_failed == 0

    def test_nominal_designs_fail(self, make_channels: ChannelFactory) -> None:
        """Test that trusting the perturbed statistics loses some descriptions."""
        capacities = [2.0, 1.0, 1.0]
        failures = 0
        for seed in range(100):
            channels = make_channels(n_b=3, p_tx=4.0)
            designer = PerturbedDesigner(seed, robust=False)
            solution = greedy_compress(channels, capacities, designer=designer)
            failures += evaluate_imperfect_si(channels, solution, capacities).n_failed
        assert failures >= 1


class TestAggregateRows:
    """Tests for aggregate_rows."""

    def test_mean_and_stderr(self) -> None:
        """Test the sample standard error over drops."""
        outcomes: list[DropOutcome] = [
            {"drop": 1, "rates": {"a": 3.0}},
            {"drop": 0, "rates": {"a": 1.0}},
        ]
        (row,) = aggregate_rows(2.0, ["a"], outcomes)
        assert row["per_ms_rate_mean"] == 2.0
        assert row["per_ms_rate_stderr"] == pytest.approx(np.std([1.0, 3.0], ddof=1) / np.sqrt(2))
        assert row["n_drops"] == 2

    def test_single_drop(self) -> None:
        """Test that one drop has zero standard error."""
        (row,) = aggregate_rows(0.0, ["a"], [{"drop": 0, "rates": {"a": 1.5}}])
        assert row["per_ms_rate_stderr"] == 0.0


def _means(cfg: ExperimentConfig) -> dict[tuple[float, str], float]:
    result = run_experiment(cfg)
    return {(row["sweep_value"], row["scheme"]): row["per_ms_rate_mean"] for row in result.rows}


class TestTrends:
    """Desk-scale trends of scheme means over many drops."""

    MARGIN = 0.02

    def test_scheme_ordering(self) -> None:
        """Test Max-Rate SI on top and side information helping every MMSE target."""
        cfg: ExperimentConfig = {
            "scenario": "compare_schemes",
            "topology": {"n_cells": 3, "n_hbs_per_cell": 2, "n_ms_per_cell": 3},
            "snr_db": -5.0,
            "capacity": 6.0,
            "omega": 0.5,
            "n_drops": 30,
        }
        means = {scheme: value for (_, scheme), value in _means(cfg).items()}
        assert means["maxrate_si"] >= means["maxrate_nsi"] - self.MARGIN
        for name in ("mmse_direct_si", "mmse_direct_nsi", "mmse_indirect_si", "mmse_indirect_nsi"):
            assert means["maxrate_si"] >= means[name] - self.MARGIN
        for target in ("direct", "indirect"):
            assert means[f"mmse_{target}_si"] >= means[f"mmse_{target}_nsi"] - self.MARGIN

    def test_more_backhaul_more_rate(self, tiny_config: ExperimentConfig) -> None:
        """Test that the Max-Rate SI mean does not drop as omega grows."""
        tiny_config.update({"n_drops": 30, "schemes": ["maxrate_si"]})
        tiny_config["sweep_values"] = [0.1, 0.5, 1.0]
        means = _means(tiny_config)
        rates = [means[(omega, "maxrate_si")] for omega in (0.1, 0.5, 1.0)]
        assert rates[0] <= rates[1] + 1e-9
        assert rates[1] <= rates[2] + 1e-9

    def test_robust_sandwich(self) -> None:
        """Test perfect SI >= robust >= no SI, with robust above the nominal designs."""
        cfg = _robustness_config(uncertainty=True)
        cfg["n_drops"] = 30
        means = {scheme: value for (_, scheme), value in _means(cfg).items()}
        assert means["perfect_si"] >= means["robust"] - self.MARGIN
        assert means["robust"] >= means["no_si"] - self.MARGIN
        assert means["robust"] >= means["imperfect_si"]

    def test_selection_close_to_exhaustive(self) -> None:
        """Test two-phase within 0.05 bits of exhaustive and above random selection."""
        cfg: ExperimentConfig = {
            "scenario": "selection",
            "topology": {"n_cells": 1, "n_hbs_per_cell": 3, "n_ms_per_cell": 2},
            "snr_db": 10.0,
            "n_drops": 30,
            "selection": {"q_h": 0.5, "c_h": 6.0, "c_mbs": 4.0},
        }
        means = {scheme: value for (_, scheme), value in _means(cfg).items()}
        assert means["exhaustive"] - means["two_phase"] <= 0.05
        assert means["two_phase"] >= means["random"]
