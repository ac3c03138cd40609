"""
Monte-Carlo experiment runner.

Drops run concurrently in worker threads; their outcomes are yielded and
reduced in (sweep point, drop) order, so the results only depend on the config.
"""

from __future__ import annotations

import asyncio
import logging
from collections.abc import AsyncGenerator
from dataclasses import dataclass, field

from .config import ExperimentConfig, apply_sweep_value, config_hash, resolve_config
from .drop_runner import run_drop
from .events import ExperimentError, ExperimentEvent
from .rows import DropOutcome, ResultRow, aggregate_rows
from .run_options import DEFAULT_MAX_CONCURRENCY, RunOptions
from .schemes import SweepAxis

logger = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    """Completed experiment."""

    rows: list[ResultRow]
    """One row per (sweep value, scheme), in sweep order."""

    drops: list[tuple[float, DropOutcome]] = field(default_factory=list)
    """Every drop outcome with its sweep value."""

    config: ExperimentConfig = field(default_factory=lambda: ExperimentConfig())
    """Resolved config the experiment ran with."""

    config_hash: str = ""


@dataclass
class StreamedExperiment:
    """The result of the run_streamed method."""

    events: AsyncGenerator[ExperimentEvent, None]
    """Async generator yielding events as they are produced."""


class Experiment:
    """
    One configured Monte-Carlo experiment.

    Use `Simulator.start_experiment()` to create instances, then `run()` or
    `run_streamed()`.
    """

    def __init__(self, cfg: ExperimentConfig, options: RunOptions | None = None) -> None:
        """
        Initialize an Experiment.

        Args:
            cfg: Experiment config; missing fields take their defaults.
            options: Default run options, overridden per call.

        Raises:
            ConfigError: If the config is invalid.
        """
        self._cfg = resolve_config(cfg)
        self._hash = config_hash(self._cfg)
        self._options: RunOptions = options or {}

    @property
    def config(self) -> ExperimentConfig:
        """Resolved config."""
        return self._cfg

    @property
    def config_hash(self) -> str:
        return self._hash

    def sweep_points(self) -> list[tuple[float, ExperimentConfig]]:
        """Resolved config of every sweep point, in sweep order."""
        axis = SweepAxis(self._cfg["sweep_axis"])
        values = self._cfg["sweep_values"]
        return [(float(v), apply_sweep_value(self._cfg, axis, v)) for v in values]

    async def run_streamed(self, options: RunOptions | None = None) -> StreamedExperiment:
        """
        Run the experiment and stream events as drops complete.

        Args:
            options: Optional run-specific options.

        Returns:
            StreamedExperiment containing an async generator of events.
        """
        merged: RunOptions = {**self._options, **(options or {})}
        return StreamedExperiment(events=self._run_streamed_internal(merged))

    async def _run_streamed_internal(
        self, options: RunOptions
    ) -> AsyncGenerator[ExperimentEvent, None]:
        max_concurrency = int(options.get("max_concurrency", DEFAULT_MAX_CONCURRENCY))
        if max_concurrency < 1:
            raise ValueError(f"max_concurrency must be positive, got {max_concurrency}")
        cancel_event = options.get("cancel_event")
        semaphore = asyncio.Semaphore(max_concurrency)
        n_drops = int(self._cfg["n_drops"])
        schemes = list(self._cfg["schemes"])

        def cancelled() -> bool:
            return cancel_event is not None and cancel_event.is_set()

        async def compute(point: ExperimentConfig, drop: int) -> DropOutcome:
            async with semaphore:
                if cancelled():
                    raise asyncio.CancelledError("Experiment cancelled by user")
                return await asyncio.to_thread(run_drop, point, drop)

        yield {
            "type": "experiment.started",
            "scenario": self._cfg["scenario"],
            "config_hash": self._hash,
            "sweep_values": [float(v) for v in self._cfg["sweep_values"]],
            "n_drops": n_drops,
        }
        logger.info(
            "Experiment %s started: %d sweep points x %d drops",
            self._hash[:12],
            len(self._cfg["sweep_values"]),
            n_drops,
        )

        all_rows: list[ResultRow] = []
        try:
            for value, point in self.sweep_points():
                tasks = [asyncio.create_task(compute(point, d)) for d in range(n_drops)]
                outcomes: list[DropOutcome] = []
                try:
                    for task in tasks:
                        if cancelled():
                            raise asyncio.CancelledError("Experiment cancelled by user")
                        outcome = await task
                        outcomes.append(outcome)
                        yield {"type": "drop.completed", "sweep_value": value, "outcome": outcome}
                finally:
                    pending = [t for t in tasks if not t.done()]
                    for task in pending:
                        task.cancel()
                    await asyncio.gather(*tasks, return_exceptions=True)
                rows = aggregate_rows(value, schemes, outcomes)
                all_rows.extend(rows)
                logger.info("Sweep point %s completed (%d drops)", value, len(outcomes))
                yield {"type": "point.completed", "sweep_value": value, "rows": rows}
        except asyncio.CancelledError:
            raise
        except Exception as e:
            error: ExperimentError = {"message": f"{type(e).__name__}: {e}"}
            yield {"type": "experiment.failed", "error": error}
            return
        yield {"type": "experiment.completed", "rows": all_rows}

    async def run(self, options: RunOptions | None = None) -> ExperimentResult:
        """
        Run the experiment and return the completed result.

        Args:
            options: Optional run-specific options.

        Returns:
            ExperimentResult with the aggregated rows and every drop outcome.

        Raises:
            RuntimeError: If a drop fails.
            asyncio.CancelledError: If cancelled via cancel_event.
        """
        rows: list[ResultRow] = []
        drops: list[tuple[float, DropOutcome]] = []
        failure: ExperimentError | None = None

        streamed = await self.run_streamed(options)
        async for event in streamed.events:
            if event["type"] == "drop.completed":
                drops.append((event["sweep_value"], event["outcome"]))

            elif event["type"] == "experiment.completed":
                rows = event["rows"]

            elif event["type"] == "experiment.failed":
                failure = event["error"]
                break

        if failure:
            raise RuntimeError(failure.get("message", "Experiment failed"))

        return ExperimentResult(rows=rows, drops=drops, config=self._cfg, config_hash=self._hash)


def run_experiment(cfg: ExperimentConfig, options: RunOptions | None = None) -> ExperimentResult:
    """
    Run an experiment to completion from synchronous code.

    Raises:
        ConfigError: If the config is invalid.
        RuntimeError: If a drop fails.
    """
    return asyncio.run(Experiment(cfg).run(options))
