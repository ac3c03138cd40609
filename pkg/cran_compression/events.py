"""
Experiment event type definitions.

Events are plain dictionaries with a `type` discriminator, emitted in a
deterministic order: one `experiment.started`, then per sweep point its
`drop.completed` events in drop order followed by `point.completed`, and
finally `experiment.completed` or `experiment.failed`.
"""

from __future__ import annotations

from typing import Literal, TypedDict

from .rows import DropOutcome, ResultRow


class ExperimentError(TypedDict):
    """Fatal error emitted by the stream."""

    message: str


class ExperimentStartedEvent(TypedDict):
    """Emitted once, before any drop runs."""

    type: Literal["experiment.started"]
    scenario: str
    config_hash: str
    """SHA-256 of the resolved config."""

    sweep_values: list[float]
    n_drops: int


class DropCompletedEvent(TypedDict):
    """Emitted for every drop, in drop order within a sweep point."""

    type: Literal["drop.completed"]
    sweep_value: float
    outcome: DropOutcome


class PointCompletedEvent(TypedDict):
    """Emitted when every drop of a sweep point has completed."""

    type: Literal["point.completed"]
    sweep_value: float
    rows: list[ResultRow]


class ExperimentCompletedEvent(TypedDict):
    """Emitted after the last sweep point."""

    type: Literal["experiment.completed"]
    rows: list[ResultRow]


class ExperimentFailedEvent(TypedDict):
    """Indicates that a drop raised and the experiment stopped."""

    type: Literal["experiment.failed"]
    error: ExperimentError


ExperimentEvent = (
    ExperimentStartedEvent
    | DropCompletedEvent
    | PointCompletedEvent
    | ExperimentCompletedEvent
    | ExperimentFailedEvent
)
