"""
Run options type definitions.
"""

from __future__ import annotations

import asyncio
from typing import TypedDict


class RunOptions(TypedDict, total=False):
    """Configuration options for one experiment run."""

    max_concurrency: int
    """Drops computed at the same time in worker threads (default 4)."""

    cancel_event: asyncio.Event
    """
    Event to signal cancellation of the run.
    Set the event to stop scheduling drops; the stream raises CancelledError.
    """


DEFAULT_MAX_CONCURRENCY = 4
