"""
Greedy sequential compression.

BSs are compressed one at a time. At every step each remaining BS designs its
compression against the covariance of x given the descriptions already at the
cloud, and the BS with the best per-step objective is appended to the order.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .channel_model import ChannelSet
from .compression import design_compression
from .errors import DuplicateStationError, InvalidInputError, SizeLimitError
from .hermitian import ComplexArray, HermitianMatrix, block_diagonal, cond_cov
from .rates import CompressionDesign, CompressionSolution, sum_rate
from .schemes import CompressionScheme

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-9
"""Objectives closer than this (bits) are ties; the lower BS index wins."""

MAX_EXHAUSTIVE_STATIONS = 6

Capacities = Mapping[int, float] | Sequence[float]


@dataclass(frozen=True)
class SideInfoState:
    """Descriptions already available at the cloud, in decoding order."""

    sigma_x: HermitianMatrix
    selected: tuple[int, ...]
    h_bar: ComplexArray
    """Row-stack of A_j H_j over the selected BSs."""

    noise_blocks: tuple[ComplexArray, ...]
    """A_j A_j^H + I for each selected BS."""

    sigma_cond: HermitianMatrix
    """Covariance of x given the selected descriptions."""

    @classmethod
    def empty(cls, sigma_x: HermitianMatrix) -> SideInfoState:
        return cls(
            sigma_x=sigma_x,
            selected=(),
            h_bar=np.zeros((0, sigma_x.dim), dtype=np.complex128),
            noise_blocks=(),
            sigma_cond=sigma_x,
        )

    @property
    def sigma_t(self) -> ComplexArray:
        return block_diagonal(self.noise_blocks)

    def __contains__(self, bs: object) -> bool:
        return bs in self.selected


def push_side_info(
    state: SideInfoState,
    bs: int,
    gain: ComplexArray,
    h: ComplexArray,
) -> SideInfoState:
    """
    Return the state after the description A y_bs + q of BS `bs` reaches the cloud.

    Raises:
        DuplicateStationError: If `bs` is already in the state.
    """
    if bs in state.selected:
        raise DuplicateStationError(f"BS {bs} already provides side information")
    a = np.atleast_2d(np.asarray(gain, dtype=np.complex128))
    hm = np.atleast_2d(np.asarray(h, dtype=np.complex128))
    if a.shape[1] != hm.shape[0]:
        raise InvalidInputError(f"gain {a.shape} does not match channel {hm.shape}")
    h_bar = np.vstack([state.h_bar, a @ hm])
    blocks = (*state.noise_blocks, a @ a.conj().T + np.eye(a.shape[0]))
    sigma_cond = cond_cov(state.sigma_x, h_bar, block_diagonal(blocks))
    return SideInfoState(
        sigma_x=state.sigma_x,
        selected=(*state.selected, bs),
        h_bar=h_bar,
        noise_blocks=blocks,
        sigma_cond=sigma_cond,
    )


class Designer(Protocol):
    """Designs the compression of BS `bs` at a step of the greedy ordering."""

    def __call__(
        self,
        bs: int,
        h: ComplexArray,
        sigma_cond: HermitianMatrix,
        capacity: float,
        step: int,
    ) -> CompressionDesign: ...


def scheme_designer(scheme: CompressionScheme, sigma_x: HermitianMatrix) -> Designer:
    """Designer applying one of the named compression schemes."""

    def design(
        bs: int,
        h: ComplexArray,
        sigma_cond: HermitianMatrix,
        capacity: float,
        step: int,
    ) -> CompressionDesign:
        return design_compression(scheme, h, sigma_x, sigma_cond, capacity)

    return design


def _is_zero_channel(h: ComplexArray) -> bool:
    return not bool(np.any(h != 0))


def greedy_compress(
    channels: ChannelSet,
    capacities: Capacities,
    scheme: CompressionScheme = CompressionScheme.MAXRATE_SI,
    *,
    designer: Designer | None = None,
) -> CompressionSolution:
    """
    Choose the decoding order greedily and design every BS's compression.

    Args:
        channels: Channel realization.
        capacities: Backhaul budget of each BS (indexed by BS).
        scheme: Per-BS compression scheme; ignored when `designer` is given.
        designer: Custom per-step design function whose `objective` ranks candidates.

    Returns:
        Solution with the chosen order and the per-step objectives.
    """
    design = designer or scheme_designer(scheme, channels.sigma_x)
    state = SideInfoState.empty(channels.sigma_x)
    designs: dict[int, CompressionDesign] = {}
    objectives: list[float] = []

    zero = [i for i in range(channels.n_b) if _is_zero_channel(channels.channels[i])]
    remaining = [i for i in range(channels.n_b) if i not in zero]
    step = 0
    while remaining:
        best: tuple[int, CompressionDesign] | None = None
        for bs in remaining:
            candidate = design(
                bs, channels.channels[bs], state.sigma_cond, float(capacities[bs]), step
            )
            if best is None or candidate.objective > best[1].objective + TIE_TOLERANCE:
                best = (bs, candidate)
        assert best is not None
        bs, chosen = best
        logger.debug("Greedy step %d: BS %d, objective %.6f", step, bs, chosen.objective)
        designs[bs] = chosen
        objectives.append(chosen.objective)
        state = push_side_info(state, bs, chosen.gain, channels.channels[bs])
        remaining.remove(bs)
        step += 1

    for bs in zero:
        designs[bs] = CompressionDesign.zero(channels.channels[bs].shape[0], no_signal=True)
        objectives.append(0.0)
    return CompressionSolution(
        designs=designs, order=(*state.selected, *zero), step_objectives=tuple(objectives)
    )


def fixed_order_compress(
    channels: ChannelSet,
    capacities: Capacities,
    order: Sequence[int],
    scheme: CompressionScheme = CompressionScheme.MAXRATE_SI,
    *,
    designer: Designer | None = None,
) -> CompressionSolution:
    """Design every BS's compression along a given decoding order."""
    design = designer or scheme_designer(scheme, channels.sigma_x)
    state = SideInfoState.empty(channels.sigma_x)
    designs: dict[int, CompressionDesign] = {}
    objectives: list[float] = []
    for step, bs in enumerate(order):
        chosen = design(bs, channels.channels[bs], state.sigma_cond, float(capacities[bs]), step)
        designs[bs] = chosen
        objectives.append(chosen.objective)
        state = push_side_info(state, bs, chosen.gain, channels.channels[bs])
    return CompressionSolution(
        designs=designs, order=tuple(order), step_objectives=tuple(objectives)
    )


def best_order_exhaustive(
    channels: ChannelSet,
    capacities: Capacities,
    scheme: CompressionScheme = CompressionScheme.MAXRATE_SI,
) -> CompressionSolution:
    """
    Try every decoding order and keep the one with the largest sum-rate.

    Raises:
        SizeLimitError: If there are more than 6 BSs.
    """
    if channels.n_b > MAX_EXHAUSTIVE_STATIONS:
        raise SizeLimitError(
            f"exhaustive ordering of {channels.n_b} BSs exceeds the limit of "
            f"{MAX_EXHAUSTIVE_STATIONS}"
        )
    best: tuple[float, CompressionSolution] | None = None
    for order in itertools.permutations(range(channels.n_b)):
        solution = fixed_order_compress(channels, capacities, order, scheme)
        rate = sum_rate(channels.sigma_x, channels, solution)
        if best is None or rate > best[0] + TIE_TOLERANCE:
            best = (rate, solution)
    if best is None:
        return CompressionSolution(designs={}, order=())
    return best[1]
