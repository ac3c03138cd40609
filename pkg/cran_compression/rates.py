"""
Information-theoretic evaluation of compression designs.

A BS i that compresses its received signal y_i = H_i x + z_i forwards the
description y_hat_i = A_i y_i + q_i, with q_i ~ CN(0, I). The cloud therefore
observes H_bar_i x + t_i with H_bar_i = A_i H_i and Cov(t_i) = A_i A_i^H + I.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from .channel_model import ChannelSet
from .errors import InvalidInputError, SizeLimitError
from .hermitian import (
    ComplexArray,
    HermitianMatrix,
    MatrixLike,
    RealArray,
    as_hermitian,
    block_diagonal,
    cond_cov,
    congruence,
    factor_gain,
    log2det,
    logdet_cap,
)

logger = logging.getLogger(__name__)

RATE_TOLERANCE = 1e-6
"""Tolerance in bits for rate equalities."""

REGION_TOLERANCE = 1e-8
"""Slack in bits granted to every subset constraint of the region check."""

MAX_REGION_STATIONS = 12


@dataclass(frozen=True)
class CompressionDesign:
    """
    Compression of one BS: Omega = A^H A = U diag(alpha) U^H (pre-processed for MMSE).

    `eigenvalues` are those of the form the gains were allocated against, and
    `objective` is the value the greedy ordering ranks candidates by.
    """

    omega: HermitianMatrix
    gain: ComplexArray
    """Gain matrix A with A^H A = Omega."""

    basis: ComplexArray
    gains: RealArray
    eigenvalues: RealArray
    mu: float = 0.0
    """Lagrange multiplier (water level) of the backhaul constraint."""

    backhaul_used: float = 0.0
    objective: float = 0.0
    no_signal: bool = False
    worst_case_rate: float | None = None
    """Rate guaranteed for every admissible covariance perturbation (robust designs)."""

    @classmethod
    def zero(cls, n_b: int, *, no_signal: bool = False) -> CompressionDesign:
        """Design that forwards nothing."""
        return cls(
            omega=HermitianMatrix.zeros(n_b),
            gain=np.zeros((n_b, n_b), dtype=np.complex128),
            basis=np.eye(n_b, dtype=np.complex128),
            gains=np.zeros(n_b),
            eigenvalues=np.ones(n_b),
            no_signal=no_signal,
        )

    @classmethod
    def from_eigen(
        cls,
        basis: ComplexArray,
        gains: RealArray,
        eigenvalues: RealArray,
        **fields: object,
    ) -> CompressionDesign:
        """Assemble Omega = U diag(alpha) U^H and A = diag(sqrt(alpha)) U^H."""
        alpha = np.clip(np.asarray(gains, dtype=np.float64), 0.0, None)
        gain: ComplexArray = np.sqrt(alpha)[:, None] * basis.conj().T
        omega = HermitianMatrix((basis * alpha) @ basis.conj().T, psd=True)
        return cls(
            omega=omega,
            gain=gain,
            basis=basis,
            gains=alpha,
            eigenvalues=np.asarray(eigenvalues, dtype=np.float64),
            **fields,  # type: ignore[arg-type]
        )

    @property
    def dim(self) -> int:
        return self.omega.dim

    @property
    def is_zero(self) -> bool:
        return not bool(np.any(self.gains > 0.0))

    def trace(self) -> float:
        return self.omega.trace()


@dataclass(frozen=True)
class CompressionSolution:
    """Designs of every BS plus the decoding order of the active ones."""

    designs: dict[int, CompressionDesign]
    order: tuple[int, ...]
    step_objectives: tuple[float, ...] = field(default=())
    """Per-step objective of the BS appended at each step of the order."""

    def __post_init__(self) -> None:
        missing = [i for i in self.order if i not in self.designs]
        if missing:
            raise InvalidInputError(f"order references BSs without a design: {missing}")
        if len(set(self.order)) != len(self.order):
            raise InvalidInputError(f"order has repeated BSs: {self.order}")

    def __getitem__(self, bs: int) -> CompressionDesign:
        return self.designs[bs]

    @property
    def backhaul_used(self) -> dict[int, float]:
        return {i: d.backhaul_used for i, d in self.designs.items()}


Designs = CompressionSolution | Mapping[int, CompressionDesign]


def _design_map(designs: Designs) -> Mapping[int, CompressionDesign]:
    if isinstance(designs, CompressionSolution):
        return designs.designs
    return designs


def _capacity(capacities: Mapping[int, float] | Sequence[float], bs: int) -> float:
    return float(capacities[bs])


def received_form(h: ArrayLike, sigma_cond: MatrixLike) -> HermitianMatrix:
    """H Sigma H^H + I."""
    form = congruence(np.atleast_2d(np.asarray(h, dtype=np.complex128)), as_hermitian(sigma_cond))
    return HermitianMatrix(form.array + np.eye(form.dim), psd=True)


def side_rate_f(omega: MatrixLike, h: ArrayLike, sigma_cond: MatrixLike) -> float:
    """
    Backhaul rate log2 det(I + Omega (H Sigma_cond H^H + I)) needed by one BS.

    This is I(y; y_hat | side information) for a Gaussian test channel when
    Sigma_cond is the covariance of x given the side information.

    Raises:
        NumericalError: If the argument is indefinite.
    """
    return side_rate_form(omega, received_form(h, sigma_cond))


def side_rate_form(omega: MatrixLike, form: MatrixLike) -> float:
    """log2 det(I + Omega F) for a received-signal covariance F."""
    a = factor_gain(omega)
    received = as_hermitian(form, psd=True)
    if a.shape[1] != received.dim:
        raise InvalidInputError(
            f"Omega is {a.shape[1]} x {a.shape[1]} but the received form is {received.dim} x "
            f"{received.dim}"
        )
    return logdet_cap(congruence(a, received))


def net_rate(omega: MatrixLike, h: ArrayLike, sigma_cond: MatrixLike) -> float:
    """Rate contribution I(x; y_hat | side information) = f(Omega) - log2 det(I + Omega)."""
    value = side_rate_f(omega, h, sigma_cond) - logdet_cap(omega)
    return max(0.0, value)


def describe(
    channels: ChannelSet,
    designs: Designs,
    indices: Sequence[int],
) -> tuple[ComplexArray, ComplexArray]:
    """
    Stack the effective channels and noise covariances of the given descriptions.

    Returns:
        (H_bar, Sigma_t) with H_bar the row-stack of A_i H_i and Sigma_t the
        block-diagonal of A_i A_i^H + I.
    """
    lookup = _design_map(designs)
    if not indices:
        return np.zeros((0, channels.n_x), dtype=np.complex128), np.zeros((0, 0), np.complex128)
    rows: list[ComplexArray] = []
    blocks: list[ComplexArray] = []
    for i in indices:
        a = lookup[i].gain
        rows.append(a @ channels.channels[i])
        blocks.append(a @ a.conj().T + np.eye(a.shape[0]))
    return np.vstack(rows), block_diagonal(blocks)


def conditional_covariance(
    channels: ChannelSet,
    designs: Designs,
    indices: Sequence[int],
    sigma_x: MatrixLike | None = None,
) -> HermitianMatrix:
    """Covariance of x given the descriptions of `indices`."""
    h_bar, sigma_t = describe(channels, designs, indices)
    prior = channels.sigma_x if sigma_x is None else sigma_x
    return cond_cov(prior, h_bar, sigma_t)


def sum_rate(
    sigma_x: MatrixLike,
    channels: ChannelSet,
    designs: Designs,
    active: Sequence[int] | None = None,
) -> float:
    """
    Achievable sum-rate I(x; y_hat_active).

    Evaluated as log2 det(Sigma_t + H_bar Sigma_x H_bar^H) - log2 det(Sigma_t).

    Args:
        sigma_x: Transmit covariance.
        channels: Channel realization.
        designs: Designs of (at least) the active BSs.
        active: BSs whose descriptions reach the cloud; defaults to every design.
    """
    lookup = _design_map(designs)
    indices = list(lookup) if active is None else list(active)
    if not indices:
        return 0.0
    h_bar, sigma_t = describe(channels, lookup, indices)
    received = congruence(h_bar, as_hermitian(sigma_x, psd=True)).array + sigma_t
    return max(0.0, log2det(received) - log2det(sigma_t))


def vertex_rates(
    order: Sequence[int],
    channels: ChannelSet,
    designs: Designs,
    sigma_x: MatrixLike | None = None,
) -> dict[int, float]:
    """
    Backhaul rates of the corner point of the rate region reached by decoding in `order`.

    BS order[k] needs I(y; y_hat | y_hat of order[:k]).
    """
    lookup = _design_map(designs)
    prior = channels.sigma_x if sigma_x is None else as_hermitian(sigma_x, psd=True)
    rates: dict[int, float] = {}
    for k, bs in enumerate(order):
        sigma_cond = conditional_covariance(channels, lookup, order[:k], prior)
        rates[bs] = side_rate_f(lookup[bs].omega, channels.channels[bs], sigma_cond)
    return rates


def subset_rate(
    subset: Sequence[int],
    channels: ChannelSet,
    designs: Designs,
    active: Sequence[int],
    sigma_x: MatrixLike | None = None,
) -> float:
    """I(y_S; y_hat_S | y_hat_{active minus S}) for S = `subset`."""
    lookup = _design_map(designs)
    rest = [i for i in active if i not in subset]
    sigma_rest = conditional_covariance(channels, lookup, rest, sigma_x)
    h_bar, sigma_t = describe(channels, lookup, subset)
    return log2det(congruence(h_bar, sigma_rest).array + sigma_t)


@dataclass(frozen=True)
class RegionCheck:
    """Outcome of checking backhaul capacities against the rate region."""

    feasible: bool
    worst_subset: tuple[int, ...]
    """Subset with the largest (required - available) gap."""

    worst_gap: float
    """Required minus available bits on `worst_subset`; <= 0 when feasible."""


def region_check(
    designs: Designs,
    capacities: Mapping[int, float] | Sequence[float],
    channels: ChannelSet,
    active: Sequence[int] | None = None,
) -> RegionCheck:
    """
    Check backhaul capacities against the rate region of the active BSs.

    Every subset S must satisfy sum_{j in S} C_j >= I(y_S; y_hat_S | y_hat_rest).

    Raises:
        SizeLimitError: If more than 12 BSs are active.
    """
    lookup = _design_map(designs)
    if active is None:
        active = designs.order if isinstance(designs, CompressionSolution) else list(lookup)
    stations = list(active)
    if len(stations) > MAX_REGION_STATIONS:
        raise SizeLimitError(
            f"region check enumerates 2^N subsets; {len(stations)} BSs exceed "
            f"the limit of {MAX_REGION_STATIONS}"
        )
    worst_subset: tuple[int, ...] = ()
    worst_gap = -np.inf
    for size in range(1, len(stations) + 1):
        for subset in itertools.combinations(stations, size):
            need = subset_rate(subset, channels, lookup, stations)
            gap = need - sum(_capacity(capacities, j) for j in subset)
            if gap > worst_gap:
                worst_gap, worst_subset = gap, subset
    if not stations:
        worst_gap = 0.0
    feasible = bool(worst_gap <= REGION_TOLERANCE)
    if not feasible:
        logger.debug("Region violated on %s by %.3e bits", worst_subset, worst_gap)
    return RegionCheck(feasible=feasible, worst_subset=worst_subset, worst_gap=float(worst_gap))


def quadratic_form(h: ArrayLike, sigma: MatrixLike) -> HermitianMatrix:
    """H Sigma H^H as a PSD Hermitian matrix."""
    return congruence(np.atleast_2d(np.asarray(h, dtype=np.complex128)), as_hermitian(sigma))
