"""
Joint HBS selection and compression under a shared HBS backhaul.

The MBS (BS 0) compresses first without side information. The HBSs then share
a backhaul budget C_H; a trace penalty q_H drives the compression of weak HBSs
to zero. Phase 1 runs penalized block-coordinate ascent to pick the active
set; phase 2 reruns it without penalty on the active HBSs only.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize

from .channel_model import ChannelSet
from .compression import max_rate_compress, max_rate_gains, solve_water_level
from .config import SelectionConfig, resolve_selection
from .errors import InvalidInputError, SizeLimitError
from .hermitian import (
    LN2,
    ComplexArray,
    HermitianMatrix,
    RealArray,
    cond_cov,
    congruence,
    eig_desc,
    log2det,
    log2det_nonsymmetric,
    logdet_cap,
)
from .rates import CompressionDesign, describe, subset_rate, sum_rate
from .schemes import SelectionScheme

logger = logging.getLogger(__name__)

ZERO_PENALTY = 1e-10
"""Penalties below this use the unpenalized water-filling gains."""

MAX_EXHAUSTIVE_SUBSETS = 100_000

MBS_INDEX = 0


def mbs_conditional(channels: ChannelSet, mbs_design: CompressionDesign) -> HermitianMatrix:
    """Covariance of x given the MBS description."""
    h_bar, sigma_t = describe(channels, {MBS_INDEX: mbs_design}, [MBS_INDEX])
    return cond_cov(channels.sigma_x, h_bar, sigma_t)


def design_mbs(channels: ChannelSet, capacity: float) -> CompressionDesign:
    """MBS compression: Max-Rate without side information."""
    return max_rate_compress(channels.channels[MBS_INDEX], channels.sigma_x, capacity)


def _information_term(h: ComplexArray, omega: HermitianMatrix) -> ComplexArray:
    """H^H (I + Omega)^{-1} Omega H."""
    weight = np.linalg.solve(np.eye(omega.dim) + omega.array, omega.array)
    return h.conj().T @ weight @ h


def _others(
    designs: Mapping[int, CompressionDesign], exclude: int
) -> list[tuple[int, CompressionDesign]]:
    return [(j, d) for j, d in designs.items() if j != exclude and j != MBS_INDEX]


def stream_gains(lam: ArrayLike, mu: float, q_h: float) -> RealArray:
    """
    Penalized water-filling gains of one block update.

    Each gain maximizes (1 - mu) log2(1 + alpha lambda) - log2(1 + alpha) - q_H alpha.
    """
    lam_arr = np.asarray(lam, dtype=np.float64)
    if q_h < ZERO_PENALTY:
        if mu <= 0.0:
            raise InvalidInputError("the unpenalized update needs a positive multiplier")
        return max_rate_gains(lam_arr, mu)
    q = LN2 * q_h
    a = q * lam_arr
    b = lam_arr * mu + q * (lam_arr + 1.0)
    c = (mu - 1.0) * lam_arr + q + 1.0
    disc = np.clip(b * b - 4.0 * a * c, 0.0, None)
    # -2c / (b + sqrt(disc)) is the positive root without cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(b + np.sqrt(disc) > 0.0, -2.0 * c / (b + np.sqrt(disc)), 0.0)
    gains: RealArray = np.where(c < 0.0, np.clip(root, 0.0, None), 0.0)
    return gains


def _stream_budget(gains: RealArray, lam: RealArray) -> float:
    return float(np.sum(np.log2(1.0 + gains * lam)))


def stream_lagrangian(alpha: float, lam: float, mu: float, q_h: float) -> float:
    """Per-stream Lagrangian (1 - mu) log2(1 + alpha lambda) - log2(1 + alpha) - q_H alpha."""
    return (1.0 - mu) * math.log2(1.0 + alpha * lam) - math.log2(1.0 + alpha) - q_h * alpha


@dataclass(frozen=True)
class BlockProblem:
    """Single-HBS subproblem given the designs of all other HBSs."""

    conditional_form: HermitianMatrix
    """I + H_i R_i^{-1} Sigma_{x|y_hat_1} H_i^H."""

    residual_budget: float
    """Shared budget left for this HBS."""

    r_logdet: float
    """log2 det(R_i)."""


def block_problem(
    bs: int,
    channels: ChannelSet,
    sigma1: HermitianMatrix,
    designs: Mapping[int, CompressionDesign],
    c_h: float,
) -> BlockProblem:
    """Form the subproblem of HBS `bs` with every other HBS design fixed."""
    n_x = channels.n_x
    info = np.zeros((n_x, n_x), dtype=np.complex128)
    others_logdet = 0.0
    for j, design in _others(designs, bs):
        if design.is_zero:
            continue
        info += _information_term(channels.channels[j], design.omega)
        others_logdet += logdet_cap(design.omega)
    r = np.eye(n_x) + sigma1.array @ info
    h = channels.channels[bs]
    # R_i^{-1} Sigma_1 is Hermitian although R_i is not
    inner = h @ np.linalg.solve(r, sigma1.array) @ h.conj().T
    r_logdet = log2det_nonsymmetric(r)
    return BlockProblem(
        conditional_form=HermitianMatrix(np.eye(h.shape[0]) + inner, psd=True),
        residual_budget=c_h - r_logdet - others_logdet,
        r_logdet=r_logdet,
    )


def omega_update(
    bs: int,
    channels: ChannelSet,
    sigma1: HermitianMatrix,
    designs: Mapping[int, CompressionDesign],
    cfg: SelectionConfig,
    *,
    budget_share: float = 1.0,
) -> CompressionDesign:
    """
    Exact maximizer of the penalized objective over one HBS's compression.

    Args:
        bs: HBS being updated.
        channels: Channel realization (BS 0 is the MBS).
        sigma1: Covariance of x given the MBS description.
        designs: Current designs of the other HBSs.
        cfg: Selection parameters (q_h and c_h are used).
        budget_share: Fraction of the residual shared budget this update may spend.

    Returns:
        Design with Omega = U diag(alpha(mu*)) U^H in the eigenbasis of the
        conditional form; `objective` is the block's penalized contribution.
    """
    resolved = resolve_selection(cfg)
    q_h = float(resolved["q_h"])
    problem = block_problem(bs, channels, sigma1, designs, float(resolved["c_h"]))
    pair = eig_desc(problem.conditional_form)
    lam = np.clip(pair.values, 1.0, None)
    c_bar = problem.residual_budget * budget_share
    if c_bar <= 0.0 or not np.any(lam - 1.0 > 1e-12):
        return CompressionDesign.from_eigen(pair.basis, np.zeros(lam.size), lam)

    def budget(mu: float) -> float:
        return _stream_budget(stream_gains(lam, mu, q_h), lam)

    if q_h < ZERO_PENALTY:
        mu = solve_water_level(budget, c_bar, float(np.max(1.0 - 1.0 / lam)))
    elif budget(0.0) <= c_bar:
        mu = 0.0
    else:
        mu_hi = 1.0
        while budget(mu_hi) >= c_bar:
            mu_hi *= 2.0
            logger.debug("Expanding the multiplier bracket of HBS %d to %.3g", bs, mu_hi)
        mu = optimize.brentq(lambda m: budget(m) - c_bar, 0.0, mu_hi, xtol=1e-15, maxiter=500)
    gains = stream_gains(lam, mu, q_h)
    used = _stream_budget(gains, lam)
    objective = used - float(np.sum(np.log2(1.0 + gains))) - q_h * float(np.sum(gains))
    return CompressionDesign.from_eigen(
        pair.basis, gains, lam, mu=float(mu), backhaul_used=used, objective=objective
    )


@dataclass(frozen=True)
class UpdateKktResidual:
    """Residuals of the optimality conditions of a block update."""

    stationarity: float
    zero_gain: float
    slackness: float
    """|mu (h(mu) - C_bar)|."""

    primal: float
    """max(0, h(mu) - C_bar)."""

    def max(self) -> float:
        return max(self.stationarity, self.zero_gain, self.slackness, self.primal)


def update_kkt_residual(
    design: CompressionDesign, q_h: float, residual_budget: float
) -> UpdateKktResidual:
    """Evaluate the optimality conditions of an `omega_update` result."""
    lam = design.eigenvalues
    a = design.gains
    mu = design.mu
    q = LN2 * q_h
    grad = (1.0 - mu) * lam / (1.0 + a * lam) - 1.0 / (1.0 + a) - q
    positive = a > 0.0
    stationarity = float(np.max(np.abs(grad[positive]))) if np.any(positive) else 0.0
    zero_gain = float(np.max(np.clip(grad[~positive], 0.0, None))) if np.any(~positive) else 0.0
    excess = _stream_budget(a, lam) - residual_budget if np.any(positive) else 0.0
    return UpdateKktResidual(
        stationarity=stationarity,
        zero_gain=zero_gain,
        slackness=abs(mu * excess),
        primal=max(0.0, excess),
    )


def selection_objective(
    channels: ChannelSet,
    sigma1: HermitianMatrix,
    designs: Mapping[int, CompressionDesign],
) -> float:
    """I(x; y_hat_H | y_hat_1) carried by the HBS descriptions."""
    hbs = [j for j, _ in _others(designs, MBS_INDEX)]
    if not hbs:
        return 0.0
    h_bar, sigma_t = describe(channels, designs, hbs)
    return log2det(congruence(h_bar, sigma1).array + sigma_t) - log2det(sigma_t)


def penalized_objective(
    channels: ChannelSet,
    sigma1: HermitianMatrix,
    designs: Mapping[int, CompressionDesign],
    q_h: float,
) -> float:
    penalty = q_h * sum(d.trace() for _, d in _others(designs, MBS_INDEX))
    return selection_objective(channels, sigma1, designs) - penalty


def shared_backhaul_usage(
    channels: ChannelSet,
    sigma1: HermitianMatrix,
    designs: Mapping[int, CompressionDesign],
) -> float:
    """I(y_H; y_hat_H | y_hat_1): backhaul the HBSs need jointly."""
    hbs = [j for j, _ in _others(designs, MBS_INDEX)]
    if not hbs:
        return 0.0
    return subset_rate(hbs, channels, designs, hbs, sigma_x=sigma1)


def shared_backhaul_decomposed(
    bs: int,
    channels: ChannelSet,
    sigma1: HermitianMatrix,
    designs: Mapping[int, CompressionDesign],
) -> float:
    """
    The shared usage split around HBS `bs`.

    log2 det(R_i) + sum_{j != i} log2 det(I + Omega_j) + log2 det(I + Omega_i Sigma_i).
    """
    problem = block_problem(bs, channels, sigma1, designs, 0.0)
    inner = logdet_cap(congruence(designs[bs].gain, problem.conditional_form))
    return -problem.residual_budget + inner


@dataclass(frozen=True)
class AscentResult:
    """Designs and objective trace of a block-coordinate ascent run."""

    designs: dict[int, CompressionDesign]
    trace: tuple[float, ...]
    """Penalized objective at start and after every sweep."""


def block_coordinate_ascent(
    channels: ChannelSet,
    sigma1: HermitianMatrix,
    hbs: Sequence[int],
    cfg: SelectionConfig,
) -> AscentResult:
    """
    Cycle `omega_update` over `hbs` from all-zero designs until convergence.

    During the first sweep each update may spend only an even share of the
    shared budget still unused, so the first HBS cannot exhaust C_H on its own.

    Stops when a full sweep changes the penalized objective by less than
    `convergence_tol` (relative) or after `max_iters` sweeps.
    """
    resolved = resolve_selection(cfg)
    q_h = float(resolved["q_h"])
    tol = float(resolved["convergence_tol"])
    designs: dict[int, CompressionDesign] = {
        i: CompressionDesign.zero(channels.channels[i].shape[0]) for i in hbs
    }
    trace = [penalized_objective(channels, sigma1, designs, q_h)]
    for sweep in range(int(resolved["max_iters"])):
        for k, i in enumerate(hbs):
            # warm start: in the first sweep HBSs still at zero split the unused C_H evenly;
            # later sweeps are exact block maximizations
            share = 1.0 / (len(hbs) - k) if sweep == 0 else 1.0
            designs[i] = omega_update(i, channels, sigma1, designs, resolved, budget_share=share)
        value = penalized_objective(channels, sigma1, designs, q_h)
        previous = trace[-1]
        trace.append(value)
        if abs(value - previous) <= tol * max(abs(value), abs(previous), 1e-12):
            logger.debug("Block-coordinate ascent converged after %d sweeps", sweep + 1)
            break
    return AscentResult(designs=designs, trace=tuple(trace))


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a selection strategy."""

    active: tuple[int, ...]
    """Selected HBSs."""

    designs: dict[int, CompressionDesign]
    """Designs of the MBS and every HBS (zero for inactive HBSs)."""

    sum_rate: float
    trace: tuple[float, ...] = ()
    """Phase-1 penalized objective trace (two-phase selection only)."""

    n_evaluated: int = 1
    """Number of candidate subsets evaluated."""


def _hbs_indices(channels: ChannelSet) -> list[int]:
    return [i for i in range(channels.n_b) if i != MBS_INDEX]


def _finish(
    channels: ChannelSet,
    mbs_design: CompressionDesign,
    sigma1: HermitianMatrix,
    subset: Sequence[int],
    cfg: SelectionConfig,
) -> tuple[dict[int, CompressionDesign], float]:
    """Unpenalized designs on `subset` and the resulting sum-rate."""
    phase2: SelectionConfig = {**resolve_selection(cfg), "q_h": 0.0}
    designs: dict[int, CompressionDesign] = {MBS_INDEX: mbs_design}
    for i in _hbs_indices(channels):
        designs[i] = CompressionDesign.zero(channels.channels[i].shape[0])
    if subset:
        designs.update(block_coordinate_ascent(channels, sigma1, subset, phase2).designs)
    active = [MBS_INDEX, *subset]
    return designs, sum_rate(channels.sigma_x, channels, designs, active)


def two_phase_select(
    channels: ChannelSet,
    cfg: SelectionConfig,
    mbs_design: CompressionDesign,
) -> SelectionResult:
    """
    Select HBSs by penalized block-coordinate ascent, then redesign without penalty.

    Args:
        channels: Channel realization with the MBS at index 0.
        cfg: Selection parameters.
        mbs_design: Compression of the MBS.
    """
    resolved = resolve_selection(cfg)
    sigma1 = mbs_conditional(channels, mbs_design)
    hbs = _hbs_indices(channels)
    phase1 = block_coordinate_ascent(channels, sigma1, hbs, resolved)
    threshold = float(resolved["activation_threshold"])
    active = tuple(i for i in hbs if phase1.designs[i].trace() > threshold)
    logger.debug("Two-phase selection activated %d of %d HBSs", len(active), len(hbs))
    designs, rate = _finish(channels, mbs_design, sigma1, active, resolved)
    return SelectionResult(active=active, designs=designs, sum_rate=rate, trace=phase1.trace)


def local_rates(channels: ChannelSet) -> dict[int, float]:
    """Per-HBS rate log2 det(I + H_i Sigma_x H_i^H) without backhaul limits."""
    return {
        i: logdet_cap(congruence(channels.channels[i], channels.sigma_x))
        for i in _hbs_indices(channels)
    }


def baseline_select(
    channels: ChannelSet,
    cfg: SelectionConfig,
    k: int,
    mode: SelectionScheme,
    seed: int,
    mbs_design: CompressionDesign,
) -> SelectionResult:
    """
    Select `k` HBSs with a comparison strategy and design them without penalty.

    Args:
        channels: Channel realization with the MBS at index 0.
        cfg: Selection parameters.
        k: Number of HBSs to select.
        mode: LOCAL (largest local rate), EXHAUSTIVE (best sum-rate) or RANDOM.
        seed: Seed of the random strategy.
        mbs_design: Compression of the MBS.

    Raises:
        InvalidInputError: If k exceeds the number of HBSs or the mode is TWO_PHASE.
        SizeLimitError: If the exhaustive search exceeds 100000 subsets.
    """
    hbs = _hbs_indices(channels)
    if not 0 <= k <= len(hbs):
        raise InvalidInputError(f"cannot select {k} of {len(hbs)} HBSs")
    sigma1 = mbs_conditional(channels, mbs_design)

    if mode is SelectionScheme.LOCAL:
        scores = local_rates(channels)
        subset = tuple(sorted(sorted(hbs, key=lambda i: (-scores[i], i))[:k]))
    elif mode is SelectionScheme.RANDOM:
        rng = np.random.default_rng(seed)
        subset = tuple(sorted(int(i) for i in rng.choice(hbs, size=k, replace=False)))
    elif mode is SelectionScheme.EXHAUSTIVE:
        n_subsets = math.comb(len(hbs), k)
        if n_subsets > MAX_EXHAUSTIVE_SUBSETS:
            raise SizeLimitError(
                f"exhaustive selection of {k} of {len(hbs)} HBSs needs {n_subsets} subsets; "
                f"the limit is {MAX_EXHAUSTIVE_SUBSETS}"
            )
        best: SelectionResult | None = None
        for candidate in itertools.combinations(hbs, k):
            designs, rate = _finish(channels, mbs_design, sigma1, candidate, cfg)
            if best is None or rate > best.sum_rate + 1e-12:
                best = SelectionResult(active=candidate, designs=designs, sum_rate=rate)
        assert best is not None
        return SelectionResult(
            active=best.active,
            designs=best.designs,
            sum_rate=best.sum_rate,
            n_evaluated=n_subsets,
        )
    else:
        raise InvalidInputError(f"{mode.value} is not a baseline selection mode")

    designs, rate = _finish(channels, mbs_design, sigma1, subset, cfg)
    return SelectionResult(active=subset, designs=designs, sum_rate=rate)
