"""
Worst-case robust compression under an uncertain conditional covariance.

The BS only knows an estimate of its received-signal covariance given the side
information. The error is a Hermitian perturbation whose eigenvalues lie in
[lambda_LB, lambda_UB]; the design maximizes the worst-case rate while the
backhaul constraint holds for every admissible perturbation. Per stream the
stationarity conditions reduce to a quadratic alpha^2 + Q alpha + S = 0, so the
gains are picked from at most three candidates for every multiplier mu and the
multiplier is found by a scalar search.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, optimize, stats

from .compression import max_rate_compress, max_rate_compress_form, solve_water_level
from .errors import InfeasibleBoundsError, InvalidInputError, RobustSolverError, SizeLimitError
from .hermitian import (
    ComplexArray,
    HermitianMatrix,
    MatrixLike,
    RealArray,
    as_hermitian,
    eig_desc,
)
from .rates import CompressionDesign, quadratic_form, received_form

logger = logging.getLogger(__name__)

MU_GRID_POINTS = 2000
MU_LOG_KNEE = 1e-2
MU_CEILING = 1.0 - 1e-9
MU_FLOOR = 1e-15
BUDGET_TOLERANCE = 1e-4
"""Largest budget mismatch (bits) accepted from the grid when no root is bracketed."""

MAX_ROBUST_STREAMS = 8
_BOUNDARY_STEPS = 60

BoolArray = NDArray[np.bool_]


@dataclass(frozen=True)
class UncertaintyBounds:
    """Eigenvalue range [lower, upper] of the covariance error, lower <= 0 <= upper."""

    lower: float = 0.0
    upper: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise InvalidInputError("uncertainty bounds must be finite")
        if self.lower > 0.0 or self.upper < 0.0:
            raise InvalidInputError(
                f"uncertainty bounds must satisfy lower <= 0 <= upper, got "
                f"({self.lower}, {self.upper})"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def attached_to(self, quadratic: MatrixLike) -> UncertaintyBounds:
        """
        Bounds usable with a nominal form H Sigma_hat H^H.

        The designer works on the shifted form H Sigma_hat H^H + I, so the range
        is kept as long as lambda_min(form) + 1 + lower > 0. Otherwise no stream
        level would stay positive and the lower bound is raised to
        -lambda_min(form), the floor keeping the nominal form plus the
        perturbation PSD. The narrowed bounds no longer cover the whole range.
        """
        values = eig_desc(as_hermitian(quadratic, psd=True)).values
        lam_min = max(float(values[-1]), 0.0) if values.size else 0.0
        if lam_min + 1.0 + self.lower > 0.0:
            return self
        return UncertaintyBounds(lower=-lam_min, upper=self.upper)


def _levels(lam: ArrayLike, bounds: UncertaintyBounds) -> tuple[RealArray, RealArray]:
    lam_arr = np.asarray(lam, dtype=np.float64)
    c_low = lam_arr + bounds.lower
    c_up = lam_arr + bounds.upper
    if np.any(c_low <= 0.0) or np.any(c_up <= 0.0):
        raise InfeasibleBoundsError(
            f"bounds ({bounds.lower}, {bounds.upper}) leave a stream without a positive "
            f"worst-case level (min eigenvalue {float(np.min(lam_arr)):.3e})"
        )
    return c_low, c_up


def qs_coeffs(mu: float, lam: float, bounds: UncertaintyBounds) -> tuple[float, float]:
    """
    Coefficients (Q, S) of the per-stream stationarity quadratic alpha^2 + Q alpha + S = 0.

    Args:
        mu: Multiplier of the backhaul constraint, in (0, 1).
        lam: Eigenvalue of the nominal received-signal covariance H Sigma_hat H^H + I.
        bounds: Eigenvalue bounds of the covariance error.

    Raises:
        InfeasibleBoundsError: If lam + lower <= 0 or lam + upper <= 0.
    """
    if not 0.0 < mu < 1.0:
        raise InvalidInputError(f"mu must lie in (0, 1), got {mu}")
    c_low, c_up = (float(v[0]) for v in _levels([lam], bounds))
    q = c_up * (1.0 + mu + (mu - 1.0) * c_low) / (mu * c_up * c_low)
    s = (mu * c_up + 1.0 - c_low) / (mu * c_up * c_low)
    return q, s


class Branch(IntEnum):
    """Candidate gain of a stream: zero, or one of the two quadratic roots."""

    ZERO = 0
    PLUS = 1
    MINUS = 2


def _branches(
    mu: RealArray, c_low: RealArray, c_up: RealArray
) -> tuple[RealArray, BoolArray]:
    """
    Candidate gains and their validity on a grid of multipliers.

    Returns:
        (values, valid) of shape (n_streams, 3, n_mu), indexed by Branch.
    """
    m = np.asarray(mu, dtype=np.float64)[None, :]
    cl = c_low[:, None]
    cu = c_up[:, None]
    q = cu * (1.0 + m + (m - 1.0) * cl) / (m * cu * cl)
    s = (m * cu + 1.0 - cl) / (m * cu * cl)
    disc = q * q - 4.0 * s
    root = np.sqrt(np.clip(disc, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        # cancellation-free roots: the product of the roots is S
        plus_stable = np.where(q + root != 0.0, -2.0 * s / (q + root), 0.0)
        minus_stable = np.where(-q + root != 0.0, 2.0 * s / (-q + root), 0.0)
    plus = np.where(q < 0.0, 0.5 * (-q + root), plus_stable)
    minus = np.where(q >= 0.0, 0.5 * (-q - root), minus_stable)
    two_roots = (q < 0.0) & (s >= 0.0) & (disc >= 0.0)
    values = np.stack([np.zeros_like(q), plus, minus], axis=1)
    valid = np.stack([s >= 0.0, (s < 0.0) | two_roots, two_roots], axis=1)
    valid &= values >= 0.0
    return np.clip(values, 0.0, None), valid


def candidate_set(mu: float, lam: float, bounds: UncertaintyBounds) -> tuple[float, ...]:
    """
    Nonnegative gains satisfying the stationarity conditions of one stream at mu.

    One candidate unless Q < 0, S >= 0 and Q^2 - 4S >= 0, where both roots and
    zero qualify.
    """
    qs_coeffs(mu, lam, bounds)
    c_low, c_up = _levels([lam], bounds)
    values, valid = _branches(np.array([mu]), c_low, c_up)
    return tuple(float(values[0, b, 0]) for b in Branch if valid[0, b, 0])


def _budget(gains: RealArray, levels: RealArray) -> float:
    return float(np.sum(np.log2(1.0 + gains * levels)))


def worst_case_rate(gains: ArrayLike, lam: ArrayLike, bounds: UncertaintyBounds) -> float:
    """sum_l log2(1 + alpha_l c^L_l) - log2(1 + alpha_l): rate at the most adverse perturbation."""
    a = np.asarray(gains, dtype=np.float64)
    c_low, _ = _levels(lam, bounds)
    return float(np.sum(np.log2(1.0 + a * c_low) - np.log2(1.0 + a)))


def worst_case_budget(gains: ArrayLike, lam: ArrayLike, bounds: UncertaintyBounds) -> float:
    """sum_l log2(1 + alpha_l c^U_l): backhaul needed at the most adverse perturbation."""
    a = np.asarray(gains, dtype=np.float64)
    _, c_up = _levels(lam, bounds)
    return _budget(a, c_up)


@dataclass(frozen=True)
class _Candidate:
    mu: float
    gains: RealArray
    objective: float
    budget: float
    valid: bool = True


class _MultiplierSearch:
    """Search over (mu, branch pattern) pairs meeting the worst-case budget."""

    def __init__(self, c_low: RealArray, c_up: RealArray, capacity: float) -> None:
        self.c_low = c_low
        self.c_up = c_up
        self.capacity = capacity

    def gains(self, mu: float, pattern: Sequence[int]) -> tuple[RealArray, bool]:
        values, valid = _branches(np.array([mu]), self.c_low, self.c_up)
        idx = np.arange(self.c_low.size)
        chosen = np.asarray(pattern)
        return values[idx, chosen, 0], bool(np.all(valid[idx, chosen, 0]))

    def budget(self, mu: float, pattern: Sequence[int]) -> float:
        return _budget(self.gains(mu, pattern)[0], self.c_up)

    def evaluate(self, mu: float, pattern: Sequence[int]) -> _Candidate:
        gains, valid = self.gains(mu, pattern)
        objective = float(np.sum(np.log2(1.0 + gains * self.c_low) - np.log2(1.0 + gains)))
        return _Candidate(
            mu=mu, gains=gains, objective=objective, budget=_budget(gains, self.c_up), valid=valid
        )

    def greedy_budget(self, mu: float) -> float:
        """Budget of the pattern taking the positive root wherever it is valid."""
        values, valid = _branches(np.array([mu]), self.c_low, self.c_up)
        gains = np.where(valid[:, Branch.PLUS, 0], values[:, Branch.PLUS, 0], 0.0)
        return _budget(gains, self.c_up)

    def grid(self) -> RealArray:
        """Log-spaced multipliers up to the knee, then linear up to the ceiling."""
        floor = MU_FLOOR
        while self.greedy_budget(floor) < self.capacity:
            floor *= 1e-10
            if floor < 1e-300:
                raise RobustSolverError(
                    f"no multiplier reaches a budget of {self.capacity} bits",
                    nearest_budget=self.greedy_budget(floor * 1e10),
                )
        half = MU_GRID_POINTS // 2
        low = np.geomspace(floor, MU_LOG_KNEE, half, endpoint=False)
        high = np.linspace(MU_LOG_KNEE, MU_CEILING, MU_GRID_POINTS - half)
        return np.concatenate([low, high])

    def _refine(self, pattern: Sequence[int], lo: float, hi: float) -> _Candidate | None:
        f_lo = self.budget(lo, pattern) - self.capacity
        f_hi = self.budget(hi, pattern) - self.capacity
        if f_lo * f_hi > 0.0:
            return None
        if f_lo == 0.0:
            return self.evaluate(lo, pattern)
        if f_hi == 0.0:
            return self.evaluate(hi, pattern)
        mu: float = optimize.brentq(
            lambda m: self.budget(m, pattern) - self.capacity,
            lo,
            hi,
            xtol=1e-300,
            rtol=4.0 * np.finfo(np.float64).eps,
            maxiter=500,
        )
        return self.evaluate(mu, pattern)

    def _validity_edge(self, pattern: Sequence[int], valid_end: float, other_end: float) -> float:
        for _ in range(_BOUNDARY_STEPS):
            mid = 0.5 * (valid_end + other_end)
            if self.gains(mid, pattern)[1]:
                valid_end = mid
            else:
                other_end = mid
        return valid_end

    def run(self) -> tuple[list[_Candidate], _Candidate | None]:
        """
        Scan every gain pattern over the multiplier grid.

        Returns:
            The budget-meeting candidates found by root refinement, and the
            valid grid point whose budget came closest to the target.
        """
        grid = self.grid()
        values, valid = _branches(grid, self.c_low, self.c_up)
        up_terms = np.log2(1.0 + values * self.c_up[:, None, None])
        n = self.c_low.size
        idx = np.arange(n)
        allowed = [[b for b in Branch if bool(np.any(valid[s, b]))] for s in range(n)]
        found: list[_Candidate] = []
        nearest: tuple[float, float, tuple[int, ...]] | None = None
        n_patterns = 0
        for pattern in itertools.product(*allowed):
            if all(b is Branch.ZERO for b in pattern):
                continue
            n_patterns += 1
            chosen = list(pattern)
            ok = np.all(valid[idx, chosen], axis=0)
            if not np.any(ok):
                continue
            diff = np.sum(up_terms[idx, chosen], axis=0) - self.capacity
            # only budgets at or below C are kept as a fallback
            gap = np.where(ok & (diff <= 0.0), -diff, np.inf)
            k_best = int(np.argmin(gap))
            if nearest is None or gap[k_best] < nearest[0]:
                nearest = (float(gap[k_best]), float(grid[k_best]), tuple(pattern))

            for k in np.flatnonzero(ok[:-1] & ok[1:] & (diff[:-1] * diff[1:] <= 0.0)):
                hit = self._refine(pattern, float(grid[k]), float(grid[k + 1]))
                if hit is not None:
                    found.append(hit)
            # cells where the pattern stops being valid: refine up to the edge
            for k in np.flatnonzero(ok[:-1] ^ ok[1:]):
                inside, outside = float(grid[k]), float(grid[k + 1])
                if ok[k + 1]:
                    inside, outside = outside, inside
                edge = self._validity_edge(pattern, inside, outside)
                if edge != inside:
                    hit = self._refine(pattern, min(inside, edge), max(inside, edge))
                    if hit is not None:
                        found.append(hit)
        logger.debug("Robust search: %d patterns, %d budget-meeting points", n_patterns, len(found))
        closest = None if nearest is None else self.evaluate(nearest[1], nearest[2])
        return found, closest


def robust_compress_form(
    form: MatrixLike,
    capacity: float,
    bounds: UncertaintyBounds,
) -> CompressionDesign:
    """
    Robust design from the nominal received-signal form H Sigma_hat H^H + I.

    Returns:
        Design whose `worst_case_rate` (also its `objective`) is the rate
        guaranteed for every admissible perturbation, and whose backhaul need
        at the most adverse perturbation equals `capacity`.

    Raises:
        InfeasibleBoundsError: If a stream has no positive worst-case level.
        SizeLimitError: If more than 8 streams need the multi-candidate search.
        RobustSolverError: If no multiplier meets the budget within tolerance.
    """
    c = float(capacity)
    if not math.isfinite(c) or c < 0.0:
        raise InvalidInputError(f"backhaul capacity must be finite and nonnegative, got {capacity}")
    pair = eig_desc(as_hermitian(form, psd=True))
    lam = np.clip(pair.values, 1.0, None)
    c_low, c_up = _levels(lam, bounds)
    n = lam.size
    thresholds = (c_low - 1.0) / c_up
    top = float(np.max(thresholds)) if n else 0.0

    if c == 0.0 or top <= 0.0:
        if c > 0.0:
            logger.warning("Robust design without a usable stream: forwarding nothing")
        return CompressionDesign.from_eigen(
            pair.basis, np.zeros(n), lam, mu=max(top, 0.0), worst_case_rate=0.0, no_signal=c > 0.0
        )

    search = _MultiplierSearch(c_low, c_up, c)
    if bounds.width < 1.0:
        mu = solve_water_level(search.greedy_budget, c, top)
        best = search.evaluate(mu, [Branch.PLUS if t > mu else Branch.ZERO for t in thresholds])
    else:
        if n > MAX_ROBUST_STREAMS:
            raise SizeLimitError(
                f"robust search over 3^{n} gain patterns exceeds {MAX_ROBUST_STREAMS} streams"
            )
        found, closest = search.run()
        feasible = [f for f in found if f.valid and abs(f.budget - c) <= 1e-6]
        if feasible:
            best = max(feasible, key=lambda f: f.objective)
        elif closest is not None and abs(closest.budget - c) <= BUDGET_TOLERANCE:
            logger.warning(
                "Robust search using the nearest budget %.6f for %.6f bits", closest.budget, c
            )
            best = closest
        else:
            nearest = math.nan if closest is None else closest.budget
            raise RobustSolverError(
                f"no (mu, gain pattern) pair meets the budget of {c} bits; nearest {nearest:.6f}",
                nearest_budget=nearest,
            )

    return CompressionDesign.from_eigen(
        pair.basis,
        best.gains,
        lam,
        mu=best.mu,
        backhaul_used=best.budget,
        objective=max(0.0, best.objective),
        worst_case_rate=max(0.0, best.objective),
    )


def robust_compress(
    h: ArrayLike,
    sigma_hat: MatrixLike,
    capacity: float,
    bounds: UncertaintyBounds,
) -> CompressionDesign:
    """
    Worst-case robust compression of one BS.

    Args:
        h: Channel of the BS.
        sigma_hat: Estimated covariance of x given the side information.
        capacity: Backhaul budget in bits.
        bounds: Eigenvalue bounds of the error of H Sigma_hat H^H.
    """
    return robust_compress_form(received_form(h, sigma_hat), capacity, bounds)


@dataclass(frozen=True)
class RobustKktResidual:
    """Residuals of the optimality conditions of a robust design."""

    stationarity: float
    """Largest |d/d alpha_l Lagrangian| over streams with alpha_l > 0."""

    zero_gain: float
    """Largest violation of the inequality c^L - 1 - mu c^U <= 0 over streams with alpha_l = 0."""

    budget: float
    """|worst-case budget - C|."""

    def max(self) -> float:
        return max(self.stationarity, self.zero_gain, self.budget)


def robust_kkt_residual(
    design: CompressionDesign,
    bounds: UncertaintyBounds,
    capacity: float,
) -> RobustKktResidual:
    """Evaluate the optimality conditions of a robust (or Max-Rate) design."""
    c_low, c_up = _levels(design.eigenvalues, bounds)
    a = design.gains
    mu = design.mu
    grad = c_low / (1.0 + a * c_low) - 1.0 / (1.0 + a) - mu * c_up / (1.0 + a * c_up)
    positive = a > 0.0
    stationarity = float(np.max(np.abs(grad[positive]))) if np.any(positive) else 0.0
    slack = c_low - 1.0 - mu * c_up
    zero_gain = float(np.max(np.clip(slack[~positive], 0.0, None))) if np.any(~positive) else 0.0
    return RobustKktResidual(
        stationarity=stationarity,
        zero_gain=zero_gain,
        budget=abs(_budget(a, c_up) - capacity),
    )


@dataclass(frozen=True)
class UncertaintySample:
    """A realized covariance error on the received-signal form of one BS."""

    true_form: HermitianMatrix
    """H Sigma_cond H^H."""

    nominal_form: HermitianMatrix
    """H Sigma_hat H^H = true_form - delta, as seen by the BS."""

    delta: HermitianMatrix
    bounds: UncertaintyBounds
    """Bounds handed to the robust designer, attached to the nominal form."""

    covers_error: bool = True
    """Whether every eigenvalue of `delta` lies within `bounds`, so the robust rate holds."""


def sample_uncertainty(
    h: ArrayLike,
    sigma_cond: MatrixLike,
    seed: int | Sequence[int],
) -> UncertaintySample:
    """
    Draw a covariance error isotropic on the column space of H.

    The error has Haar-distributed eigenvectors on the column space and
    eigenvalues uniform in [-lambda_min, lambda_min], where lambda_min is the
    smallest eigenvalue of H Sigma_cond H^H restricted to that space. The
    designer gets that range as bounds unless `UncertaintyBounds.attached_to`
    has to narrow it, in which case `covers_error` tells whether the drawn
    error still lies inside.

    Args:
        h: Channel of the BS.
        sigma_cond: True covariance of x given the side information.
        seed: Seed (or seed words) of the draw.
    """
    hm = np.atleast_2d(np.asarray(h, dtype=np.complex128))
    true_form = quadratic_form(hm, sigma_cond)
    n_b = true_form.dim
    basis: ComplexArray = linalg.orth(hm) if hm.size else np.zeros((n_b, 0))
    rank = basis.shape[1]
    restricted = basis.conj().T @ true_form.array @ basis
    lam_min = float(eig_desc(restricted).values[-1]) if rank else 0.0
    if rank == 0 or lam_min <= 1e-12:
        zero = HermitianMatrix.zeros(n_b)
        return UncertaintySample(true_form, true_form, zero, UncertaintyBounds())

    rng = np.random.default_rng(seed)
    rotation = (
        np.ones((1, 1), dtype=np.complex128)
        if rank == 1
        else np.asarray(stats.unitary_group.rvs(rank, random_state=rng), dtype=np.complex128)
    )
    levels = rng.uniform(-lam_min, lam_min, size=rank)
    vectors = basis @ rotation
    delta = HermitianMatrix((vectors * levels) @ vectors.conj().T)
    nominal = HermitianMatrix(true_form.array - delta.array, psd=True)
    bounds = UncertaintyBounds(lower=-lam_min, upper=lam_min).attached_to(nominal)
    covers = bounds.lower <= float(np.min(levels))
    if not covers:
        logger.debug(
            "Lower bound raised to %.6f above the drawn error %.6f", bounds.lower, np.min(levels)
        )
    return UncertaintySample(true_form, nominal, delta, bounds, covers_error=covers)


def _shifted(form: HermitianMatrix, shift: float) -> HermitianMatrix:
    """form + shift * I."""
    return HermitianMatrix(form.array + shift * np.eye(form.dim), psd=True)


class PerturbedDesigner:
    """
    Greedy designer for BSs that see a perturbed conditional covariance.

    The first BS of the order compresses against Sigma_x, which is known
    exactly; later BSs draw an error per (BS, step) from the drop seed and
    design either robustly or as if the nominal covariance were exact.
    """

    def __init__(self, seed: int, *, robust: bool) -> None:
        self.seed = seed
        self.robust = robust
        self.samples: dict[tuple[int, int], UncertaintySample] = {}

    def sample(
        self, bs: int, h: ComplexArray, sigma_cond: HermitianMatrix, step: int
    ) -> UncertaintySample:
        sample = sample_uncertainty(h, sigma_cond, seed=(self.seed, bs, step))
        self.samples[(bs, step)] = sample
        return sample

    def __call__(
        self,
        bs: int,
        h: ComplexArray,
        sigma_cond: HermitianMatrix,
        capacity: float,
        step: int,
    ) -> CompressionDesign:
        if step == 0:
            return max_rate_compress(h, sigma_cond, capacity)
        sample = self.sample(bs, h, sigma_cond, step)
        nominal = _shifted(sample.nominal_form, 1.0)
        if not self.robust:
            return max_rate_compress_form(nominal, capacity)
        try:
            design = robust_compress_form(nominal, capacity, sample.bounds)
        except RobustSolverError as e:
            logger.warning(
                "Robust search failed for BS %d at step %d (nearest budget %.6f); "
                "designing for the upper extreme instead",
                bs,
                step,
                e.nearest_budget,
            )
            design = self._upper_extreme(nominal, capacity, sample.bounds)
        if sample.covers_error:
            return design
        # bounds were narrowed below the drawn error: the rate is not guaranteed
        return replace(design, worst_case_rate=None)

    @staticmethod
    def _upper_extreme(
        nominal: HermitianMatrix, capacity: float, bounds: UncertaintyBounds
    ) -> CompressionDesign:
        """Max-Rate design against nominal + lambda_UB I, described at the nominal levels."""
        design = max_rate_compress_form(_shifted(nominal, bounds.upper), capacity)
        nominal_levels = design.eigenvalues - bounds.upper
        guaranteed = worst_case_rate(design.gains, nominal_levels, bounds)
        return replace(
            design,
            eigenvalues=nominal_levels,
            backhaul_used=worst_case_budget(design.gains, nominal_levels, bounds),
            objective=guaranteed,
            worst_case_rate=guaranteed,
        )
