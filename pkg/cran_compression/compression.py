"""
Closed-form single-BS compression designs.

Both families diagonalize a received-signal covariance (the conditional KLT)
and allocate per-stream gains by water-filling against the backhaul budget:

* Max-Rate maximizes I(x; y_hat | side information);
* MMSE minimizes the distortion of the signal itself (direct) or of the
  MMSE estimate of x (indirect), with or without side information.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize

from .errors import InvalidInputError, NumericalError
from .hermitian import (
    ComplexArray,
    HermitianMatrix,
    MatrixLike,
    RealArray,
    as_hermitian,
    congruence,
    eig_desc,
)
from .rates import CompressionDesign, net_rate, received_form
from .schemes import CompressionScheme, MmseTarget

logger = logging.getLogger(__name__)

SIGNAL_FLOOR = 1e-12
"""Signal power (lambda - 1 for Max-Rate, lambda for MMSE) below which a stream gets no gain."""

_MIN_LEVEL = 1e-300


def _check_capacity(capacity: float) -> float:
    c = float(capacity)
    if not np.isfinite(c) or c < 0.0:
        raise InvalidInputError(f"backhaul capacity must be finite and nonnegative, got {capacity}")
    return c


def solve_water_level(
    budget: Callable[[float], float],
    capacity: float,
    upper: float,
) -> float:
    """
    Find mu in (0, upper) with budget(mu) = capacity for a decreasing budget curve.

    The bracket is expanded geometrically toward zero before running brentq.

    Raises:
        NumericalError: If no bracket is found above the smallest positive level.
    """
    lower = 0.5 * upper
    while budget(lower) < capacity:
        lower *= 1e-3
        if lower < _MIN_LEVEL:
            raise NumericalError(f"water level for a budget of {capacity} bits underflows")
    if budget(lower) == capacity:
        return lower
    level: float = optimize.brentq(
        lambda mu: budget(mu) - capacity,
        lower,
        upper,
        xtol=_MIN_LEVEL,
        rtol=4.0 * np.finfo(np.float64).eps,
        maxiter=500,
    )
    return level


def max_rate_gains(eigenvalues: ArrayLike, mu: float) -> RealArray:
    """Gains alpha_l = [(1/mu)(1 - 1/lambda_l) - 1]^+."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    signal = np.clip(1.0 - 1.0 / lam, 0.0, None)
    gains: RealArray = np.clip(signal / mu - 1.0, 0.0, None)
    return gains


def mmse_gains(eigenvalues: ArrayLike, mu: float) -> RealArray:
    """Gains alpha_l = [1/mu - 1/lambda_l]^+ (zero on null streams)."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    signal = lam > SIGNAL_FLOOR
    safe = np.where(signal, lam, 1.0)
    gains: RealArray = np.where(signal, np.clip(1.0 / mu - 1.0 / safe, 0.0, None), 0.0)
    return gains


def stream_budget(gains: ArrayLike, eigenvalues: ArrayLike) -> float:
    """sum_l log2(1 + alpha_l lambda_l)."""
    a = np.asarray(gains, dtype=np.float64)
    lam = np.clip(np.asarray(eigenvalues, dtype=np.float64), 0.0, None)
    return float(np.sum(np.log2(1.0 + a * lam)))


def max_rate_compress_form(form: MatrixLike, capacity: float) -> CompressionDesign:
    """
    Max-Rate design from the received-signal form H Sigma_cond H^H + I.

    Args:
        form: Received-signal covariance given the side information.
        capacity: Backhaul budget C in bits.

    Returns:
        Design with Omega = U diag(alpha) U^H; `objective` is the net rate
        sum_l log2(1 + alpha_l lambda_l) - log2(1 + alpha_l).
    """
    c = _check_capacity(capacity)
    pair = eig_desc(as_hermitian(form, psd=True))
    lam = np.clip(pair.values, 1.0, None)
    n_b = lam.size
    signal = 1.0 - 1.0 / lam
    top = float(signal[0]) if n_b else 0.0
    if c == 0.0 or top <= SIGNAL_FLOOR:
        if c > 0.0:
            logger.warning("Max-Rate design on a zero channel: forwarding nothing")
        design = CompressionDesign.from_eigen(
            pair.basis, np.zeros(n_b), lam, mu=top, no_signal=c > 0.0
        )
        return design

    def budget(mu: float) -> float:
        return stream_budget(max_rate_gains(lam, mu), lam)

    mu = solve_water_level(budget, c, top)
    gains = max_rate_gains(lam, mu)
    used = stream_budget(gains, lam)
    objective = used - float(np.sum(np.log2(1.0 + gains)))
    logger.debug("Max-Rate water level mu=%.6g, %d active streams", mu, int(np.sum(gains > 0)))
    return CompressionDesign.from_eigen(
        pair.basis, gains, lam, mu=mu, backhaul_used=used, objective=max(0.0, objective)
    )


def max_rate_compress(h: ArrayLike, sigma_cond: MatrixLike, capacity: float) -> CompressionDesign:
    """
    Max-Rate compression of one BS given the side information.

    Passing Sigma_x as `sigma_cond` gives the design that ignores side
    information.
    """
    return max_rate_compress_form(received_form(h, sigma_cond), capacity)


@dataclass(frozen=True)
class MmseVariant:
    """Target and side-information use of an MMSE compressor."""

    target: MmseTarget
    side_info: bool

    @classmethod
    def from_scheme(cls, scheme: CompressionScheme) -> MmseVariant:
        target = scheme.mmse_target
        if target is None:
            raise InvalidInputError(f"{scheme.value} is not an MMSE scheme")
        return cls(target=target, side_info=scheme.uses_side_info)


def mmse_preprocessing(h: ArrayLike, sigma_x: MatrixLike, target: MmseTarget) -> ComplexArray:
    """
    Pre-processing matrix P: identity (direct) or Sigma_x H^H (H Sigma_x H^H + I)^{-1} (indirect).
    """
    hm = np.atleast_2d(np.asarray(h, dtype=np.complex128))
    if target is MmseTarget.DIRECT:
        return np.eye(hm.shape[0], dtype=np.complex128)
    sx = as_hermitian(sigma_x, psd=True).array
    received = received_form(hm, sx).array
    # P = Sigma_x H^H R^{-1}, solved from R P^H = H Sigma_x
    p_h = np.linalg.solve(received, hm @ sx)
    result: ComplexArray = p_h.conj().T
    return result


def mmse_compress(
    h: ArrayLike,
    sigma_x: MatrixLike,
    sigma_cond: MatrixLike,
    capacity: float,
    variant: MmseVariant,
) -> CompressionDesign:
    """
    MMSE compression of one BS.

    The gains are allocated on the eigen-decomposition of P S P^H, where S is the
    received-signal covariance given the side information (SI variants) or
    without it (NSI variants); Omega = P^H U diag(alpha) U^H P.

    The `objective` of the returned design is its net rate against
    `sigma_cond`, so MMSE candidates are ranked by rate in the greedy ordering.
    """
    c = _check_capacity(capacity)
    hm = np.atleast_2d(np.asarray(h, dtype=np.complex128))
    p = mmse_preprocessing(hm, sigma_x, variant.target)
    reference = sigma_cond if variant.side_info else sigma_x
    form = congruence(p, received_form(hm, reference))
    pair = eig_desc(form)
    lam = np.clip(pair.values, 0.0, None)
    top = float(lam[0]) if lam.size else 0.0

    if c == 0.0 or top <= SIGNAL_FLOOR:
        if c > 0.0:
            logger.warning("MMSE design on a zero channel: forwarding nothing")
        gains = np.zeros(lam.size)
        mu = top
    else:

        def budget(level: float) -> float:
            return stream_budget(mmse_gains(lam, level), lam)

        mu = solve_water_level(budget, c, top)
        gains = mmse_gains(lam, mu)

    gain = np.sqrt(gains)[:, None] * (pair.basis.conj().T @ p)
    omega = HermitianMatrix(gain.conj().T @ gain, psd=True)
    design = CompressionDesign(
        omega=omega,
        gain=np.asarray(gain, dtype=np.complex128),
        basis=pair.basis,
        gains=gains,
        eigenvalues=lam,
        mu=mu,
        backhaul_used=stream_budget(gains, lam),
        objective=net_rate(omega, hm, sigma_cond) if np.any(gains > 0) else 0.0,
        no_signal=c > 0.0 and top <= SIGNAL_FLOOR,
    )
    logger.debug("MMSE %s design: mu=%.6g", variant, mu)
    return design


def design_compression(
    scheme: CompressionScheme,
    h: ArrayLike,
    sigma_x: MatrixLike,
    sigma_cond: MatrixLike,
    capacity: float,
) -> CompressionDesign:
    """
    Design the compression of one BS with a named scheme.

    Designs that ignore side information are built against Sigma_x but ranked
    (their `objective`) by the net rate they achieve given the side information.
    """
    if scheme.is_mmse:
        return mmse_compress(h, sigma_x, sigma_cond, capacity, MmseVariant.from_scheme(scheme))
    if scheme.uses_side_info:
        return max_rate_compress(h, sigma_cond, capacity)
    design = max_rate_compress(h, sigma_x, capacity)
    if design.is_zero:
        return design
    return replace(design, objective=net_rate(design.omega, h, sigma_cond))
