"""
Numerical primitives on complex Hermitian matrices.

Every covariance in the simulator (transmit covariance, conditional
covariances, compression covariances, uncertainty forms) is carried as a
`HermitianMatrix`. The helpers here are the only place where eigensolvers and
log-determinants are called directly.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .errors import InvalidInputError, NumericalError

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
RealArray = NDArray[np.float64]

PSD_TOLERANCE = 1e-9
"""Eigenvalues in [-tol * max(1, ||M||), 0) are clamped to zero; lower ones are an error."""

LN2 = math.log(2.0)


class HermitianMatrix:
    """
    Immutable complex Hermitian matrix.

    The entries are symmetrized as (M + M^H) / 2 on construction. A PSD-tagged
    instance additionally has its small negative eigenvalues clamped to zero.
    """

    __slots__ = ("_data", "_psd")

    def __init__(self, entries: ArrayLike, *, psd: bool = False) -> None:
        data = np.array(entries, dtype=np.complex128)
        if data.ndim == 0:
            data = data.reshape(1, 1)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise InvalidInputError(f"Hermitian matrix must be square, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("Hermitian matrix has non-finite entries")
        data = 0.5 * (data + data.conj().T)
        if psd and data.shape[0] > 0:
            data = _clamp_psd(data)
        data.setflags(write=False)
        self._data: ComplexArray = data
        self._psd = psd

    @classmethod
    def identity(cls, dim: int, scale: float = 1.0) -> HermitianMatrix:
        """Return scale * I of the given dimension."""
        return cls(scale * np.eye(dim), psd=scale >= 0)

    @classmethod
    def zeros(cls, dim: int) -> HermitianMatrix:
        return cls(np.zeros((dim, dim)), psd=True)

    @classmethod
    def diagonal(cls, values: ArrayLike) -> HermitianMatrix:
        diag = np.asarray(values, dtype=np.float64)
        return cls(np.diag(diag), psd=bool(np.all(diag >= 0)))

    @property
    def array(self) -> ComplexArray:
        """Read-only view of the entries."""
        return self._data

    @property
    def dim(self) -> int:
        return int(self._data.shape[0])

    @property
    def is_psd(self) -> bool:
        return self._psd

    def trace(self) -> float:
        return float(np.real(np.trace(self._data)))

    def __repr__(self) -> str:
        tag = ", psd=True" if self._psd else ""
        return f"HermitianMatrix(dim={self.dim}{tag})"


MatrixLike = HermitianMatrix | ArrayLike


@dataclass(frozen=True)
class EigenPair:
    """Eigen-decomposition with eigenvalues sorted in non-increasing order."""

    basis: ComplexArray
    """Unitary matrix whose columns are the eigenvectors."""

    values: RealArray
    """Real eigenvalues, largest first."""

    def reconstruct(self) -> HermitianMatrix:
        """Return U diag(values) U^H."""
        return HermitianMatrix((self.basis * self.values) @ self.basis.conj().T)


def as_array(matrix: MatrixLike) -> ComplexArray:
    """Return the entries of a HermitianMatrix or any array-like as complex128."""
    if isinstance(matrix, HermitianMatrix):
        return matrix.array
    arr = np.asarray(matrix, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    return arr


def as_hermitian(matrix: MatrixLike, *, psd: bool = False) -> HermitianMatrix:
    if isinstance(matrix, HermitianMatrix) and (matrix.is_psd or not psd):
        return matrix
    return HermitianMatrix(as_array(matrix), psd=psd)


def _clamp_psd(data: ComplexArray) -> ComplexArray:
    values, basis = linalg.eigh(data)
    floor = -PSD_TOLERANCE * max(1.0, float(np.max(np.abs(values))))
    if values[0] < floor:
        raise InvalidInputError(
            f"matrix is not positive semidefinite: minimum eigenvalue {values[0]:.3e}"
        )
    if values[0] >= 0:
        return data
    clamped = np.clip(values, 0.0, None)
    rebuilt: ComplexArray = (basis * clamped) @ basis.conj().T
    return 0.5 * (rebuilt + rebuilt.conj().T)


def eig_desc(matrix: MatrixLike) -> EigenPair:
    """
    Eigen-decompose a Hermitian matrix with eigenvalues in non-increasing order.

    Raises:
        InvalidInputError: If the matrix has non-finite entries.
    """
    data = as_hermitian(matrix).array
    if data.shape[0] == 0:
        return EigenPair(basis=np.zeros((0, 0), dtype=np.complex128), values=np.zeros(0))
    values, basis = linalg.eigh(data)
    order = np.argsort(values)[::-1]
    return EigenPair(
        basis=np.ascontiguousarray(basis[:, order], dtype=np.complex128),
        values=np.ascontiguousarray(values[order], dtype=np.float64),
    )


def congruence(factor: ArrayLike, matrix: MatrixLike) -> HermitianMatrix:
    """Return F M F^H as a Hermitian matrix (PSD when M is)."""
    f = np.atleast_2d(np.asarray(factor, dtype=np.complex128))
    m = as_hermitian(matrix)
    return HermitianMatrix(f @ m.array @ f.conj().T, psd=m.is_psd)


def log2det(matrix: MatrixLike) -> float:
    """
    Base-2 log-determinant of a positive definite Hermitian matrix.

    Raises:
        NumericalError: If the matrix is not positive definite.
    """
    data = as_hermitian(matrix).array
    if data.shape[0] == 0:
        return 0.0
    try:
        chol = linalg.cholesky(data, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError("log-determinant of a matrix that is not positive definite") from e
    return float(2.0 * np.sum(np.log(np.abs(np.diag(chol)))) / LN2)


def log2det_nonsymmetric(matrix: ArrayLike) -> float:
    """
    Base-2 log-determinant of a square matrix with a positive real determinant.

    Used for products such as I + S M with S, M PSD, which are similar to a
    Hermitian positive definite matrix but not Hermitian themselves.
    """
    data = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
    if data.shape[0] == 0:
        return 0.0
    sign, logabs = np.linalg.slogdet(data)
    if abs(sign - 1.0) > 1e-6:
        raise NumericalError(f"determinant is not positive real (sign {sign})")
    return float(logabs / LN2)


def logdet_cap(matrix: MatrixLike) -> float:
    """
    Return log2 det(I + M) in bits.

    Raises:
        NumericalError: If I + M is not positive definite.
    """
    data = as_hermitian(matrix).array
    return log2det(np.eye(data.shape[0]) + data)


def cond_cov(
    sigma_x: MatrixLike,
    stacked: ArrayLike,
    noise_cov: MatrixLike,
) -> HermitianMatrix:
    """
    Conditional covariance of x given observations H_bar x + t, t ~ CN(0, Sigma_t).

    Sigma_x - Sigma_x H_bar^H (H_bar Sigma_x H_bar^H + Sigma_t)^{-1} H_bar Sigma_x

    Args:
        sigma_x: Prior covariance of x (n x n).
        stacked: Stacked effective channels H_bar (k x n); k = 0 means no conditioning.
        noise_cov: Block-diagonal observation noise covariance Sigma_t (k x k).

    Raises:
        NumericalError: If the innovation covariance is singular.
    """
    sx = as_hermitian(sigma_x, psd=True)
    h_bar = np.asarray(stacked, dtype=np.complex128)
    if h_bar.size == 0:
        return sx
    h_bar = np.atleast_2d(h_bar)
    sigma_t = as_array(noise_cov)
    if h_bar.shape[1] != sx.dim or sigma_t.shape != (h_bar.shape[0], h_bar.shape[0]):
        raise InvalidInputError(
            f"incompatible shapes: Sigma_x {sx.array.shape}, H_bar {h_bar.shape}, "
            f"Sigma_t {sigma_t.shape}"
        )
    cross = h_bar @ sx.array
    innovation = cross @ h_bar.conj().T + sigma_t
    innovation = 0.5 * (innovation + innovation.conj().T)
    try:
        factor = linalg.cho_factor(innovation, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError("innovation covariance is singular") from e
    gain = linalg.cho_solve(factor, cross)
    return HermitianMatrix(sx.array - cross.conj().T @ gain, psd=True)


def factor_gain(omega: MatrixLike) -> ComplexArray:
    """
    Factor a PSD compression covariance as Omega = A^H A with A = diag(sqrt(alpha)) U^H.
    """
    pair = eig_desc(as_hermitian(omega, psd=True))
    gains = np.sqrt(np.clip(pair.values, 0.0, None))
    factor: ComplexArray = gains[:, None] * pair.basis.conj().T
    return factor


def block_diagonal(blocks: Sequence[ArrayLike]) -> ComplexArray:
    """Block-diagonal stack of square blocks (empty sequence gives a 0 x 0 matrix)."""
    if not blocks:
        return np.zeros((0, 0), dtype=np.complex128)
    result: ComplexArray = np.asarray(
        linalg.block_diag(*[np.atleast_2d(np.asarray(b)) for b in blocks]),
        dtype=np.complex128,
    )
    return result
