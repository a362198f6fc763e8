"""Density matrices in dense and computational-basis-diagonal form."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qpir.errors import CapacityError, DimensionError

TOL = 1e-9
# Largest dimension the general (eigendecomposition) paths will materialize.
EIGEN_CAP = 1 << 10


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Dense ``dim x dim`` density matrix over the kept registers."""

    matrix: np.ndarray
    registers: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return False

    def to_matrix(self) -> np.ndarray:
        return self.matrix

    def check(self, tol: float = TOL) -> None:
        """Raise ``ValueError`` unless Hermitian, unit trace and PSD within ``tol``."""
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError(f"density matrix trace {np.trace(m).real} != 1")
        if self.dim <= EIGEN_CAP and np.linalg.eigvalsh(m).min() < -tol:
            raise ValueError("density matrix has a negative eigenvalue")


@dataclass(frozen=True, eq=False)
class DiagonalDensityMatrix:
    """Density matrix that is diagonal in the computational basis.

    ``probs`` maps a basis label of the kept registers to its weight; labels
    missing from the map carry weight 0.
    """

    probs: dict[int, float]
    dim: int
    registers: tuple[str, ...] = field(default=())

    @property
    def is_diagonal(self) -> bool:
        return True

    def items(self) -> list[tuple[int, float]]:
        return sorted(self.probs.items())

    def to_matrix(self) -> np.ndarray:
        if self.dim > EIGEN_CAP * 16:
            raise CapacityError(
                f"refusing to materialize a {self.dim}x{self.dim} matrix")
        m = np.zeros((self.dim, self.dim), dtype=complex)
        for label, p in self.probs.items():
            m[label, label] = p
        return m

    def check(self, tol: float = TOL) -> None:
        if any(p < -tol for p in self.probs.values()):
            raise ValueError("negative diagonal entry")
        if any(not 0 <= label < self.dim for label in self.probs):
            raise DimensionError("diagonal label outside the matrix dimension")
        if abs(sum(self.probs.values()) - 1) > tol:
            raise ValueError("diagonal density matrix does not have unit trace")
