"""
Value types for states and subsystem layouts.

Matrices are plain complex128 numpy arrays; a DensityOperator wraps one that
has passed the state checks and is frozen (read-only buffer).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import linalg

from app.cqregion.constants import HERMITIAN_TOL, PSD_TOL, TRACE_TOL


class QCoreError(ValueError):
    pass


class ValidationError(QCoreError):
    pass


class DimensionError(QCoreError):
    pass


class DomainError(QCoreError):
    pass


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _frozen(m: np.ndarray) -> np.ndarray:
    arr = np.array(m, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionError(f"Density operator must be a non-empty square matrix (got shape {m.shape}).")
        herm_dev = float(np.max(np.abs(m - m.conj().T)))
        if herm_dev > HERMITIAN_TOL:
            raise ValidationError(f"Matrix is not Hermitian (max deviation {herm_dev:.3e}).")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"Trace must be 1 (got {tr.real:.12g}{tr.imag:+.3g}j).")
        object.__setattr__(self, "matrix", _frozen(hermitize(m)))
        if self.spectrum[0] < -PSD_TOL:
            raise ValidationError(f"Matrix is not positive semidefinite (min eigenvalue {self.spectrum[0]:.3e}).")

    @classmethod
    def from_matrix(cls, m: np.ndarray, *, renormalize: bool = False) -> DensityOperator:
        """Hermitize (and optionally trace-normalize) before validating."""
        arr = hermitize(np.asarray(m, dtype=complex))
        if renormalize:
            tr = float(np.trace(arr).real)
            if tr <= 0:
                raise ValidationError(f"Cannot renormalize matrix with trace {tr:.3e}.")
            arr = arr / tr
        return cls(arr)

    @classmethod
    def from_ket(cls, v: Sequence[complex] | np.ndarray) -> DensityOperator:
        psi = np.asarray(v, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(psi))
        if norm == 0:
            raise ValidationError("Zero vector is not a state.")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Ascending eigenvalues."""
        return linalg.eigvalsh(self.matrix)

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim})"


@dataclass(frozen=True)
class SystemLayout:
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise DimensionError("Layout needs at least one subsystem.")
        if any(d < 1 for d in dims):
            raise DimensionError(f"All subsystem dimensions must be >= 1 (got {dims}).")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def of(cls, *dims: int) -> SystemLayout:
        return cls(tuple(dims))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def check(self, dim: int) -> None:
        if self.total != dim:
            raise DimensionError(f"Layout {list(self.dims)} indexes dimension {self.total}, operator has {dim}.")
