"""
Dense complex-matrix and state primitives.

All logarithms are base 2. Functions accept either a DensityOperator or a raw
numpy array where noted and never mutate their inputs.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import linalg, special, stats

from app.cqregion.constants import EIGEN_ZERO, PSD_TOL
from app.cqregion.modules.qcore.models import (
    DensityOperator,
    DimensionError,
    DomainError,
    SystemLayout,
    ValidationError,
)

_LN2 = math.log(2.0)

StateLike = DensityOperator | np.ndarray


def _as_array(x: StateLike) -> np.ndarray:
    if isinstance(x, DensityOperator):
        return x.matrix
    return np.asarray(x, dtype=complex)


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"Dimension mismatch: {a.shape} vs {b.shape}.")


def tensor(a: StateLike, b: StateLike) -> np.ndarray:
    return np.kron(_as_array(a), _as_array(b))


def partial_trace(m: StateLike, layout: SystemLayout, keep: Sequence[int]) -> np.ndarray:
    """Reduced operator on the `keep` subsystems (kept in layout order)."""
    arr = _as_array(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"partial_trace needs a square matrix (got {arr.shape}).")
    layout.check(arr.shape[0])
    dims = layout.dims
    n = len(dims)
    keep_set = set(int(k) for k in keep)
    if any(k < 0 or k >= n for k in keep_set):
        raise DimensionError(f"keep indices {sorted(keep_set)} out of range for {n} subsystems.")

    t = arr.reshape(dims + dims)
    remaining = n
    # Descending so lower axis positions stay put.
    for i in reversed(range(n)):
        if i in keep_set:
            continue
        t = np.trace(t, axis1=i, axis2=i + remaining)
        remaining -= 1
    d_keep = int(np.prod([dims[i] for i in sorted(keep_set)])) if keep_set else 1
    return np.asarray(t).reshape(d_keep, d_keep)


def _clamped_spectrum(eigs: np.ndarray) -> np.ndarray:
    if eigs.size and float(np.min(eigs)) < -PSD_TOL:
        raise ValidationError(f"Operator is not positive semidefinite (min eigenvalue {float(np.min(eigs)):.3e}).")
    return np.where(eigs < EIGEN_ZERO, 0.0, eigs)


def entropy(rho: StateLike) -> float:
    """Von Neumann entropy in bits."""
    if isinstance(rho, DensityOperator):
        eigs = rho.spectrum
    else:
        arr = _as_array(rho)
        eigs = linalg.eigvalsh(0.5 * (arr + arr.conj().T))
    lam = _clamped_spectrum(eigs)
    return float(np.sum(special.entr(lam)) / _LN2)


def entropies(stack: np.ndarray) -> np.ndarray:
    """
    Batched entropies of a (..., d, d) stack of Hermitian matrices.

    Used on optimizer iterates: small negative drift is clipped rather than
    rejected.
    """
    eigs = np.linalg.eigvalsh(stack)
    eigs = np.where(eigs < EIGEN_ZERO, 0.0, eigs)
    return np.sum(special.entr(eigs), axis=-1) / _LN2


def shannon_entropy(p: Sequence[float] | np.ndarray) -> float:
    arr = np.asarray(p, dtype=float)
    arr = np.where(arr < EIGEN_ZERO, 0.0, arr)
    return float(np.sum(special.entr(arr)) / _LN2)


def binary_entropy(mu: float) -> float:
    mu = float(mu)
    if not 0.0 <= mu <= 1.0:
        raise DomainError(f"binary_entropy needs 0 <= mu <= 1 (got {mu}).")
    hi = max(mu, 1.0 - mu)
    lo = 1.0 - hi
    return float((special.entr(lo) + special.entr(hi)) / _LN2)


def psd_sqrt(m: StateLike) -> np.ndarray:
    arr = _as_array(m)
    w, v = linalg.eigh(0.5 * (arr + arr.conj().T))
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def fidelity(rho: StateLike, sigma: StateLike) -> float:
    """F = ||sqrt(rho) sqrt(sigma)||_1^2 (squared convention)."""
    a, b = _as_array(rho), _as_array(sigma)
    _same_dim(a, b)
    sv = linalg.svdvals(psd_sqrt(a) @ psd_sqrt(b))
    return float(np.clip(np.sum(sv) ** 2, 0.0, 1.0))


def trace_distance(rho: StateLike, sigma: StateLike) -> float:
    a, b = _as_array(rho), _as_array(sigma)
    _same_dim(a, b)
    diff = a - b
    eigs = linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(np.clip(0.5 * np.sum(np.abs(eigs)), 0.0, 1.0))


def purify(rho: StateLike) -> np.ndarray:
    """
    Canonical purification on reference ⊗ system: (1 ⊗ sqrt(rho)) Σ_i |i⟩|i⟩.

    Tracing out the reference (layout [d, d], keep=[1]) returns rho.
    """
    s = psd_sqrt(rho)
    return np.ascontiguousarray(s.T).reshape(-1)


def ket(index: int, dim: int) -> np.ndarray:
    if not 0 <= index < dim:
        raise DimensionError(f"Basis index {index} out of range for dimension {dim}.")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(v: Sequence[complex] | np.ndarray) -> np.ndarray:
    psi = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim, dtype=complex) / dim)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary."""
    if dim == 1:
        return np.ones((1, 1), dtype=complex)
    return np.asarray(stats.unitary_group.rvs(dim, random_state=rng), dtype=complex)


def random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rng: np.random.Generator, *, rank: int | None = None) -> DensityOperator:
    """Ginibre-distributed density operator of the given rank (full by default)."""
    k = dim if rank is None else int(rank)
    if not 1 <= k <= dim:
        raise DomainError(f"rank must be in [1, {dim}] (got {k}).")
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    m = g @ g.conj().T
    return DensityOperator.from_matrix(m, renormalize=True)
