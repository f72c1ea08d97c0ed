from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import linalg

from app.cqregion.constants import CPTP_TOL


class ChannelError(ValueError):
    pass


class InvalidChannelError(ChannelError):
    def __init__(self, message: str, *, max_deviation: float | None = None):
        super().__init__(message)
        self.max_deviation = max_deviation


class ResourceGuardError(ChannelError):
    pass


class ChannelConfigError(ChannelError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _frozen_stack(ops: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    try:
        arr = np.array(ops, dtype=complex)
    except ValueError as e:
        raise InvalidChannelError("Kraus operators must all have the same shape.") from e
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """
    CPTP map ρ ↦ Σ_k K_k ρ K_k†.

    `kraus` is stored as a read-only (n, dim_out, dim_in) stack. Construction
    checks shapes only; trace preservation is checked by `service.validate`.
    """

    kraus: np.ndarray
    dim_in: int
    dim_out: int
    label: str = "kraus"
    descriptor: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        stack = _frozen_stack(self.kraus)
        if stack.ndim != 3 or stack.shape[0] < 1:
            raise InvalidChannelError(f"Kraus list must be a non-empty list of matrices (got shape {stack.shape}).")
        if stack.shape[1:] != (self.dim_out, self.dim_in):
            raise InvalidChannelError(
                f"Kraus operators have shape {stack.shape[1:]}, expected (dim_out, dim_in) = ({self.dim_out}, {self.dim_in})."
            )
        object.__setattr__(self, "kraus", stack)

    @classmethod
    def from_operators(cls, ops: Sequence[np.ndarray], *, label: str = "kraus", descriptor: dict[str, Any] | None = None) -> KrausChannel:
        if not ops:
            raise InvalidChannelError("Kraus list is empty.")
        first = np.asarray(ops[0])
        if first.ndim != 2:
            raise InvalidChannelError("Kraus operators must be matrices.")
        return cls(
            kraus=_frozen_stack(ops),
            dim_in=int(first.shape[1]),
            dim_out=int(first.shape[0]),
            label=label,
            descriptor=dict(descriptor or {"kind": label}),
        )

    @property
    def n_kraus(self) -> int:
        return int(self.kraus.shape[0])

    @property
    def operators(self) -> list[np.ndarray]:
        return [k for k in self.kraus]

    def __repr__(self) -> str:
        return f"KrausChannel({self.label}, {self.dim_in}->{self.dim_out}, n_kraus={self.n_kraus})"


@dataclass(frozen=True, eq=False)
class StinespringIsometry:
    """V: H_in -> H_out ⊗ H_env, output factor first."""

    v: np.ndarray
    dim_in: int
    dim_out: int
    dim_env: int

    def __post_init__(self) -> None:
        if self.v.shape != (self.dim_out * self.dim_env, self.dim_in):
            raise InvalidChannelError(f"Isometry shape {self.v.shape} does not match dims.")
        dev = float(np.max(np.abs(self.v.conj().T @ self.v - np.eye(self.dim_in))))
        if dev > CPTP_TOL:
            raise InvalidChannelError(f"V†V deviates from identity by {dev:.3e}.", max_deviation=dev)


@dataclass(frozen=True, eq=False)
class GeneralizedDephasingSpec:
    """U|i⟩ = |i⟩|φ_i⟩; described by the Gram matrix G_ij = ⟨φ_i|φ_j⟩."""

    gram: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.gram, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
            raise ChannelError(f"Gram matrix must be square with d >= 2 (got {g.shape}).")
        if float(np.max(np.abs(np.diag(g) - 1.0))) > CPTP_TOL:
            raise ChannelError("Gram matrix must have unit diagonal.")
        if float(np.max(np.abs(g - g.conj().T))) > CPTP_TOL:
            raise ChannelError("Gram matrix must be Hermitian.")
        if float(linalg.eigvalsh(0.5 * (g + g.conj().T))[0]) < -CPTP_TOL:
            raise ChannelError("Gram matrix must be positive semidefinite.")
        g = np.array(0.5 * (g + g.conj().T))
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)

    @classmethod
    def from_env_states(cls, states: Sequence[np.ndarray]) -> GeneralizedDephasingSpec:
        vecs = np.array([np.asarray(s, dtype=complex).reshape(-1) for s in states])
        vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
        return cls(vecs.conj() @ vecs.T)

    @classmethod
    def uniform(cls, d: int, overlap: float) -> GeneralizedDephasingSpec:
        g = np.full((d, d), overlap, dtype=complex)
        np.fill_diagonal(g, 1.0)
        return cls(g)

    @property
    def d(self) -> int:
        return int(self.gram.shape[0])


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    max_deviation: float
    dim_in: int
    dim_out: int
    n_kraus: int


@dataclass(frozen=True)
class DegradabilityResult:
    residual: float
    degrading_map: KrausChannel
    certified: bool
    method: str
    restarts: int
