"""
Named channels.

Conventions:
- dephasing_qubit(q) applies σ_z with probability q (coherences scale by 1 − 2q).
- erasure(p, d) maps dimension d to d + 1; the last basis vector is the erasure flag.
- depolarizing(p) is the qubit Pauli channel (1 − p)ρ + (p/3)(XρX + YρY + ZρZ).
"""
from __future__ import annotations

import math

import numpy as np
from scipy import linalg

from app.cqregion.modules.channel.models import ChannelError, GeneralizedDephasingSpec, KrausChannel

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _check_prob(name: str, p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"{name} must be in [0, 1] (got {p}).")
    return p


def _check_dim(d: int, *, minimum: int = 2) -> int:
    d = int(d)
    if d < minimum:
        raise ChannelError(f"dimension must be >= {minimum} (got {d}).")
    return d


def identity(d: int = 2) -> KrausChannel:
    d = _check_dim(d, minimum=1)
    return KrausChannel.from_operators([np.eye(d, dtype=complex)], label="identity", descriptor={"kind": "identity", "dim": d})


def dephasing_qubit(q: float) -> KrausChannel:
    q = _check_prob("q", q)
    ops = [math.sqrt(1.0 - q) * PAULI_I, math.sqrt(q) * PAULI_Z]
    return KrausChannel.from_operators(ops, label=f"dephasing(q={q:g})", descriptor={"kind": "dephasing", "dim": 2, "param": q})


def generalized_dephasing(spec: GeneralizedDephasingSpec) -> KrausChannel:
    """K_k = diag(Φ[k, :]) with Φ†Φ = G, so U|i⟩ = |i⟩|φ_i⟩."""
    w, u = linalg.eigh(spec.gram)
    w = np.clip(w, 0.0, None)
    phi = np.sqrt(w)[:, None] * u.conj().T
    keep = w > 1e-14
    ops = [np.diag(row) for row in phi[keep]]
    return KrausChannel.from_operators(
        ops,
        label=f"generalized_dephasing(d={spec.d})",
        descriptor={"kind": "generalized_dephasing", "dim": spec.d},
    )


def depolarizing(p: float) -> KrausChannel:
    p = _check_prob("p", p)
    w = math.sqrt(p / 3.0)
    ops = [math.sqrt(1.0 - p) * PAULI_I, w * PAULI_X, w * PAULI_Y, w * PAULI_Z]
    return KrausChannel.from_operators(ops, label=f"depolarizing(p={p:g})", descriptor={"kind": "depolarizing", "dim": 2, "param": p})


def erasure(p: float, d: int = 2) -> KrausChannel:
    p = _check_prob("p", p)
    d = _check_dim(d)
    keep = np.zeros((d + 1, d), dtype=complex)
    keep[:d, :d] = math.sqrt(1.0 - p) * np.eye(d)
    ops = [keep]
    for i in range(d):
        k = np.zeros((d + 1, d), dtype=complex)
        k[d, i] = math.sqrt(p)
        ops.append(k)
    return KrausChannel.from_operators(ops, label=f"erasure(p={p:g}, d={d})", descriptor={"kind": "erasure", "dim": d, "param": p})


def completely_dephasing(d: int = 2) -> KrausChannel:
    d = _check_dim(d)
    ops = []
    for i in range(d):
        k = np.zeros((d, d), dtype=complex)
        k[i, i] = 1.0
        ops.append(k)
    return KrausChannel.from_operators(ops, label=f"completely_dephasing(d={d})", descriptor={"kind": "completely_dephasing", "dim": d})


def trine() -> KrausChannel:
    """Qutrit-to-qubit channel {|0⟩⟨0|, |ε+⟩⟨1|, |ε−⟩⟨2|}, ε± = ½|0⟩ ± (√3/2)|1⟩."""
    e0 = np.array([1.0, 0.0], dtype=complex)
    e_plus = np.array([0.5, math.sqrt(3.0) / 2.0], dtype=complex)
    e_minus = np.array([0.5, -math.sqrt(3.0) / 2.0], dtype=complex)
    ops = []
    for i, out in enumerate((e0, e_plus, e_minus)):
        k = np.zeros((2, 3), dtype=complex)
        k[:, i] = out
        ops.append(k)
    return KrausChannel.from_operators(ops, label="trine", descriptor={"kind": "trine", "dim": 3})
