from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from app.cqregion.constants import PROB_PRUNE, TRACE_TOL
from app.cqregion.modules.qcore.models import DensityOperator


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Ensemble:
    """
    Finite ensemble {p_x, ρ_x} on the channel input. Members are reduced
    states ρ_x = φ_x^{A′}; the reference A is recovered by purification.
    """

    probs: np.ndarray
    states: tuple[DensityOperator, ...]

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=float).reshape(-1)
        states = tuple(self.states)
        if p.size == 0 or p.size != len(states):
            raise EnsembleError(f"Ensemble needs matching non-empty probabilities and states ({p.size} vs {len(states)}).")
        if np.any(p < 0):
            raise EnsembleError("Probabilities must be nonnegative.")
        if abs(float(np.sum(p)) - 1.0) > TRACE_TOL:
            raise EnsembleError(f"Probabilities must sum to 1 (got {float(np.sum(p)):.12g}).")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise EnsembleError(f"All members must share the input dimension (got {sorted(dims)}).")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", states)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, DensityOperator]]) -> Ensemble:
        items = list(pairs)
        return cls(np.array([p for p, _ in items], dtype=float), tuple(s for _, s in items))

    @classmethod
    def from_arrays(cls, probs: Sequence[float] | np.ndarray, rhos: np.ndarray) -> Ensemble:
        p = np.asarray(probs, dtype=float)
        p = p / np.sum(p)
        return cls(p, tuple(DensityOperator.from_matrix(r, renormalize=True) for r in rhos))

    @property
    def cardinality(self) -> int:
        return int(self.probs.size)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def entries(self) -> Iterator[tuple[float, DensityOperator]]:
        return zip((float(p) for p in self.probs), self.states)

    def stack(self) -> np.ndarray:
        return np.array([s.matrix for s in self.states])

    def average(self) -> np.ndarray:
        return np.einsum("x,xab->ab", self.probs, self.stack())

    def prune(self, tol: float = PROB_PRUNE) -> Ensemble:
        """Drop members with p_x < tol and renormalize."""
        keep = self.probs >= tol
        if not np.any(keep):
            raise EnsembleError("Pruning would remove every member.")
        if np.all(keep):
            return self
        p = self.probs[keep]
        return Ensemble(p / np.sum(p), tuple(s for s, k in zip(self.states, keep) if k))

    def __repr__(self) -> str:
        return f"Ensemble(cardinality={self.cardinality}, dim={self.dim})"


@dataclass(frozen=True)
class InfoBreakdown:
    holevo: float
    avg_coherent: float
    cond_mutual: float
    neg_cond_entropy: float


@dataclass(frozen=True, eq=False)
class MemberEntropies:
    """
    Per-member entropies of σ^{XAB(E)} plus the average output entropy.

    Fields may carry leading batch axes (one ensemble per batch entry); the
    derived quantities are then arrays over the batch, floats otherwise.
    """

    probs: np.ndarray
    input: np.ndarray
    output: np.ndarray
    environment: np.ndarray
    average_output: float | np.ndarray

    def _weighted(self, values: np.ndarray) -> float | np.ndarray:
        v = np.sum(self.probs * values, axis=-1)
        return float(v) if np.ndim(v) == 0 else v

    @property
    def holevo(self) -> float | np.ndarray:
        return self.average_output - self._weighted(self.output)

    @property
    def avg_coherent(self) -> float | np.ndarray:
        return self._weighted(self.output - self.environment)

    @property
    def cond_mutual(self) -> float | np.ndarray:
        return self._weighted(self.input + self.output - self.environment)

    @property
    def neg_cond_entropy(self) -> float | np.ndarray:
        return -self._weighted(self.input)
