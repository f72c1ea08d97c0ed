from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Any

from app.cqregion.constants import (
    DEFAULT_DEGRADABILITY_RESTARTS,
    DEFAULT_FD_STEP,
    DEFAULT_LAMBDA_GRID,
    DEFAULT_MAX_ITERS,
    DEFAULT_REFINE_ROUNDS,
    DEFAULT_RESTARTS,
    DEFAULT_SEED,
    DEFAULT_STALL_WINDOW,
    DEFAULT_TOL,
    FLAT_REGION_MIN_R,
    TAG_LAMBDA,
)
from app.cqregion.modules.infoquant.models import Ensemble


class RegionError(ValueError):
    pass


class StructuralError(RegionError):
    pass


class MissingEnsembleError(RegionError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = DEFAULT_RESTARTS
    seed: int = DEFAULT_SEED
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    # None -> dim_in² + 2 (or d + 2 for diagonal-member searches)
    cardinality: int | None = None
    fd_step: float = DEFAULT_FD_STEP
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    stall_window: int = DEFAULT_STALL_WINDOW
    degradability_restarts: int = DEFAULT_DEGRADABILITY_RESTARTS
    tensor_power: int = 1
    threads: int = 0
    # chord-slope passes sweep_curve runs after the grid; 0 keeps the grid only
    refine_rounds: int = DEFAULT_REFINE_ROUNDS

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise RegionError(f"restarts must be >= 1 (got {self.restarts}).")
        if self.cardinality is not None and self.cardinality < 1:
            raise RegionError(f"cardinality must be >= 1 (got {self.cardinality}).")
        if not self.tol > 0:
            raise RegionError(f"tol must be > 0 (got {self.tol}).")
        if self.max_iters < 1:
            raise RegionError(f"max_iters must be >= 1 (got {self.max_iters}).")
        if not self.fd_step > 0:
            raise RegionError(f"fd_step must be > 0 (got {self.fd_step}).")
        if self.seed < 0 or self.seed >= 2**64:
            raise RegionError(f"seed must be a 64-bit unsigned integer (got {self.seed}).")
        if self.degradability_restarts < 1:
            raise RegionError(f"degradability_restarts must be >= 1 (got {self.degradability_restarts}).")
        if self.tensor_power < 1:
            raise RegionError(f"tensor_power must be >= 1 (got {self.tensor_power}).")
        if self.threads < 0:
            raise RegionError(f"threads must be >= 0 (got {self.threads}).")
        if self.refine_rounds < 0:
            raise RegionError(f"refine_rounds must be >= 0 (got {self.refine_rounds}).")
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid:
            raise RegionError("lambda_grid must not be empty.")
        if any(v < 1.0 for v in grid):
            raise RegionError("lambda_grid values must be >= 1.")
        if list(grid) != sorted(grid):
            raise RegionError("lambda_grid must be sorted ascending.")
        object.__setattr__(self, "lambda_grid", grid)

    def resolved_cardinality(self, dim_in: int) -> int:
        return self.cardinality if self.cardinality is not None else dim_in * dim_in + 2

    def with_(self, **changes: Any) -> OptimizerConfig:
        return replace(self, **changes)

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d["lambda_grid"] = list(self.lambda_grid)
        return d


@dataclass(frozen=True, eq=False)
class RatePoint:
    lam: float | None
    r: float
    R: float
    objective: float | None
    ensemble: Ensemble | None = None
    tag: str = TAG_LAMBDA
    cardinality_used: int = 0
    converged: bool = True

    @property
    def lambda_label(self) -> str:
        return self.tag if self.lam is None or self.tag != TAG_LAMBDA else repr(self.lam)


@dataclass(frozen=True, eq=False)
class TradeoffCurve:
    """Upper envelope ordered by decreasing R."""

    points: tuple[RatePoint, ...]
    channel: dict[str, Any] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)

    def pairs(self) -> list[tuple[float, float]]:
        return [(p.r, p.R) for p in self.points]


@dataclass(frozen=True)
class CardinalityReport:
    lam: float
    small_cardinality: int
    large_cardinality: int
    small_objective: float
    large_objective: float

    @property
    def gap(self) -> float:
        return abs(self.large_objective - self.small_objective)


@dataclass(frozen=True)
class FlatRegionReport:
    q1: float
    target_R: float
    best_r: float
    best_R: float

    @property
    def found(self) -> bool:
        return self.best_R >= self.target_R and self.best_r > FLAT_REGION_MIN_R


@dataclass(frozen=True)
class TradeoffBounds:
    """Time-sharing inner segment and the r + R ≤ C outer segment."""

    C: float
    Q: float

    def __post_init__(self) -> None:
        if self.C < 0 or self.Q < 0:
            raise RegionError(f"Capacities must be nonnegative (got C={self.C}, Q={self.Q}).")

    def time_sharing(self, r: float) -> float:
        if self.C == 0:
            if r > 0:
                raise RegionError("Time-sharing segment is undefined for r > 0 when C = 0.")
            return self.Q
        if r < -1e-12 or r > self.C + 1e-12:
            raise RegionError(f"r={r} outside the time-sharing range [0, {self.C}].")
        return self.Q * (1.0 - min(max(r, 0.0), self.C) / self.C)

    def outer(self, r: float) -> float:
        return self.C - r

    def within_outer(self, r: float, R: float, *, tol: float = 1e-6) -> bool:
        return r + R <= self.C + tol
