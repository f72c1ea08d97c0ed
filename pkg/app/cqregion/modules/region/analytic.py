"""
Closed-form trade-off curve of the qubit dephasing channel and the
matched-r comparison used as the numerical oracle.

With q the σ_z probability and μ ∈ [0, 1/2]:
  r = 1 − h₂(μ)
  R = h₂(μ) − h₂(1/2 + 1/2 √(1 − 16 q(1−q) μ(1−μ)))
achieved by diag(μ, 1−μ), diag(1−μ, μ) sent with equal probability.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from app.cqregion.constants import DEFAULT_MU_POINTS, TAG_ANALYTIC
from app.cqregion.modules.infoquant.models import Ensemble
from app.cqregion.modules.qcore.service import binary_entropy
from app.cqregion.modules.region.models import RatePoint, RegionError, TradeoffCurve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleMatch:
    """Per-point R deviations from the closed form at equal r."""

    q: float
    deviations: tuple[float, ...]

    @property
    def max_deviation(self) -> float:
        return max(self.deviations, default=0.0)


def _check_q(q: float) -> float:
    q = float(q)
    if not 0.0 <= q <= 0.5:
        raise RegionError(f"q must be in [0, 1/2] (got {q}).")
    return q


def analytic_R(q: float, mu: float) -> float:
    inner = 1.0 - 16.0 * q * (1.0 - q) * mu * (1.0 - mu)
    return binary_entropy(mu) - binary_entropy(0.5 + 0.5 * math.sqrt(max(0.0, inner)))


def mu_ensemble(mu: float) -> Ensemble:
    rhos = np.array([np.diag([mu, 1.0 - mu]), np.diag([1.0 - mu, mu])], dtype=complex)
    return Ensemble.from_arrays([0.5, 0.5], rhos)


def default_mu_grid(n: int = DEFAULT_MU_POINTS) -> np.ndarray:
    return np.linspace(0.0, 0.5, n)


def analytic_dephasing_curve(q: float, mu_grid: Sequence[float] | None = None) -> TradeoffCurve:
    q = _check_q(q)
    grid = default_mu_grid() if mu_grid is None else np.asarray(mu_grid, dtype=float)
    if grid.size == 0:
        raise RegionError("mu grid must not be empty.")
    if np.any(grid < 0.0) or np.any(grid > 0.5):
        raise RegionError("mu grid values must lie in [0, 1/2].")

    points = []
    for mu in grid:
        mu = float(mu)
        points.append(
            RatePoint(
                lam=None,
                r=1.0 - binary_entropy(mu),
                R=analytic_R(q, mu),
                objective=None,
                ensemble=mu_ensemble(mu),
                tag=TAG_ANALYTIC,
                cardinality_used=2,
            )
        )
    points.sort(key=lambda p: (-p.R, -p.r))
    return TradeoffCurve(points=tuple(points), channel={"kind": "dephasing", "param": q}, config={"mu_grid": [float(m) for m in grid]})


def mu_for_rate(r: float) -> float:
    """Inverse of r = 1 − h₂(μ) on [0, 1/2]."""
    if r >= 1.0:
        return 0.0
    if r <= 0.0:
        return 0.5
    return float(optimize.brentq(lambda mu: 1.0 - binary_entropy(mu) - r, 0.0, 0.5, xtol=1e-14))


def match_analytic_dephasing(points: TradeoffCurve | Sequence[RatePoint], q: float) -> OracleMatch:
    q = _check_q(q)
    pts = points.points if isinstance(points, TradeoffCurve) else tuple(points)
    deviations = tuple(abs(p.R - analytic_R(q, mu_for_rate(p.r))) for p in pts)
    match = OracleMatch(q=q, deviations=deviations)
    logger.debug("dephasing oracle q=%g: %s points, max deviation %.3e", q, len(deviations), match.max_deviation)
    return match
