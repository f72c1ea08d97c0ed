"""
Numerical computation of the single-letter (classical, quantum) region.

Boundary points are found by maximizing the Lagrangian I(X;B) + λ I(A⟩BX)
over finite ensembles for λ ≥ 1; the classical endpoint comes from a
dedicated Holevo search. Members are parametrized as ρ_x = G G†/Tr(G G†)
with free complex G, probabilities as a softmax of free reals.

Objectives are written over stacks of ensembles so a whole finite-difference
stencil is one call.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from app.cqregion.ascent import RestartOutcome, best_outcome, restart_rng, run_restarts
from app.cqregion.config import load_settings
from app.cqregion.constants import (
    ENVELOPE_MERGE,
    ENVELOPE_TIE,
    FLAT_REGION_SLACK,
    REFINE_MIN_GAIN,
    TAG_HOLEVO,
    TAG_LAMBDA,
    TAG_NEGATIVE_R,
    TAG_Q1,
)
from app.cqregion.modules.channel.models import KrausChannel
from app.cqregion.modules.channel.service import environment_states, is_generalized_dephasing, output_states, tensor_power
from app.cqregion.modules.infoquant.models import Ensemble
from app.cqregion.modules.infoquant.service import breakdown, cond_mutual_and_neg_entropy, member_entropies
from app.cqregion.modules.qcore.service import entropies
from app.cqregion.modules.region.models import (
    CardinalityReport,
    FlatRegionReport,
    MissingEnsembleError,
    OptimizerConfig,
    RatePoint,
    RegionError,
    StructuralError,
    TradeoffBounds,
    TradeoffCurve,
)

logger = logging.getLogger(__name__)

_LN2 = np.log(2.0)

# Random-stream ids, one per search kind.
_STREAM_LAGRANGIAN = 1
_STREAM_HOLEVO = 2
_STREAM_Q1 = 3
_STREAM_F_LAMBDA = 4
_STREAM_FLAT = 5

_FLAT_PENALTY = 1e6

BatchObjective = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EnsembleParams:
    """Unconstrained real parametrization of k members on dimension d."""

    d: int
    k: int
    diagonal: bool = False

    @property
    def n_params(self) -> int:
        per_member = self.d if self.diagonal else 2 * self.d * self.d
        return self.k + self.k * per_member

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(probs, rhos) for a (..., n_params) array: (..., k) and (..., k, d, d)."""
        x = np.asarray(x, dtype=float)
        lead = x.shape[:-1]
        probs = special.softmax(x[..., : self.k], axis=-1)
        body = x[..., self.k :]
        if self.diagonal:
            weights = special.softmax(body.reshape(*lead, self.k, self.d), axis=-1)
            rhos = np.zeros((*lead, self.k, self.d, self.d), dtype=complex)
            idx = np.arange(self.d)
            rhos[..., idx, idx] = weights
            return probs, rhos
        g = body.reshape(*lead, self.k, 2, self.d, self.d)
        g = g[..., 0, :, :] + 1j * g[..., 1, :, :]
        rhos = g @ g.conj().swapaxes(-1, -2)
        tr = np.trace(rhos, axis1=-2, axis2=-1).real
        return probs, rhos / tr[..., None, None]

    def start(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.n_params)


def _threads(config: OptimizerConfig) -> int:
    return config.threads or load_settings().threads


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam >= 1.0:
        raise RegionError(f"lambda must be >= 1 (got {lam}); use holevo_capacity for the classical endpoint.")
    return lam


def _search(
    objective: BatchObjective,
    params: EnsembleParams,
    config: OptimizerConfig,
    stream: Sequence[int],
    *,
    warm_starts: Sequence[np.ndarray] = (),
) -> tuple[RestartOutcome, Ensemble]:
    """
    Maximize objective(probs, rhos) over restarts; returns the best outcome and
    its pruned ensemble. Warm starts run after the seeded restarts.
    """

    def _neg(x: np.ndarray) -> np.ndarray:
        probs, rhos = params.unpack(x)
        return -np.asarray(objective(probs, rhos), dtype=float)

    starts = [params.start(restart_rng(config.seed, *stream, i)) for i in range(config.restarts)]
    starts.extend(np.asarray(w, dtype=float) for w in warm_starts if np.shape(w) == (params.n_params,))
    outcomes = run_restarts(
        _neg,
        starts,
        tol=config.tol,
        max_iters=config.max_iters,
        fd_step=config.fd_step,
        stall_window=config.stall_window,
        threads=_threads(config),
        batched=True,
    )
    best = best_outcome(outcomes)
    if not best.converged:
        logger.warning("best restart %s hit the iteration limit (%s): %s", best.index, best.iterations, best.message)
    probs, rhos = params.unpack(best.x)
    return best, Ensemble.from_arrays(probs, rhos).prune()


def lagrangian(ensemble: Ensemble, ch: KrausChannel, lam: float) -> float:
    """I(X;B) + λ I(A⟩BX)."""
    lam = _check_lambda(lam)
    b = breakdown(ensemble, ch)
    return b.holevo + lam * b.avg_coherent


def _point_from(ensemble: Ensemble, ch: KrausChannel, *, lam: float | None, tag: str, cardinality: int, converged: bool) -> RatePoint:
    b = breakdown(ensemble, ch)
    r, R = b.holevo, b.avg_coherent
    if tag == TAG_LAMBDA:
        objective = r + lam * R
    elif tag == TAG_Q1:
        r, objective = 0.0, R
    else:
        objective = r
    return RatePoint(lam=lam, r=r, R=R, objective=objective, ensemble=ensemble, tag=tag, cardinality_used=cardinality, converged=converged)


def _lambda_search(
    ch: KrausChannel, lam: float, config: OptimizerConfig, *, lam_index: int, warm_starts: Sequence[np.ndarray] = ()
) -> tuple[RatePoint, np.ndarray]:
    lam = _check_lambda(lam)
    k = config.resolved_cardinality(ch.dim_in)
    params = EnsembleParams(d=ch.dim_in, k=k)

    def _objective(probs: np.ndarray, rhos: np.ndarray) -> np.ndarray:
        e = member_entropies(probs, rhos, ch)
        return e.holevo + lam * e.avg_coherent

    best, ensemble = _search(_objective, params, config, (_STREAM_LAGRANGIAN, lam_index), warm_starts=warm_starts)
    point = _point_from(ensemble, ch, lam=lam, tag=TAG_LAMBDA, cardinality=k, converged=best.converged)
    logger.info("λ=%g on %s: r=%.6f R=%.6f objective=%.6f", lam, ch.label, point.r, point.R, point.objective)
    return point, best.x


def optimize_lambda(ch: KrausChannel, lam: float, config: OptimizerConfig, *, lam_index: int = 0) -> RatePoint:
    return _lambda_search(ch, lam, config, lam_index=lam_index)[0]


def _holevo_search(ch: KrausChannel, config: OptimizerConfig) -> tuple[RatePoint, np.ndarray]:
    k = config.resolved_cardinality(ch.dim_in)
    params = EnsembleParams(d=ch.dim_in, k=k)

    def _objective(probs: np.ndarray, rhos: np.ndarray) -> np.ndarray:
        return member_entropies(probs, rhos, ch).holevo

    best, ensemble = _search(_objective, params, config, (_STREAM_HOLEVO,))
    point = _point_from(ensemble, ch, lam=None, tag=TAG_HOLEVO, cardinality=k, converged=best.converged)
    logger.info("C1(%s) = %.6f", ch.label, point.r)
    return point, best.x


def holevo_capacity(ch: KrausChannel, config: OptimizerConfig) -> RatePoint:
    """(C⁽¹⁾, ·) endpoint: max I(X;B) over ensembles of at most d² + 2 members."""
    return _holevo_search(ch, config)[0]


def q1_capacity(ch: KrausChannel, config: OptimizerConfig) -> RatePoint:
    """(0, Q⁽¹⁾) endpoint: max I_c(ρ, N) over single density operators."""
    params = EnsembleParams(d=ch.dim_in, k=1)

    def _objective(probs: np.ndarray, rhos: np.ndarray) -> np.ndarray:
        return entropies(output_states(ch, rhos))[..., 0] - entropies(environment_states(ch, rhos))[..., 0]

    best, ensemble = _search(_objective, params, config, (_STREAM_Q1,))
    point = _point_from(ensemble, ch, lam=None, tag=TAG_Q1, cardinality=1, converged=best.converged)
    logger.info("Q1(%s) = %.6f", ch.label, point.R)
    return point


def upper_envelope(points: Sequence[RatePoint]) -> list[RatePoint]:
    """
    Non-dominated points ordered by decreasing R. Points whose R agree within
    ENVELOPE_TIE keep the larger r. A point within ENVELOPE_MERGE of the
    previous kept point in both rates is merged into it; endpoints win over
    λ points.
    """
    ordered = sorted(points, key=lambda p: (-p.R, -p.r))
    deduped: list[RatePoint] = []
    for p in ordered:
        if deduped and abs(deduped[-1].R - p.R) <= ENVELOPE_TIE:
            if p.r > deduped[-1].r:
                deduped[-1] = p
            continue
        deduped.append(p)
    out: list[RatePoint] = []
    best_r = -np.inf
    for p in deduped:
        if p.r <= best_r:
            continue
        if out and p.r - out[-1].r <= ENVELOPE_MERGE and out[-1].R - p.R <= ENVELOPE_MERGE:
            if out[-1].tag == TAG_LAMBDA and p.tag != TAG_LAMBDA:
                out[-1] = p
                best_r = p.r
            continue
        out.append(p)
        best_r = p.r
    return out


def _scaled(point: RatePoint, l: int) -> RatePoint:
    if l == 1:
        return point
    return RatePoint(
        lam=point.lam,
        r=point.r / l,
        R=point.R / l,
        objective=None if point.objective is None else point.objective / l,
        ensemble=point.ensemble,
        tag=point.tag,
        cardinality_used=point.cardinality_used,
        converged=point.converged,
    )


def chord_slope(upper: RatePoint, lower: RatePoint) -> float | None:
    """
    λ at which `upper` and `lower` (upper.R > lower.R) score the same
    Lagrangian value, or None when that λ is below 1 or undefined.
    """
    dR = upper.R - lower.R
    if not dR > 0:
        return None
    lam = (lower.r - upper.r) / dR
    return lam if np.isfinite(lam) and lam >= 1.0 else None


def _refine(
    work: KrausChannel,
    found: list[tuple[RatePoint, np.ndarray]],
    config: OptimizerConfig,
    *,
    first_index: int,
) -> list[tuple[RatePoint, np.ndarray]]:
    """
    Chord-slope passes: for adjacent envelope points optimize at the λ where
    both score equally, warm-started from both. Stops after a pass that adds
    nothing above the chord, or after config.refine_rounds passes.
    """
    xs = {id(p): x for p, x in found}
    tried: set[float] = {round(p.lam, 12) for p, _ in found if p.lam is not None}
    index = first_index
    for round_no in range(config.refine_rounds):
        envelope = upper_envelope([p for p, _ in found])
        gained = 0
        for upper, lower in zip(envelope, envelope[1:]):
            lam = chord_slope(upper, lower)
            if lam is None or round(lam, 12) in tried:
                continue
            tried.add(round(lam, 12))
            warm = [xs[id(q)] for q in (upper, lower) if id(q) in xs]
            point, x = _lambda_search(work, lam, config, lam_index=index, warm_starts=warm)
            index += 1
            found.append((point, x))
            xs[id(point)] = x
            if point.objective - (upper.r + lam * upper.R) > REFINE_MIN_GAIN:
                gained += 1
        logger.info("refine pass %s: %s new points above their chords", round_no + 1, gained)
        if not gained:
            break
    return found


def sweep_curve(ch: KrausChannel, lambda_grid: Sequence[float] | None, config: OptimizerConfig) -> TradeoffCurve:
    """
    Optimize every λ on the grid, add the Holevo endpoint, then refine at the
    chord slopes of adjacent envelope points and prune dominated points. Each
    grid λ is warm-started from the previous λ's optimum. With
    config.tensor_power = l the search runs on N^⊗l and rates are divided by l.
    """
    grid = tuple(float(v) for v in (lambda_grid if lambda_grid is not None else config.lambda_grid))
    for v in grid:
        _check_lambda(v)
    if list(grid) != sorted(grid):
        raise RegionError("lambda grid must be sorted ascending.")

    l = config.tensor_power
    work = tensor_power(ch, l) if l > 1 else ch
    logger.info("sweep start: channel=%s l=%s grid=%s restarts=%s seed=%s", ch.label, l, list(grid), config.restarts, config.seed)

    found: list[tuple[RatePoint, np.ndarray]] = [_holevo_search(work, config)]
    previous: list[np.ndarray] = []
    for i, lam in enumerate(grid):
        point, x = _lambda_search(work, lam, config, lam_index=i, warm_starts=previous)
        found.append((point, x))
        previous = [x]
    found = _refine(work, found, config, first_index=len(grid))

    points = [_scaled(p, l) for p, _ in found]
    envelope = upper_envelope(points)
    logger.info("sweep done: %s points on the envelope (of %s)", len(envelope), len(points))
    return TradeoffCurve(points=tuple(envelope), channel=dict(ch.descriptor), config=config.echo())


def bounds(C: float, Q: float) -> TradeoffBounds:
    return TradeoffBounds(C=float(C), Q=float(Q))


def interpolate_envelope(points: Sequence[RatePoint], r_grid: Sequence[float]) -> np.ndarray:
    """Piecewise-linear R(r) through envelope points (time-sharing between neighbours)."""
    pts = sorted(((p.r, p.R) for p in points), key=lambda t: t[0])
    rs = np.array([t[0] for t in pts])
    Rs = np.array([t[1] for t in pts])
    return np.interp(np.asarray(r_grid, dtype=float), rs, Rs)


def negative_R_map(point: RatePoint, ch: KrausChannel) -> RatePoint:
    """(r, R) ↦ (r + I(A;B|X), R − I(A;B|X)) for the point's own ensemble."""
    if point.ensemble is None:
        raise MissingEnsembleError("negative_R_map needs the point's achieving ensemble.")
    cm, _ = cond_mutual_and_neg_entropy(point.ensemble, ch)
    return RatePoint(
        lam=point.lam,
        r=point.r + cm,
        R=point.R - cm,
        objective=None,
        ensemble=point.ensemble,
        tag=TAG_NEGATIVE_R,
        cardinality_used=point.cardinality_used,
        converged=point.converged,
    )


def cardinality_experiment(ch: KrausChannel, lam: float, config: OptimizerConfig) -> CardinalityReport:
    """Compare optima at |X| = d² + 2 and 2(d² + 2)."""
    lam = _check_lambda(lam)
    small = ch.dim_in * ch.dim_in + 2
    large = 2 * small
    p_small = optimize_lambda(ch, lam, config.with_(cardinality=small))
    p_large = optimize_lambda(ch, lam, config.with_(cardinality=large))
    report = CardinalityReport(
        lam=lam,
        small_cardinality=small,
        large_cardinality=large,
        small_objective=float(p_small.objective),
        large_objective=float(p_large.objective),
    )
    logger.info("cardinality λ=%g on %s: |X|=%s -> %.8f, |X|=%s -> %.8f (gap %.2e)", lam, ch.label, small, report.small_objective, large, report.large_objective, report.gap)
    return report


def _dephased_output_entropies(ch: KrausChannel, rhos: np.ndarray) -> np.ndarray:
    y = np.real(np.diagonal(output_states(ch, rhos), axis1=-2, axis2=-1))
    y = np.where(y < 0, 0.0, y)
    return np.sum(special.entr(y), axis=-1) / _LN2


def f_lambda_search(ch: KrausChannel, lam: float, config: OptimizerConfig) -> tuple[float, Ensemble]:
    """
    max over diagonal-member ensembles of H(Y) + (λ−1) H(Y|X) − λ H(E|X),
    Y the dephased output and E the complementary output.
    """
    lam = _check_lambda(lam)
    if not is_generalized_dephasing(ch):
        raise StructuralError(f"f_lambda needs a generalized dephasing channel; {ch.label} is not one.")
    d = ch.dim_in
    k = config.cardinality if config.cardinality is not None else d + 2
    params = EnsembleParams(d=d, k=k, diagonal=True)

    def _objective(probs: np.ndarray, rhos: np.ndarray) -> np.ndarray:
        h_y_x = _dephased_output_entropies(ch, rhos)
        avg = np.sum(probs[..., None, None] * rhos, axis=-3)
        h_y = _dephased_output_entropies(ch, avg)
        h_e_x = entropies(environment_states(ch, rhos))
        return h_y + np.sum(probs * ((lam - 1.0) * h_y_x - lam * h_e_x), axis=-1)

    best, ensemble = _search(_objective, params, config, (_STREAM_F_LAMBDA, int(round(lam * 1000))))
    value = -best.value
    logger.info("f_λ(%s) at λ=%g = %.8f", ch.label, lam, value)
    return value, ensemble


def f_lambda(ch: KrausChannel, lam: float, config: OptimizerConfig) -> float:
    return f_lambda_search(ch, lam, config)[0]


def probe_flat_region(ch: KrausChannel, config: OptimizerConfig, *, q1: float | None = None) -> FlatRegionReport:
    """
    Look for an ensemble with R ≥ Q⁽¹⁾ − 1e-4 and r > 1e-3 (a flat stretch of
    the curve next to the Q endpoint). Diagnostic only.
    """
    q = q1 if q1 is not None else q1_capacity(ch, config).R
    target = q - FLAT_REGION_SLACK
    aim = q - 0.5 * FLAT_REGION_SLACK
    k = config.resolved_cardinality(ch.dim_in)
    params = EnsembleParams(d=ch.dim_in, k=k)

    def _objective(probs: np.ndarray, rhos: np.ndarray) -> np.ndarray:
        e = member_entropies(probs, rhos, ch)
        shortfall = np.maximum(0.0, aim - e.avg_coherent)
        return e.holevo - _FLAT_PENALTY * shortfall * shortfall

    _, ensemble = _search(_objective, params, config, (_STREAM_FLAT,))
    b = breakdown(ensemble, ch)
    report = FlatRegionReport(q1=q, target_R=target, best_r=b.holevo, best_R=b.avg_coherent)
    logger.info("flat-region search on %s: Q1=%.6f best (r, R)=(%.6f, %.6f) found=%s", ch.label, q, report.best_r, report.best_R, report.found)
    return report
