"""
Multistart local optimization shared by the region sweep and the
degradability search.

Each restart is L-BFGS-B with forward finite-difference gradients (step
`fd_step`) and scipy's line search. With `batched=True` the objective takes
a (m, n) stack of points and returns m values, and the whole difference
stencil is evaluated in one call. A restart also stops once its best value
improved by less than `tol` over `stall_window` iterations. Restarts are
independent tasks; each one seeds its own generator from (seed, *stream), so
the aggregate does not depend on the thread schedule.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from app.cqregion.config import resolve_threads

logger = logging.getLogger(__name__)

_NONFINITE_PENALTY = 1e6


@dataclass(frozen=True, eq=False)
class RestartOutcome:
    index: int
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    message: str


def restart_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *(int(s) for s in stream)])


def stencil_value_and_grad(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, fd_step: float) -> tuple[float, np.ndarray]:
    """Value and forward-difference gradient of a batched objective from a single call."""
    x = np.asarray(x, dtype=float)
    n = x.size
    stencil = np.vstack([x, x + fd_step * np.eye(n)])
    values = np.asarray(fun(stencil), dtype=float).reshape(n + 1)
    f0 = values[0]
    if not np.isfinite(f0):
        return _NONFINITE_PENALTY, np.zeros(n)
    grad = (values[1:] - f0) / fd_step
    return float(f0), np.where(np.isfinite(grad), grad, 0.0)


def minimize_restart(
    fun: Callable[[np.ndarray], float] | Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    *,
    index: int = 0,
    tol: float,
    max_iters: int,
    fd_step: float,
    stall_window: int,
    batched: bool = False,
) -> RestartOutcome:
    history: list[float] = []
    stalled = False

    def _callback(intermediate_result: optimize.OptimizeResult) -> None:
        nonlocal stalled
        history.append(float(intermediate_result.fun))
        if len(history) > stall_window and history[-stall_window - 1] - min(history[-stall_window:]) < tol:
            stalled = True
            raise StopIteration

    x0 = np.asarray(x0, dtype=float)
    options = {"maxiter": int(max_iters), "ftol": 1e-15, "gtol": 1e-10}
    if batched:

        def _value_and_grad(x: np.ndarray) -> tuple[float, np.ndarray]:
            return stencil_value_and_grad(fun, x, fd_step)

        target, jac = _value_and_grad, True
        options["maxfun"] = int(max_iters) * 4
    else:

        def _safe(x: np.ndarray) -> float:
            v = float(fun(x))
            return v if np.isfinite(v) else _NONFINITE_PENALTY

        target, jac = _safe, None
        options["maxfun"] = int(max_iters) * (len(x0) + 1) * 4
        options["eps"] = float(fd_step)

    res = optimize.minimize(target, x0, method="L-BFGS-B", jac=jac, callback=_callback, options=options)
    converged = bool(res.success) or stalled
    return RestartOutcome(
        index=index,
        x=np.asarray(res.x, dtype=float),
        value=float(res.fun),
        iterations=int(getattr(res, "nit", len(history))),
        converged=converged,
        message=str(res.message),
    )


def run_restarts(
    fun: Callable[[np.ndarray], float] | Callable[[np.ndarray], np.ndarray],
    starts: Sequence[np.ndarray],
    *,
    tol: float,
    max_iters: int,
    fd_step: float,
    stall_window: int,
    threads: int = 0,
    batched: bool = False,
) -> list[RestartOutcome]:
    """Minimize `fun` from every start; results are returned in start order."""

    def _one(item: tuple[int, np.ndarray]) -> RestartOutcome:
        i, x0 = item
        out = minimize_restart(
            fun, x0, index=i, tol=tol, max_iters=max_iters, fd_step=fd_step, stall_window=stall_window, batched=batched
        )
        logger.debug("restart %s: value=%.12g iters=%s converged=%s", i, out.value, out.iterations, out.converged)
        return out

    items = list(enumerate(starts))
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [_one(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one, items))


def best_outcome(outcomes: Sequence[RestartOutcome]) -> RestartOutcome:
    """Lowest value; ties go to the lowest restart index."""
    if not outcomes:
        raise ValueError("No restart outcomes to aggregate.")
    return min(outcomes, key=lambda o: (o.value, o.index))
