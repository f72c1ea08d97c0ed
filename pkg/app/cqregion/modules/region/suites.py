"""
Property suites driven by `cqregion check --suite NAME`.

Each suite is a function (config) -> list[CheckResult]; randomness comes from
config.seed only.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from app.cqregion.ascent import restart_rng
from app.cqregion.modules.channel import factories
from app.cqregion.modules.channel.models import InvalidChannelError, KrausChannel
from app.cqregion.modules.channel.service import (
    apply,
    choi,
    choi_is_cptp,
    complementary,
    compose,
    degradability_residual,
    random_channel,
    stinespring,
    tensor,
    validate,
)
from app.cqregion.modules.infoquant.models import Ensemble
from app.cqregion.modules.infoquant.service import (
    avg_coherent_information,
    breakdown,
    convex_join,
    holevo_information,
    lemma2_margin,
)
from app.cqregion.modules.qcore.models import DensityOperator, SystemLayout
from app.cqregion.modules.qcore.service import (
    entropy,
    fidelity,
    partial_trace,
    purify,
    random_density,
    random_unitary,
    tensor as kron,
    trace_distance,
)
from app.cqregion.modules.region.analytic import match_analytic_dephasing
from app.cqregion.modules.region.models import OptimizerConfig, RegionError
from app.cqregion.modules.region.service import cardinality_experiment, f_lambda, sweep_curve

logger = logging.getLogger(__name__)

_SUITE_STREAM = 0x5E


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.suite}:{self.name} {self.detail}".rstrip()


def _rng(config: OptimizerConfig, suite_id: int) -> np.random.Generator:
    return restart_rng(config.seed, _SUITE_STREAM, suite_id)


def _random_ensemble(dim: int, rng: np.random.Generator, k: int) -> Ensemble:
    probs = rng.dirichlet(np.ones(k))
    rhos = np.array([random_density(dim, rng, rank=int(rng.integers(1, dim + 1))).matrix for _ in range(k)])
    return Ensemble.from_arrays(probs, rhos)


def core_suite(config: OptimizerConfig) -> list[CheckResult]:
    """Primitive and channel invariants on random inputs."""
    rng = _rng(config, 0)
    out: list[CheckResult] = []

    worst = 0.0
    for _ in range(20):
        a = random_density(int(rng.integers(2, 5)), rng)
        b = random_density(int(rng.integers(2, 5)), rng)
        worst = max(worst, abs(entropy(kron(a.matrix, b.matrix)) - entropy(a) - entropy(b)))
    out.append(CheckResult("core", "entropy-additive", worst <= 1e-9, f"max_err={worst:.2e}"))

    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 5))
        rho = random_density(d, rng)
        u = random_unitary(d, rng)
        worst = max(worst, abs(entropy(u @ rho.matrix @ u.conj().T) - entropy(rho)))
    out.append(CheckResult("core", "entropy-unitary-invariant", worst <= 1e-9, f"max_err={worst:.2e}"))

    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 5))
        rho = random_density(d, rng)
        reduced = partial_trace(DensityOperator.from_ket(purify(rho)), SystemLayout.of(d, d), [1])
        worst = max(worst, float(np.max(np.abs(reduced - rho.matrix))))
    out.append(CheckResult("core", "purify-roundtrip", worst <= 1e-10, f"max_err={worst:.2e}"))

    ok = True
    for _ in range(50):
        d = int(rng.integers(2, 5))
        rho, sigma = random_density(d, rng), random_density(d, rng)
        f, t = fidelity(rho, sigma), trace_distance(rho, sigma)
        ok &= 1.0 - f <= t + 1e-9 and t <= np.sqrt(max(0.0, 1.0 - f)) + 1e-9
    out.append(CheckResult("core", "fidelity-sandwich", bool(ok)))

    named: list[KrausChannel] = [
        factories.identity(2),
        factories.dephasing_qubit(0.1),
        factories.depolarizing(0.06),
        factories.erasure(0.25),
        factories.completely_dephasing(3),
        factories.trine(),
    ]
    worst = max(validate(ch).max_deviation for ch in named)
    out.append(CheckResult("core", "factories-valid", worst < 1e-10, f"max_dev={worst:.2e}"))

    worst = 0.0
    for _ in range(10):
        ch = random_channel(3, 2, 3, rng)
        rho = random_density(3, rng)
        v = stinespring(ch).v
        joint = v @ rho.matrix @ v.conj().T
        layout = SystemLayout.of(ch.dim_out, ch.n_kraus)
        worst = max(
            worst,
            float(np.max(np.abs(partial_trace(joint, layout, [0]) - apply(ch, rho).matrix))),
            float(np.max(np.abs(partial_trace(joint, layout, [1]) - apply(complementary(ch), rho).matrix))),
        )
    out.append(CheckResult("core", "stinespring-consistent", worst <= 1e-10, f"max_err={worst:.2e}"))

    delta = factories.completely_dephasing(2)
    deph = factories.dephasing_qubit(0.2)
    j_delta = choi(delta)
    worst = max(
        float(np.max(np.abs(choi(compose(delta, deph)) - j_delta))),
        float(np.max(np.abs(choi(compose(deph, delta)) - j_delta))),
        float(np.max(np.abs(choi(compose(complementary(deph), delta)) - choi(complementary(deph))))),
    )
    out.append(CheckResult("core", "dephasing-identities", worst <= 1e-10, f"max_err={worst:.2e}"))

    agree = True
    for i in range(10):
        ch = random_channel(2, 2, 2, rng)
        if i % 2:
            ch = KrausChannel(kraus=ch.kraus * 0.9, dim_in=2, dim_out=2, label="scaled")
        try:
            validate(ch)
            kraus_ok = True
        except InvalidChannelError:
            kraus_ok = False
        agree &= kraus_ok == choi_is_cptp(ch)
    out.append(CheckResult("core", "choi-verdict-agrees", bool(agree)))

    worst = 0.0
    for _ in range(20):
        b = breakdown(_random_ensemble(2, rng, 3), random_channel(2, 2, 2, rng))
        worst = max(worst, abs(b.avg_coherent - b.cond_mutual - b.neg_cond_entropy))
    out.append(CheckResult("core", "conditional-identity", worst <= 1e-10, f"max_err={worst:.2e}"))

    res = degradability_residual(factories.dephasing_qubit(0.1), config)
    out.append(CheckResult("core", "dephasing-degradable", res.certified, f"residual={res.residual:.2e}"))
    return out


def concavity_suite(config: OptimizerConfig, *, trials: int = 200) -> list[CheckResult]:
    """Holevo term concave and coherent term linear under convex joins."""
    rng = _rng(config, 1)
    worst_holevo = 0.0
    worst_linear = 0.0
    for _ in range(trials):
        ch = random_channel(2, 2, int(rng.integers(1, 4)), rng)
        e0 = _random_ensemble(2, rng, int(rng.integers(1, 4)))
        e1 = _random_ensemble(2, rng, int(rng.integers(1, 4)))
        lam = float(rng.uniform())
        joined = convex_join(e0, e1, lam)
        mixed_h = lam * holevo_information(e0, ch) + (1 - lam) * holevo_information(e1, ch)
        worst_holevo = max(worst_holevo, mixed_h - holevo_information(joined, ch))
        mixed_c = lam * avg_coherent_information(e0, ch) + (1 - lam) * avg_coherent_information(e1, ch)
        worst_linear = max(worst_linear, abs(mixed_c - avg_coherent_information(joined, ch)))
    return [
        CheckResult("concavity", "holevo-concave", worst_holevo <= 1e-9, f"trials={trials} worst_shortfall={worst_holevo:.2e}"),
        CheckResult("concavity", "coherent-linear", worst_linear <= 1e-10, f"trials={trials} max_err={worst_linear:.2e}"),
    ]


def lemma2_suite(config: OptimizerConfig, *, pairs: int = 1000) -> list[CheckResult]:
    rng = _rng(config, 2)
    out = []
    for da, db in ((2, 2), (2, 3)):
        layout = SystemLayout.of(da, db)
        worst = np.inf
        for _ in range(pairs):
            rho = random_density(layout.total, rng, rank=int(rng.integers(1, layout.total + 1)))
            sigma = random_density(layout.total, rng, rank=int(rng.integers(1, layout.total + 1)))
            worst = min(worst, lemma2_margin(rho, sigma, layout))
        out.append(CheckResult("lemma2", f"margin-{da}x{db}", worst >= 0.0, f"pairs={pairs} min_margin={worst:.4f}"))
    return out


def additivity_suite(config: OptimizerConfig, *, tol: float = 5e-3) -> list[CheckResult]:
    n1, n2 = factories.dephasing_qubit(0.1), factories.dephasing_qubit(0.25)
    joint = tensor(n1, n2)
    out = []
    for lam in (1.0, 2.0, 4.0):
        separate = f_lambda(n1, lam, config) + f_lambda(n2, lam, config)
        together = f_lambda(joint, lam, config)
        gap = abs(together - separate)
        out.append(CheckResult("additivity", f"lambda={lam:g}", gap <= tol, f"joint={together:.6f} sum={separate:.6f} gap={gap:.2e}"))
    return out


def cardinality_suite(config: OptimizerConfig, *, tol: float = 1e-3) -> list[CheckResult]:
    out = []
    for ch in (factories.dephasing_qubit(0.1), factories.depolarizing(0.03)):
        for lam in (1.0, 2.0):
            report = cardinality_experiment(ch, lam, config)
            out.append(CheckResult("cardinality", f"{ch.label}@lambda={lam:g}", report.gap <= tol, f"gap={report.gap:.2e}"))
    return out


def dephasing_oracle_suite(config: OptimizerConfig, *, tol: float = 1e-3) -> list[CheckResult]:
    out = []
    for q in (0.05, 0.1, 0.2):
        curve = sweep_curve(factories.dephasing_qubit(q), None, config)
        match = match_analytic_dephasing(curve, q)
        out.append(CheckResult("dephasing-oracle", f"q={q:g}", match.max_deviation <= tol, f"points={len(curve.points)} max_dev={match.max_deviation:.2e}"))
        interior = sum(1 for p in curve.points if 1e-3 < p.r < 1.0 - 1e-3 and p.R > 1e-3)
        out.append(CheckResult("dephasing-oracle", f"q={q:g}-interior", interior >= 1, f"interior_points={interior}"))
    return out


SUITES: dict[str, Callable[[OptimizerConfig], list[CheckResult]]] = {
    "core": core_suite,
    "concavity": concavity_suite,
    "lemma2": lemma2_suite,
    "additivity": additivity_suite,
    "cardinality": cardinality_suite,
    "dephasing-oracle": dephasing_oracle_suite,
}


def run_suite(name: str, config: OptimizerConfig) -> list[CheckResult]:
    try:
        suite = SUITES[name]
    except KeyError:
        raise RegionError(f"Unknown suite: {name} (expected one of {', '.join(SUITES)}).") from None
    results = suite(config)
    for res in results:
        if res.passed:
            logger.info(res.line())
        else:
            logger.error(res.line())
    logger.info("suite %s: %s/%s passed", name, sum(r.passed for r in results), len(results))
    return results
