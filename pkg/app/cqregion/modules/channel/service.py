"""
Channel operations: validation, application, Stinespring/complementary
representations, composition, tensor products, Choi matrices and the
degradability search.
"""
from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np
from scipy import linalg

from app.cqregion.ascent import best_outcome, restart_rng, run_restarts
from app.cqregion.config import load_settings
from app.cqregion.constants import (
    CPTP_TOL,
    DEFAULT_DEGRADABILITY_RESTARTS,
    DEFAULT_FD_STEP,
    DEFAULT_MAX_ITERS,
    DEFAULT_SEED,
    DEFAULT_STALL_WINDOW,
    DEGRADABLE_CERT,
)
from app.cqregion.modules.channel.factories import completely_dephasing
from app.cqregion.modules.channel.models import (
    DegradabilityResult,
    InvalidChannelError,
    KrausChannel,
    ResourceGuardError,
    StinespringIsometry,
    ValidationReport,
)
from app.cqregion.modules.qcore.models import DensityOperator, DimensionError, SystemLayout
from app.cqregion.modules.qcore.service import partial_trace, random_unitary

if TYPE_CHECKING:
    from app.cqregion.modules.region.models import OptimizerConfig

logger = logging.getLogger(__name__)


def trace_preservation_deviation(ch: KrausChannel) -> float:
    k = ch.kraus
    s = np.einsum("kab,kac->bc", k.conj(), k)
    return float(np.max(np.abs(s - np.eye(ch.dim_in))))


def validate(ch: KrausChannel) -> ValidationReport:
    dev = trace_preservation_deviation(ch)
    if dev > CPTP_TOL:
        raise InvalidChannelError(
            f"Channel {ch.label} is not trace preserving: max |Σ K†K − I| = {dev:.3e}.",
            max_deviation=dev,
        )
    return ValidationReport(valid=True, max_deviation=dev, dim_in=ch.dim_in, dim_out=ch.dim_out, n_kraus=ch.n_kraus)


def _require_input(ch: KrausChannel, dim: int) -> None:
    if dim != ch.dim_in:
        raise DimensionError(f"Channel {ch.label} expects input dimension {ch.dim_in}, got {dim}.")


def output_states(ch: KrausChannel, rhos: np.ndarray) -> np.ndarray:
    """Batched N(ρ_x) for a (..., d_in, d_in) stack."""
    k = ch.kraus
    kr = k @ np.asarray(rhos)[..., None, :, :]
    return np.sum(kr @ k.conj().swapaxes(-1, -2), axis=-3)


def environment_states(ch: KrausChannel, rhos: np.ndarray) -> np.ndarray:
    """Batched N^c(ρ_x): entries Tr(K_k ρ K_l†) in the Kraus-indexed environment basis."""
    k = ch.kraus
    n = k.shape[0]
    kr = k @ np.asarray(rhos)[..., None, :, :]
    flat = kr.reshape(*kr.shape[:-3], n, -1)
    return flat @ k.reshape(n, -1).conj().T


def apply(ch: KrausChannel, rho: DensityOperator) -> DensityOperator:
    _require_input(ch, rho.dim)
    return DensityOperator.from_matrix(output_states(ch, rho.matrix), renormalize=True)


def apply_to_part(ch: KrausChannel, rho_ab: DensityOperator, layout: SystemLayout) -> DensityOperator:
    """(1_A ⊗ N)(ρ_AA′) for a two-factor layout [dim A, dim A′]."""
    if len(layout.dims) != 2:
        raise DimensionError(f"apply_to_part needs a two-factor layout (got {list(layout.dims)}).")
    layout.check(rho_ab.dim)
    d_a, d_in = layout.dims
    _require_input(ch, d_in)
    t = rho_ab.matrix.reshape(d_a, d_in, d_a, d_in)
    k = ch.kraus
    out = np.einsum("kob,abcd,kpd->aocp", k, t, k.conj(), optimize=True)
    return DensityOperator.from_matrix(out.reshape(d_a * ch.dim_out, d_a * ch.dim_out), renormalize=True)


def stinespring(ch: KrausChannel) -> StinespringIsometry:
    """V|ψ⟩ = Σ_k K_k|ψ⟩ ⊗ |k⟩_E."""
    n = ch.n_kraus
    v = np.ascontiguousarray(ch.kraus.transpose(1, 0, 2)).reshape(ch.dim_out * n, ch.dim_in)
    return StinespringIsometry(v=v, dim_in=ch.dim_in, dim_out=ch.dim_out, dim_env=n)


def complementary(ch: KrausChannel) -> KrausChannel:
    ops = np.ascontiguousarray(ch.kraus.transpose(1, 0, 2))
    return KrausChannel(
        kraus=ops,
        dim_in=ch.dim_in,
        dim_out=ch.n_kraus,
        label=f"complement({ch.label})",
        descriptor={"kind": "complementary", "of": ch.descriptor},
    )


def compose(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """outer ∘ inner."""
    if outer.dim_in != inner.dim_out:
        raise DimensionError(f"Cannot compose {outer.label} after {inner.label}: {outer.dim_in} != {inner.dim_out}.")
    ops = np.einsum("jab,kbc->jkac", outer.kraus, inner.kraus).reshape(-1, outer.dim_out, inner.dim_in)
    return KrausChannel(kraus=ops, dim_in=inner.dim_in, dim_out=outer.dim_out, label=f"{outer.label}∘{inner.label}")


def _tensor_guard(dim_in: int, dim_out: int, n_kraus: int) -> None:
    max_dim = load_settings().max_dim
    if dim_in > max_dim or dim_out > max_dim:
        raise ResourceGuardError(f"Tensor product dimension {max(dim_in, dim_out)} exceeds the dense limit {max_dim}.")
    if n_kraus > max_dim * max_dim:
        raise ResourceGuardError(f"Tensor product needs {n_kraus} Kraus operators (limit {max_dim * max_dim}).")


def tensor(ch1: KrausChannel, ch2: KrausChannel) -> KrausChannel:
    _tensor_guard(ch1.dim_in * ch2.dim_in, ch1.dim_out * ch2.dim_out, ch1.n_kraus * ch2.n_kraus)
    ops = np.einsum("jab,kcd->jkacbd", ch1.kraus, ch2.kraus).reshape(
        ch1.n_kraus * ch2.n_kraus, ch1.dim_out * ch2.dim_out, ch1.dim_in * ch2.dim_in
    )
    return KrausChannel(
        kraus=ops,
        dim_in=ch1.dim_in * ch2.dim_in,
        dim_out=ch1.dim_out * ch2.dim_out,
        label=f"{ch1.label}⊗{ch2.label}",
        descriptor={"kind": "tensor", "factors": [ch1.descriptor, ch2.descriptor]},
    )


def tensor_power(ch: KrausChannel, l: int) -> KrausChannel:
    l = int(l)
    max_power = load_settings().max_tensor_power
    if l < 1 or l > max_power:
        raise ResourceGuardError(f"Tensor power l={l} outside the supported range 1..{max_power}.")
    out = ch
    for _ in range(l - 1):
        out = tensor(out, ch)
    if l > 1:
        out = KrausChannel(
            kraus=out.kraus,
            dim_in=out.dim_in,
            dim_out=out.dim_out,
            label=f"{ch.label}^⊗{l}",
            descriptor={"kind": "tensor_power", "l": l, "base": ch.descriptor},
        )
    return out


def choi(ch: KrausChannel) -> np.ndarray:
    """
    J = (1 ⊗ N)(|Φ⟩⟨Φ|) with |Φ⟩ = d^{-1/2} Σ_i |ii⟩.

    Layout [dim_in, dim_out]; trace 1 and Tr_out J = I/d for a CPTP map.
    """
    n = ch.n_kraus
    vecs = np.ascontiguousarray(ch.kraus.transpose(0, 2, 1)).reshape(n, ch.dim_in * ch.dim_out) / math.sqrt(ch.dim_in)
    return vecs.T @ vecs.conj()


def choi_is_cptp(ch: KrausChannel, *, tol: float = CPTP_TOL) -> bool:
    j = choi(ch)
    if float(np.max(np.abs(j - j.conj().T))) > tol:
        return False
    if float(linalg.eigvalsh(0.5 * (j + j.conj().T))[0]) < -tol:
        return False
    marginal = partial_trace(j, SystemLayout.of(ch.dim_in, ch.dim_out), [0])
    return float(np.max(np.abs(marginal - np.eye(ch.dim_in) / ch.dim_in))) <= tol / ch.dim_in


def is_generalized_dephasing(ch: KrausChannel, *, tol: float = CPTP_TOL) -> bool:
    """Δ_d ∘ N = N ∘ Δ_d = Δ_d, checked on Choi matrices."""
    if ch.dim_in != ch.dim_out or ch.dim_in < 2:
        return False
    delta = completely_dephasing(ch.dim_in)
    target = choi(delta)
    for composed in (compose(delta, ch), compose(ch, delta)):
        if float(np.max(np.abs(choi(composed) - target))) > tol:
            return False
    return True


def random_channel(d_in: int, d_out: int, n_kraus: int, rng: np.random.Generator) -> KrausChannel:
    """Kraus operators cut from a Haar-random isometry."""
    if d_out * n_kraus < d_in:
        raise DimensionError(f"Need d_out·n_kraus >= d_in for an isometry ({d_out}·{n_kraus} < {d_in}).")
    u = random_unitary(d_out * n_kraus, rng)[:, :d_in]
    ops = u.reshape(d_out, n_kraus, d_in).transpose(1, 0, 2)
    return KrausChannel(kraus=ops, dim_in=d_in, dim_out=d_out, label=f"random({d_in}->{d_out}, n={n_kraus})")


def _choi_residual(candidate: KrausChannel, ch: KrausChannel, target: np.ndarray) -> float:
    return float(np.linalg.norm(choi(compose(candidate, ch)) - target))


def degradability_residual(ch: KrausChannel, config: OptimizerConfig | None = None) -> DegradabilityResult:
    """
    Search for T with T ∘ N ≈ N^c; the residual is the Frobenius distance of
    Choi matrices. Generalized dephasing channels take the exact T = N^c path.
    """
    validate(ch)
    comp = complementary(ch)
    target = choi(comp)

    if is_generalized_dephasing(ch):
        residual = _choi_residual(comp, ch, target)
        logger.info("degradability %s: dephasing identity path, residual=%.3e", ch.label, residual)
        return DegradabilityResult(
            residual=residual,
            degrading_map=comp,
            certified=residual < DEGRADABLE_CERT,
            method="dephasing-identity",
            restarts=0,
        )

    restarts = config.degradability_restarts if config else DEFAULT_DEGRADABILITY_RESTARTS
    seed = config.seed if config else DEFAULT_SEED
    max_iters = config.max_iters if config else DEFAULT_MAX_ITERS
    fd_step = config.fd_step if config else DEFAULT_FD_STEP
    threads = config.threads if config else 0

    d_b, d_e = ch.dim_out, ch.n_kraus
    m = d_b * d_e
    rows = m * d_e
    n_params = 2 * rows * d_b
    j_n = choi(ch).reshape(ch.dim_in, d_b, ch.dim_in, d_b)

    def _isometry(x: np.ndarray) -> np.ndarray:
        a = x[: rows * d_b].reshape(rows, d_b) + 1j * x[rows * d_b :].reshape(rows, d_b)
        w, _ = linalg.polar(a)
        return w.reshape(m, d_e, d_b)

    def _objective(x: np.ndarray) -> float:
        t = _isometry(x)
        out = np.einsum("jeb,abcd,jfd->aecf", t, j_n, t.conj(), optimize=True)
        diff = out.reshape(ch.dim_in * d_e, ch.dim_in * d_e) - target
        return float(np.sum(np.abs(diff) ** 2))

    starts = [restart_rng(seed, 0xD3, i).standard_normal(n_params) for i in range(restarts)]
    outcomes = run_restarts(
        _objective,
        starts,
        tol=1e-14,
        max_iters=max_iters,
        fd_step=fd_step,
        stall_window=DEFAULT_STALL_WINDOW,
        threads=threads,
    )
    best = best_outcome(outcomes)
    t_map = KrausChannel(kraus=_isometry(best.x), dim_in=d_b, dim_out=d_e, label=f"degrading({ch.label})")
    residual = _choi_residual(t_map, ch, target)
    certified = residual < DEGRADABLE_CERT
    if not certified:
        logger.warning("degradability %s: inconclusive, best residual=%.3e over %s restarts", ch.label, residual, restarts)
    return DegradabilityResult(residual=residual, degrading_map=t_map, certified=certified, method="search", restarts=restarts)
