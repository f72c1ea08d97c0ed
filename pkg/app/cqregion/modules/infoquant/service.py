"""
Information quantities of σ^{XAB} for an ensemble sent through a channel.

With ρ_x the input members, B_x = N(ρ_x) and E_x = N^c(ρ_x):
  I(X;B)    = H(Σ p_x B_x) − Σ p_x H(B_x)
  I(A⟩BX)   = Σ p_x [H(B_x) − H(E_x)]
  I(A;B|X)  = Σ p_x [H(ρ_x) + H(B_x) − H(E_x)]
  −H(A|X)   = −Σ p_x H(ρ_x)
"""
from __future__ import annotations

import math

import numpy as np

from app.cqregion.config import load_settings
from app.cqregion.modules.channel.models import KrausChannel
from app.cqregion.modules.channel.service import environment_states, output_states
from app.cqregion.modules.infoquant.models import Ensemble, EnsembleError, InfoBreakdown, MemberEntropies
from app.cqregion.modules.qcore.models import DensityOperator, DimensionError, SystemLayout
from app.cqregion.modules.qcore.service import entropies, entropy, fidelity, partial_trace


def member_entropies(probs: np.ndarray, rhos: np.ndarray, ch: KrausChannel) -> MemberEntropies:
    """
    Batched kernel shared by the public quantities and the optimizers.

    probs is (..., k) and rhos (..., k, d, d); leading axes index independent
    ensembles.
    """
    if rhos.shape[-1] != ch.dim_in:
        raise DimensionError(f"Ensemble dimension {rhos.shape[-1]} does not match channel input {ch.dim_in}.")
    probs = np.asarray(probs, dtype=float)
    outs = output_states(ch, rhos)
    envs = environment_states(ch, rhos)
    avg_out = np.sum(probs[..., None, None] * outs, axis=-3)
    average_output = entropies(avg_out)
    return MemberEntropies(
        probs=probs,
        input=entropies(rhos),
        output=entropies(outs),
        environment=entropies(envs),
        average_output=float(average_output) if np.ndim(average_output) == 0 else average_output,
    )


def _entropies_of(ensemble: Ensemble, ch: KrausChannel) -> MemberEntropies:
    return member_entropies(ensemble.probs, ensemble.stack(), ch)


def coherent_information(rho: DensityOperator, ch: KrausChannel) -> float:
    """I_c(ρ, N) = H(N(ρ)) − H(N^c(ρ))."""
    if rho.dim != ch.dim_in:
        raise DimensionError(f"State dimension {rho.dim} does not match channel input {ch.dim_in}.")
    m = rho.matrix[None, ...]
    return float(entropies(output_states(ch, m))[0] - entropies(environment_states(ch, m))[0])


def holevo_information(ensemble: Ensemble, ch: KrausChannel) -> float:
    return _entropies_of(ensemble, ch).holevo


def avg_coherent_information(ensemble: Ensemble, ch: KrausChannel) -> float:
    return _entropies_of(ensemble, ch).avg_coherent


def cond_mutual_and_neg_entropy(ensemble: Ensemble, ch: KrausChannel) -> tuple[float, float]:
    """(I(A;B|X), −H(A|X))."""
    e = _entropies_of(ensemble, ch)
    return e.cond_mutual, e.neg_cond_entropy


def breakdown(ensemble: Ensemble, ch: KrausChannel) -> InfoBreakdown:
    e = _entropies_of(ensemble, ch)
    return InfoBreakdown(
        holevo=e.holevo,
        avg_coherent=e.avg_coherent,
        cond_mutual=e.cond_mutual,
        neg_cond_entropy=e.neg_cond_entropy,
    )


def mutual_information(rho_ab: DensityOperator, layout: SystemLayout) -> float:
    """I(A;B) for a two-factor layout."""
    layout.check(rho_ab.dim)
    h_a = entropy(partial_trace(rho_ab, layout, [0]))
    h_b = entropy(partial_trace(rho_ab, layout, [1]))
    return h_a + h_b - entropy(rho_ab)


def bipartite_coherent_information(rho_ab: DensityOperator, layout: SystemLayout) -> float:
    """I(A⟩B) = H(B) − H(AB)."""
    if len(layout.dims) != 2:
        raise DimensionError(f"Expected a bipartite layout (got {list(layout.dims)}).")
    layout.check(rho_ab.dim)
    return entropy(partial_trace(rho_ab, layout, [1])) - entropy(rho_ab)


def lemma2_bound(f: float, d: int) -> float:
    return 2.0 / math.e + 4.0 * math.log2(d) * math.sqrt(max(0.0, 1.0 - f))


def lemma2_margin(rho_ab: DensityOperator, sigma_ab: DensityOperator, layout: SystemLayout, *, dim_reading: str | None = None) -> float:
    """
    bound − |I(A⟩B)_ρ − I(A⟩B)_σ| for the continuity bound 2/e + 4 log d √(1 − F).

    `d` is dim(A)·dim(B) by default; dim_reading="a" (or CQREGION_LEMMA2_DIM=a)
    uses dim(A).
    """
    if rho_ab.dim != sigma_ab.dim:
        raise DimensionError(f"States have different dimensions ({rho_ab.dim} vs {sigma_ab.dim}).")
    reading = dim_reading or load_settings().lemma2_dim
    d = layout.dims[0] if reading == "a" else layout.total
    gap = abs(bipartite_coherent_information(rho_ab, layout) - bipartite_coherent_information(sigma_ab, layout))
    return lemma2_bound(fidelity(rho_ab, sigma_ab), d) - gap


def convex_join(e0: Ensemble, e1: Ensemble, lam: float) -> Ensemble:
    """λ·E0 ⊕ (1−λ)·E1; the time-sharing flag is folded into the classical index."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise EnsembleError(f"lambda must be in [0, 1] (got {lam}).")
    if e0.dim != e1.dim:
        raise DimensionError(f"Ensembles act on different dimensions ({e0.dim} vs {e1.dim}).")
    probs = np.concatenate([lam * e0.probs, (1.0 - lam) * e1.probs])
    joined = Ensemble(probs / np.sum(probs), e0.states + e1.states)
    return joined.prune()
