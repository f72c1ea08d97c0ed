from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from app.cqregion.constants import CHANNEL_KINDS
from app.cqregion.modules.channel import factories
from app.cqregion.modules.channel.models import ChannelConfigError, ChannelError, GeneralizedDephasingSpec, KrausChannel
from app.cqregion.utils import normalize_text, pairs_to_complex


def _get_int(cfg: Mapping[str, Any], name: str, default: int | None = None, *, minimum: int | None = None) -> int:
    if name not in cfg or cfg[name] is None:
        if default is None:
            raise ChannelConfigError(name, "is required.")
        return default
    v = cfg[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ChannelConfigError(name, f"must be an integer (got {v!r}).")
    if minimum is not None and int(v) < minimum:
        raise ChannelConfigError(name, f"must be >= {minimum} (got {int(v)}).")
    return int(v)


def _get_float(cfg: Mapping[str, Any], name: str, default: float | None = None) -> float:
    if name not in cfg or cfg[name] is None:
        if default is None:
            raise ChannelConfigError(name, "is required.")
        return default
    v = cfg[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ChannelConfigError(name, f"must be a number (got {v!r}).")
    return float(v)


def _parse_kraus(cfg: Mapping[str, Any], dim_in: int) -> list[np.ndarray]:
    raw = cfg.get("kraus")
    if not isinstance(raw, list) or not raw:
        raise ChannelConfigError("kraus", "must be a non-empty list of operators.")
    ops: list[np.ndarray] = []
    dim_out: int | None = None
    for i, op in enumerate(raw):
        try:
            flat = pairs_to_complex(op)
        except (TypeError, ValueError) as e:
            raise ChannelConfigError(f"kraus[{i}]", f"entries must be [re, im] pairs ({e}).") from e
        if flat.ndim != 1 or flat.size % dim_in != 0:
            raise ChannelConfigError(f"kraus[{i}]", f"has {flat.size} entries, not a multiple of dim={dim_in}.")
        rows = flat.size // dim_in
        if dim_out is None:
            dim_out = _get_int(cfg, "dim_out", rows)
        if rows != dim_out:
            raise ChannelConfigError(f"kraus[{i}]", f"has {rows} rows, expected dim_out={dim_out}.")
        ops.append(flat.reshape(rows, dim_in))
    return ops


def _parse_gram(cfg: Mapping[str, Any], d: int) -> GeneralizedDephasingSpec:
    if cfg.get("gram") is not None:
        try:
            g = pairs_to_complex(cfg["gram"])
        except (TypeError, ValueError) as e:
            raise ChannelConfigError("gram", f"entries must be [re, im] pairs ({e}).") from e
        if g.shape != (d, d):
            raise ChannelConfigError("gram", f"must be {d}x{d} (got {g.shape}).")
        try:
            return GeneralizedDephasingSpec(g)
        except ChannelError as e:
            raise ChannelConfigError("gram", str(e)) from e
    overlap = _get_float(cfg, "param")
    if not -1.0 / (d - 1) <= overlap <= 1.0:
        raise ChannelConfigError("param", f"uniform overlap must be in [{-1.0 / (d - 1):g}, 1] (got {overlap}).")
    return GeneralizedDephasingSpec.uniform(d, overlap)


def channel_from_config(cfg: Mapping[str, Any]) -> KrausChannel:
    """
    Build a channel from a config mapping:

      {"kind": "...", "dim": int, "param": float, "kraus": [[[re, im], ...], ...]}

    `kraus` operators are row-major; dim is the input dimension. Errors name
    the offending field.
    """
    if not isinstance(cfg, Mapping):
        raise ChannelConfigError("<root>", "config must be a JSON object.")
    kind = normalize_text(str(cfg.get("kind") or "")).lower()
    if not kind:
        raise ChannelConfigError("kind", "is required.")
    if kind not in CHANNEL_KINDS:
        raise ChannelConfigError("kind", f"unknown kind {kind!r}. Must be one of: {', '.join(sorted(CHANNEL_KINDS))}")

    field_name = "param"
    try:
        if kind == "identity":
            ch = factories.identity(_get_int(cfg, "dim", 2, minimum=1))
        elif kind == "dephasing":
            if _get_int(cfg, "dim", 2) != 2:
                raise ChannelConfigError("dim", "dephasing is defined for qubits (dim=2).")
            ch = factories.dephasing_qubit(_get_float(cfg, "param"))
        elif kind == "generalized_dephasing":
            d = _get_int(cfg, "dim", minimum=2)
            ch = factories.generalized_dephasing(_parse_gram(cfg, d))
        elif kind == "depolarizing":
            if _get_int(cfg, "dim", 2) != 2:
                raise ChannelConfigError("dim", "depolarizing is defined for qubits (dim=2).")
            ch = factories.depolarizing(_get_float(cfg, "param"))
        elif kind == "erasure":
            d = _get_int(cfg, "dim", 2, minimum=2)
            ch = factories.erasure(_get_float(cfg, "param"), d)
        elif kind == "completely_dephasing":
            ch = factories.completely_dephasing(_get_int(cfg, "dim", 2, minimum=2))
        elif kind == "trine":
            ch = factories.trine()
        else:
            dim_in = _get_int(cfg, "dim", minimum=1)
            field_name = "kraus"
            ch = KrausChannel.from_operators(_parse_kraus(cfg, dim_in), label="kraus", descriptor={"kind": "kraus", "dim": dim_in})
    except ChannelConfigError:
        raise
    except ChannelError as e:
        raise ChannelConfigError(field_name, str(e)) from e

    return KrausChannel(
        kraus=ch.kraus,
        dim_in=ch.dim_in,
        dim_out=ch.dim_out,
        label=ch.label,
        descriptor=dict(cfg),
    )


def load_channel_config(path: str | Path) -> KrausChannel:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8-sig")
    except OSError as e:
        raise ChannelConfigError("<file>", f"cannot read {p}: {e}") from e
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChannelConfigError("<json>", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    return channel_from_config(cfg)
