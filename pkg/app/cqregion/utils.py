from __future__ import annotations

import json
import math
from typing import Any, Iterable

import numpy as np

from app.cqregion.constants import CSV_SIG_DIGITS


def normalize_text(s: str | None) -> str:
    return (s or "").strip()


def json_dumps_sorted(d: Any) -> str:
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def format_number(x: float) -> str:
    """10 significant digits, '.' separator, no locale; -0 prints as 0."""
    if isinstance(x, str):
        return x
    v = float(x)
    if not math.isfinite(v):
        raise ValueError(f"Refusing to format non-finite value {v!r}.")
    s = format(v, f".{CSV_SIG_DIGITS}g")
    if s in ("-0", "-0.0"):
        return "0"
    return s


def parse_lambda_grid(spec: str | None) -> tuple[float, ...] | None:
    """
    Parse a λ grid flag.

    Accepted forms:
    - "default" or empty -> None (caller uses the default grid)
    - comma list: "1,1.5,2,4"
    - range form: "start:stop:count" (inclusive, geometric when stop/start > 10)
    """
    s = normalize_text(spec).lower()
    if not s or s == "default":
        return None
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ValueError("lambda grid range must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("lambda grid count must be >= 1")
        if not (math.isfinite(start) and math.isfinite(stop)):
            raise ValueError("lambda grid range must be finite")
        if start < 1.0 or stop < start:
            raise ValueError("lambda grid range needs 1 <= start <= stop")
        if stop / start > 10:
            grid = np.geomspace(start, stop, count)
        else:
            grid = np.linspace(start, stop, count)
        values = [float(v) for v in grid]
    else:
        values = [float(p) for p in s.split(",") if p.strip()]
    if not values:
        raise ValueError("lambda grid is empty")
    if not all(math.isfinite(v) for v in values):
        raise ValueError("lambda grid values must be finite")
    if any(v < 1.0 for v in values):
        raise ValueError("lambda grid values must be >= 1")
    return tuple(sorted(set(values)))


def complex_to_pairs(m: np.ndarray) -> list:
    """Row-major nested [re, im] lists (config/report encoding)."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in arr]
    return [complex_to_pairs(row) for row in arr]


def pairs_to_complex(values: Iterable) -> np.ndarray:
    arr = np.asarray(list(values), dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("expected [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]
