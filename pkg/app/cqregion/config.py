import os
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


LEMMA2_DIM_READINGS = ("joint", "a")


@dataclass(frozen=True)
class Settings:
    threads: int
    log_level: str
    lemma2_dim: str
    max_tensor_power: int
    max_dim: int


def _getenv(name: str, default: str = "") -> str:
    return (os.environ.get(name) or default).strip()


def _getenv_int(name: str, default: int, *, minimum: int = 0) -> int:
    raw = _getenv(name, str(default))
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer (got {raw!r}).") from e
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum} (got {value}).")
    return value


def load_settings() -> Settings:
    lemma2_dim = _getenv("CQREGION_LEMMA2_DIM", "joint").lower()
    if lemma2_dim not in LEMMA2_DIM_READINGS:
        raise ConfigError(f"CQREGION_LEMMA2_DIM must be one of {', '.join(LEMMA2_DIM_READINGS)} (got {lemma2_dim!r}).")
    return Settings(
        threads=_getenv_int("CQREGION_THREADS", 0),
        log_level=_getenv("CQREGION_LOG_LEVEL", "INFO").upper(),
        lemma2_dim=lemma2_dim,
        max_tensor_power=_getenv_int("CQREGION_MAX_TENSOR_POWER", 2, minimum=1),
        max_dim=_getenv_int("CQREGION_MAX_DIM", 64, minimum=2),
    )


def resolve_threads(requested: int) -> int:
    # 0 means auto
    if requested > 0:
        return requested
    return max(1, min(32, os.cpu_count() or 1))

