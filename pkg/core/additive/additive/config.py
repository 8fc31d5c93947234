"""Runtime settings, read from the environment (and a local .env file)."""

import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from dotenv import load_dotenv

from .errors import InvalidArgumentError

DFT_METHODS = ("auto", "direct", "chirp")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, str(default))
    try:
        return int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{name} must be an integer, got {raw!r}")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name, repr(default))
    try:
        return float(raw)
    except ValueError:
        raise InvalidArgumentError(f"{name} must be a number, got {raw!r}")


@dataclass(frozen=True)
class Settings:
    dft_method: str = "auto"
    direct_limit: int = 8192
    seed: int = 0
    log_level: str = "WARNING"
    density_tol: float = 1e-12
    output_dir: str = "."

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        method = os.getenv("ADDITIVE_DFT_METHOD", "auto").lower()
        if method not in DFT_METHODS:
            raise InvalidArgumentError(
                f"ADDITIVE_DFT_METHOD must be one of {', '.join(DFT_METHODS)}, got {method!r}"
            )
        level = os.getenv("ADDITIVE_LOG_LEVEL", "WARNING").upper()
        if not isinstance(logging.getLevelName(level), int):
            raise InvalidArgumentError(f"ADDITIVE_LOG_LEVEL is not a logging level: {level!r}")
        settings = cls(
            dft_method=method,
            direct_limit=_env_int("ADDITIVE_DIRECT_LIMIT", 8192),
            seed=_env_int("ADDITIVE_SEED", 0),
            log_level=level,
            density_tol=_env_float("ADDITIVE_DENSITY_TOL", 1e-12),
            output_dir=os.path.expanduser(os.getenv("ADDITIVE_OUTPUT_DIR", ".")),
        )
        if settings.direct_limit < 2:
            raise InvalidArgumentError("ADDITIVE_DIRECT_LIMIT must be at least 2")
        if not 0 <= settings.density_tol < 1e-3:
            raise InvalidArgumentError("ADDITIVE_DENSITY_TOL must lie in [0, 1e-3)")
        return settings


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.from_env()


def configure_logging(level: Optional[str] = None) -> None:
    """Install one stream handler on the package logger."""
    level = (level or get_settings().log_level).upper()
    logger = logging.getLogger("additive")
    if not any(getattr(h, "_additive", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._additive = True
        logger.addHandler(handler)
    logger.setLevel(level)


__all__ = ["Settings", "get_settings", "configure_logging", "DFT_METHODS"]
