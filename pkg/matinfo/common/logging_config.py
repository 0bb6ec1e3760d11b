"""Central logging configuration utilities for matinfo.

Logging goes to stderr so stdout stays reserved for command results
(scalars, JSON reports). Downstream callers can call `configure_logging`.
"""

from __future__ import annotations

import logging
import os
from typing import Optional

_LEVEL_MAP = {
    "CRITICAL": logging.CRITICAL,
    "ERROR": logging.ERROR,
    "WARNING": logging.WARNING,
    "WARN": logging.WARNING,
    "INFO": logging.INFO,
    "DEBUG": logging.DEBUG,
    "NOTSET": logging.NOTSET,
}

DEFAULT_LEVEL = "WARNING"


def configure_logging(level: str | int | None = None, *, force: bool = False) -> None:
    """Configure root logger.

    Order of precedence for level:
    1. Explicit `level` argument if given
    2. Environment variable `MATINFO_LOG_LEVEL`
    3. Fallback to `WARNING`
    """
    invalid_level = None
    if level is None:
        level = os.environ.get("MATINFO_LOG_LEVEL", DEFAULT_LEVEL)

    if isinstance(level, str):
        resolved = _LEVEL_MAP.get(level.upper())
        if resolved is None:
            invalid_level = level
            resolved = _LEVEL_MAP[DEFAULT_LEVEL]
        level = resolved

    logging.basicConfig(
        level=level,
        format="%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        force=force,
    )
    if invalid_level is not None:
        logging.getLogger("matinfo").warning(
            "Invalid MATINFO_LOG_LEVEL %r; falling back to %s. Valid values: %s.",
            invalid_level,
            DEFAULT_LEVEL,
            ", ".join(sorted(set(_LEVEL_MAP) - {"WARN", "NOTSET"})),
        )


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Get a project logger."""
    return logging.getLogger(name or "matinfo")


__all__ = ["configure_logging", "get_logger"]
