"""Environment-backed settings for matinfo.

Recognized variables:
* `MATINFO_THREADS`   worker thread cap (default 1 for reproducibility)
* `MATINFO_LOG_LEVEL` logging level (see `logging_config`)
"""

import os
from contextlib import contextmanager
from typing import Iterator, Mapping, Optional

from threadpoolctl import threadpool_limits

from .constants import DEFAULT_THREADS
from .logging_config import get_logger


class MatinfoSettings:
    """Resolve environment configuration for matinfo."""

    def __init__(self, environ: Optional[Mapping[str, str]] = None) -> None:
        self._environ = os.environ if environ is None else environ
        self._log = get_logger(__name__)

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        return self._environ.get(key, default)

    def threads(self) -> int:
        raw = (self.get("MATINFO_THREADS") or "").strip()
        if not raw:
            return DEFAULT_THREADS
        try:
            value = int(raw)
        except ValueError:
            self._log.warning("Invalid MATINFO_THREADS %r; using %d.", raw, DEFAULT_THREADS)
            return DEFAULT_THREADS
        if value < 1:
            self._log.warning("MATINFO_THREADS must be positive (got %d); using %d.", value, DEFAULT_THREADS)
            return DEFAULT_THREADS
        return value

    def log_level(self) -> Optional[str]:
        return self.get("MATINFO_LOG_LEVEL")


@contextmanager
def limited_threads(settings: Optional[MatinfoSettings] = None) -> Iterator[int]:
    """Cap BLAS/OpenMP pools to the configured thread count while active."""
    settings = settings or MatinfoSettings()
    threads = settings.threads()
    with threadpool_limits(limits=threads):
        yield threads
