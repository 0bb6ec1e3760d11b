"""Shared CLI helpers for matinfo commands."""

import sys
from typing import NoReturn, Optional

from matinfo.common.constants import ExitCodes
from matinfo.common.errors import DataInvariantError, InputFormatError, NumericalFailureError


def exit_with_error(message: str, exit_code: int) -> NoReturn:
    """Print an error message and exit with the specified code."""
    print(f"Error: {message}", file=sys.stderr)
    sys.exit(exit_code)


def map_exception_to_exit_code(exc: Exception) -> Optional[int]:
    """Translate known exceptions to matinfo exit codes."""
    if isinstance(exc, InputFormatError):
        return ExitCodes.USAGE_ERROR
    if isinstance(exc, (DataInvariantError, NumericalFailureError)):
        return ExitCodes.DATA_INVARIANT_VIOLATION
    return None


def fail(exc: Exception, context: str) -> NoReturn:
    """Exit for a known matinfo exception; anything else propagates."""
    exit_code = map_exception_to_exit_code(exc)
    if exit_code is None:
        raise exc
    exit_with_error(f"{context}: {exc}", exit_code)


def format_scalar(value: float) -> str:
    """12 digits after the decimal point, dot radix, no negative zero."""
    text = f"{value:.12f}"
    return text.lstrip("-") if float(text) == 0.0 else text
