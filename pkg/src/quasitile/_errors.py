"""exception hierarchy and the exit codes the command line maps them to"""
from __future__ import annotations

from typing import Any


class QuasitileError(Exception):
    exit_code = 5


class UsageError(QuasitileError, ValueError):
    """a precondition of an operation does not hold"""

    exit_code = 2


class ConfigError(UsageError):
    """a configuration value failed validation

    the message always starts with the dotted path of the offending field
    """

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


class UnsupportedError(UsageError):
    exit_code = 2


class DomainError(QuasitileError, ValueError):
    exit_code = 2


class MarginError(QuasitileError, ValueError):
    """the window cannot host the requested horizon"""

    exit_code = 3


class ResourceError(QuasitileError, RuntimeError):
    exit_code = 3

    def __init__(self, message: str, achieved: Any = None) -> None:
        super().__init__(message)
        self.achieved = achieved


class HypothesisFailure(QuasitileError, RuntimeError):
    exit_code = 4

    def __init__(self, message: str, diagnostic: Any = None) -> None:
        super().__init__(message)
        self.diagnostic = diagnostic


class IntegrityError(QuasitileError, ValueError):
    exit_code = 4

    def __init__(self, message: str, position: Any = None) -> None:
        super().__init__(message)
        self.position = position


class InvariantViolation(QuasitileError, AssertionError):
    exit_code = 5


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, QuasitileError):
        return exc.exit_code
    return 5
