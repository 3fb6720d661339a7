"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
DivergenceError -> 4. Everything else is a plain failure.
"""

from __future__ import annotations


class FedsiloError(Exception):
    """Base class for all package errors."""


class ConfigError(FedsiloError):
    """Invalid experiment or CLI configuration."""


class DataError(FedsiloError):
    """Unreadable or malformed input data."""


class ValidationError(FedsiloError, ValueError):
    """A parameter is out of its documented domain.

    `param` names the offending parameter.
    """

    def __init__(self, param: str, message: str):
        super().__init__(message)
        self.param = param


class DimensionMismatchError(FedsiloError, ValueError):
    """Operands disagree on dimensionality."""

    def __init__(self, message: str, *, expected: int, actual: int):
        super().__init__(f"{message}: expected dim {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class DivergenceError(FedsiloError, ArithmeticError):
    """Training produced a non-finite loss.

    `epoch` is the 0-based epoch index at which the loss went non-finite;
    `site` is set when the failure happened inside a federation site.
    """

    def __init__(self, message: str, *, epoch: int, site: int | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.site = site


class PreconditionError(FedsiloError):
    """Privacy preconditions do not hold for a training set.

    `violations` lists the human-readable findings.
    """

    def __init__(self, violations: tuple[str, ...]):
        super().__init__("; ".join(violations))
        self.violations = violations
