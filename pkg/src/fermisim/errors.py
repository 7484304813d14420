"""Exception types shared across the library.

The CLI maps these onto process exit codes, so new error conditions should
reuse one of the classes below rather than raising bare built-ins.
"""


class FermisimError(Exception):
    """Base class for all library errors."""


class DomainError(FermisimError, ValueError):
    """Invalid value or operation for the mathematical domain (bad sector,
    symmetry-breaking operator, shape mismatch, ...)."""


class FormatError(FermisimError):
    """Malformed file or operator-string input."""


class ResourceError(FermisimError):
    """Request exceeds a configured size guard (dense conversions, oracles)."""


class ConvergenceError(FermisimError):
    """A series expansion hit its term cap before reaching the threshold."""

    def __init__(self, message: str, *, terms_used: int, last_norm: float):
        super().__init__(message)
        self.terms_used = terms_used
        self.last_norm = last_norm


class NumericError(FermisimError):
    """Numerical breakdown (singular pivot, failed factorization)."""
