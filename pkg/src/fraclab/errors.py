"""Exception types shared across the package."""


class FraclabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FraclabError, ValueError):
    """Inconsistent or unsupported parameters (dimension mismatch, bad radii, ...)."""


class DomainError(FraclabError, ValueError):
    """A function was evaluated outside its domain (e.g. kernel on the diagonal)."""


class ContractViolation(FraclabError, ValueError):
    """An argument violates an operation's contract (e.g. test function not vanishing on the collar)."""


class PreconditionError(FraclabError, ValueError):
    """A numerical precondition of an estimate does not hold on the given solution."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class UnsupportedError(FraclabError, ValueError):
    """The requested parameter regime is not covered (e.g. sp >= n where p* is undefined)."""


class NonConvergenceError(FraclabError, RuntimeError):
    """The solver hit its iteration cap; carries the last iterate and diagnostics."""

    def __init__(self, message, last_iterate=None, diagnostics=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics or {}
