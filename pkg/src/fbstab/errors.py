"""Exception hierarchy shared by all fbstab modules."""


class FbstabError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FbstabError, ValueError):
    """Malformed expression source.  Carries the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomainError(FbstabError, ValueError):
    """Expression evaluation left the real domain (log of non-positive,
    division by zero, ...)."""


class AssumptionError(FbstabError, ValueError):
    """A model assumption failed.  Names the condition and the sample point."""

    def __init__(self, condition, detail):
        super().__init__(f"assumption {condition} violated: {detail}")
        self.condition = condition


class SolverError(FbstabError, RuntimeError):
    """A numerical solver failed (no bracket, divergence, blow-up, ...)."""


class ConvergenceError(SolverError):
    """An iteration did not reach its tolerance within its budget."""


class GridError(FbstabError, ValueError):
    """A grid is unusable for the requested operation (too coarse, not
    strictly increasing, wrong endpoints)."""


class UsageError(FbstabError, ValueError):
    """Bad command-line or config usage (missing key, malformed value)."""
