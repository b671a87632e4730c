"""Exception types raised across the package."""


class RADMError(Exception):
    """Base class for solver and harness errors."""


class SymmetryError(RADMError, ValueError):
    """Coefficients violate conjugate symmetry c_{-k} = conj(c_k)."""


class MeanFreeError(RADMError, ValueError):
    """A field expected to be mean-free carries a nonzero zero mode."""


class BlowUpError(RADMError, FloatingPointError):
    """NaN or Inf appeared in the solution."""

    def __init__(self, t: float, step_count: int, message: str = "non-finite coefficients"):
        super().__init__(f"{message} at t={t!r}, step {step_count}")
        self.t = t
        self.step_count = step_count


class ConfigError(RADMError, ValueError):
    """Invalid run configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


class OrderingError(RADMError, ValueError):
    """Diagnostic records are not strictly increasing in time."""


class AuditFailure(RADMError, AssertionError):
    """A symbol audit or verification experiment failed its check."""

    def __init__(self, message: str, offenders=None):
        super().__init__(message)
        self.offenders = list(offenders or [])


class SnapshotError(RADMError, ValueError):
    """Malformed, truncated or inconsistent snapshot file."""


class OutputLockedError(RADMError, RuntimeError):
    """Another process holds the lock on an output directory."""
