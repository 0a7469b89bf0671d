"""Exception types shared across the package."""


class NebClusterError(Exception):
    """Base class for all package errors."""


class ValidationError(NebClusterError, ValueError):
    """Bad arguments or configuration (dimension mismatch, out-of-range k, ...)."""


class IngestionError(NebClusterError):
    """A data file could not be parsed. Carries the offending row when known."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


class FitFailureError(NebClusterError):
    """Mixture fitting failed after all retries. Carries per-attempt diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class FilterFailureError(NebClusterError):
    """Component filtering removed every component."""


class NumericalError(NebClusterError):
    """A numerical routine produced non-finite values. Carries the step index."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step
