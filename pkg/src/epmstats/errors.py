"""Exception types shared across the package."""


class EpmStatsError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(EpmStatsError):
    pass


class NonHermitianInput(EpmStatsError):
    pass


class NoConvergence(EpmStatsError):
    pass


class InvalidState(EpmStatsError):
    """A matrix failed density-operator validation. Carries the diagnostic."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class StepSizeError(EpmStatsError):
    pass


class PositivityDrift(EpmStatsError):
    pass


class MapNotTracePreserving(EpmStatsError):
    pass


class SupportMismatch(EpmStatsError):
    pass


class EmptySample(EpmStatsError):
    pass


class InvalidParams(EpmStatsError):
    pass


class ConfigError(EpmStatsError):
    """Aggregated configuration errors: list of (key-path, message) pairs."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.issues))
