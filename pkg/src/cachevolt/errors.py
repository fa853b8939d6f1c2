"""Exception hierarchy shared by every cachevolt module."""


class CacheVoltError(Exception):
    """Base class for all cachevolt errors."""


class FitError(CacheVoltError):
    """Coefficient fitting failed."""

    kind = "FitError"


class InsufficientSamples(FitError):
    kind = "InsufficientSamples"


class DegenerateDesign(FitError):
    kind = "DegenerateDesign"


class FitDiverged(FitError):
    kind = "FitDiverged"


class OutOfRange(CacheVoltError, ValueError):
    pass


class OffGridValue(CacheVoltError, ValueError):
    pass


class AssignmentMismatch(CacheVoltError, ValueError):
    pass


class ArityMismatch(CacheVoltError, ValueError):
    pass


class EnumerationTooLarge(CacheVoltError):
    pass


class MissingMissRate(CacheVoltError, KeyError):
    def __init__(self, l1_size, l2_size):
        self.l1_size = l1_size
        self.l2_size = l2_size
        super().__init__(f"no miss-rate entry for (l1={l1_size} B, l2={l2_size} B)")

    def __str__(self):
        return self.args[0]


class NoFeasibleL2(CacheVoltError):
    pass


class NoFeasibleL1(CacheVoltError):
    pass


class DataError(CacheVoltError, ValueError):
    """Ingested data violates a documented invariant."""


class ParseError(CacheVoltError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
