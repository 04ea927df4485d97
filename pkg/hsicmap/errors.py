from __future__ import annotations


class HsicMapError(RuntimeError):
    """Base class for every error raised by the toolkit."""


class InputError(HsicMapError, ValueError):
    """Bad shapes, unparsable files, invalid arguments (CLI exit code 2)."""


class DegenerateDataError(HsicMapError):
    """Data carries no usable variation (CLI exit code 3)."""


class AllSamplesIdentical(DegenerateDataError):
    pass


class DegenerateNull(DegenerateDataError):
    pass


class NonFiniteInput(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class RowCountMismatch(ShapeMismatch):
    pass


class NotCentered(InputError):
    pass


class ZeroVariance(InputError):
    pass


class NonPositiveError(InputError):
    pass


class ParseError(InputError):
    def __init__(self, path: str, line: int, reason: str):
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(f"{path}:{line}: {reason}")


class PowerIterationNoConvergence(HsicMapError):
    pass


class AlreadyCentered(UserWarning):
    """Centering an already centered feature map (allowed, result unchanged)."""
