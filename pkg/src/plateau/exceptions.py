"""Exception hierarchy.

Two families matter to callers: :class:`InputError` for malformed or
unsupported input (CLI exit code 2) and :class:`MethodError` for inputs
that are well formed but on which the method degenerates (exit code 3).
"""


class PlateauError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class InputError(PlateauError, ValueError):
    code = "input-error"


class MissingColumn(InputError):
    code = "missing-column"


class NonNumericValue(InputError):
    code = "non-numeric-value"


class NonFiniteValue(InputError):
    code = "non-finite-value"


class TooFewPoints(InputError):
    code = "too-few-points"


class NonPositiveCoordinate(InputError):
    code = "non-positive-coordinate"


class DegenerateColumn(InputError):
    """A coordinate column has zero spread after the log transform."""

    code = "degenerate-column"


class DimensionMismatch(InputError):
    code = "dimension-mismatch"


class CorruptResultFile(InputError):
    code = "corrupt-result-file"


class Unsupported(InputError):
    """Valid input that the requested operation does not handle."""

    code = "unsupported"


class MethodError(PlateauError):
    code = "method-degenerate"


class DegeneratePartition(MethodError):
    """One side of the soft partition carries too little effective mass."""

    code = "degenerate-partition"


class ConstantMetric(MethodError):
    code = "constant-metric"


class AllRestartsDegenerate(MethodError):
    code = "all-restarts-degenerate"


class EmptySide(MethodError):
    code = "empty-side"


class NoSignChange(MethodError):
    code = "no-sign-change"


class ZeroMass(MethodError):
    code = "zero-mass"
