"""
Exception hierarchy shared by every bn2o module.

The CLI maps these to exit codes:
- InvalidInputError, InconsistentBaseStateError -> 1
- InfeasibleComputationError -> 2
- ImpossibleEvidenceError    -> 3
"""


class Bn2oError(Exception):
    """Base class for all bn2o errors."""


class InvalidInputError(Bn2oError, ValueError):
    """Input violates a documented invariant (range, shape, file format)."""


class DimensionMismatchError(InvalidInputError):
    pass


class IndexOutOfRangeError(InvalidInputError, IndexError):
    pass


class InfeasibleComputationError(Bn2oError):
    """An enumeration cap or sweep budget would be exceeded."""


class ImpossibleEvidenceError(Bn2oError):
    """The evidence has zero probability under the model being queried."""


class InconsistentBaseStateError(Bn2oError):
    """Aggregate coefficients fell outside [0, 1] beyond the clamping band."""
