"""
Exception hierarchy for graph learning.

Every error carries the process exit code of its family so the command line
driver can map failures without inspecting messages:

    InputError   -> 2 (unreadable or invalid input)
    ShapeError   -> 3 (length / dimension disagreements)
    NumericError -> 4 (factorization or arithmetic failure)
"""
from typing import Optional


class SrggError(Exception):
    exit_code = 1


# --- input errors -------------------------------------------------------

class InputError(SrggError):
    exit_code = 2


class MissingInput(InputError):
    def __init__(self, path: str):
        super().__init__(f"Input file not found: {path}")
        self.path = path


class ParseError(InputError):
    def __init__(self, row: int, col: int, value: str, path: Optional[str] = None):
        where = f"{path}: " if path else ""
        super().__init__(f"{where}cannot parse cell at row {row}, column {col}: {value!r}")
        self.row = row
        self.col = col
        self.value = value


class EmptyData(InputError):
    pass


class ZeroVariance(InputError):
    def __init__(self, col):
        super().__init__(f"Column {col!r} has zero variance")
        self.col = col


class TooManyRows(InputError):
    def __init__(self, requested: int, available: int):
        super().__init__(f"Requested {requested} rows but only {available} available")
        self.requested = requested
        self.available = available


class InvalidCorrelationEntry(InputError):
    pass


class DegenerateClass(InputError):
    pass


# --- shape errors -------------------------------------------------------

class ShapeError(SrggError):
    exit_code = 3


class LengthMismatch(ShapeError):
    def __init__(self, first: int, second: int, what: str = "lengths"):
        super().__init__(f"Mismatched {what}: {first} vs {second}")
        self.first = first
        self.second = second


class DimensionMismatch(ShapeError):
    pass


class EmptyTrace(ShapeError):
    pass


class EmptyPostBurnin(ShapeError):
    pass


# --- numeric errors -----------------------------------------------------

class NumericError(SrggError):
    exit_code = 4


class NotSymmetric(NumericError):
    pass


class RidgeExhausted(NumericError):
    pass


class SingularFactor(NumericError):
    pass


class SingularCorrelation(NumericError):
    pass


class NonpositiveVariance(NumericError):
    pass


class ZeroUncertainty(NumericError):
    pass


class DegenerateRanks(NumericError):
    pass


class ScaleRangeError(NumericError):
    pass


class ChainFailure(NumericError):
    """A numeric failure inside the sampler, tagged with the iteration index."""

    def __init__(self, iteration: int, cause: Exception):
        super().__init__(f"Chain failed at iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause
