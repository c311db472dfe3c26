"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line interface:
2 for input/validation problems, 3 for statistical degeneracy, 4 for
anything internal.
"""

from __future__ import annotations


class HetfxError(Exception):
    exit_code = 4

    def __init__(self, message: str = "", *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def with_stage(self, stage: str) -> "HetfxError":
        self.stage = stage
        return self

    def __str__(self) -> str:
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class ValidationError(HetfxError):
    exit_code = 2


class EmptyInput(ValidationError):
    pass


class RaggedInput(ValidationError):
    pass


class NonBinaryTreatment(ValidationError):
    pass


class NonBinaryInstrument(ValidationError):
    pass


class NonFiniteValue(ValidationError):
    pass


class DegenerateInstrument(ValidationError):
    pass


class UnsupportedCovariateMix(ValidationError):
    pass


class MissingColumn(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, *, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class MissingCell(ValidationError):
    pass


class InvalidAlpha(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


class DimensionMismatch(HetfxError):
    pass


class DegeneracyError(HetfxError):
    """The data do not support the requested estimate."""

    exit_code = 3


class EmptyCell(DegeneracyError):
    def __init__(self, message: str, *, cell=None, arm: int | None = None):
        super().__init__(message)
        self.cell = cell
        self.arm = arm


class EmptyArm(DegeneracyError):
    pass


class ZeroWeightSum(EmptyArm):
    pass


class WeakInstrument(DegeneracyError):
    def __init__(self, message: str, *, where=None):
        super().__init__(message)
        self.where = where


class DegenerateBandwidth(DegeneracyError):
    pass


class DensityFloor(DegeneracyError):
    def __init__(self, message: str, *, index: int | None = None, arm: int | None = None):
        super().__init__(message)
        self.index = index
        self.arm = arm


class EmptyMask(DegeneracyError):
    pass


class DegenerateRangeWarning(UserWarning):
    """A grid was requested over a zero-width range; a single point is returned."""
