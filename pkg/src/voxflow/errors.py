"""Exception taxonomy shared by all voxflow modules.

Every error raised by the library derives from :class:`VoxflowError` and
belongs to one of four categories used by the CLI to pick an exit code:
I/O (2), schema (3), shape (4), infeasible (5).
"""


class VoxflowError(Exception):
    """Base class for all voxflow errors."""


class IOFormatError(VoxflowError):
    """Unreadable or malformed binary/image input (CLI exit code 2)."""


class SchemaError(VoxflowError):
    """Malformed structured text input such as CSV or JSON (exit code 3)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ShapeError(VoxflowError):
    """Dimension or region mismatch (exit code 4)."""


class InfeasibleError(VoxflowError):
    """Request that cannot be satisfied by the given data (exit code 5)."""


# --- I/O format errors ----------------------------------------------------

class BadMagic(IOFormatError):
    pass


class TruncatedFile(IOFormatError):
    pass


class DtypeUnknown(IOFormatError):
    pass


class OverlappingOffsets(IOFormatError):
    pass


class JsonMalformed(SchemaError):
    pass


class NonContiguousIndices(IOFormatError):
    pass


class MixedDimensions(IOFormatError):
    pass


class RangeError(SchemaError):
    """A parsed value lies outside its documented range."""


# --- shape errors ----------------------------------------------------------

class RegionOutOfBounds(ShapeError):
    pass


class ShapeMismatch(ShapeError):
    pass


class ShapeIncompatible(ShapeError):
    pass


class KernelLargerThanInput(ShapeError):
    pass


class EvenDepthCenter(ShapeError):
    pass


class NotRGB(ShapeError):
    pass


# --- infeasible requests ----------------------------------------------------

class EmptySet(InfeasibleError):
    pass


class OneClassOnly(InfeasibleError):
    pass


class IdMismatch(InfeasibleError):
    pass


class SplitInfeasible(InfeasibleError):
    pass


class InfeasibleBatch(InfeasibleError):
    pass


class AxisTooShort(InfeasibleError):
    pass


class NoContourFound(InfeasibleError):
    pass
