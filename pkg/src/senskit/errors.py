"""Exception hierarchy. Each class carries the CLI exit code for its error class."""


class SenskitError(Exception):
    exit_code = 1


class StackFormatError(SenskitError):
    """Missing, truncated or malformed CStack files."""

    exit_code = 3


class NullspaceError(SenskitError):
    """The calibration Gram has no singular values below the threshold (R = 0)."""

    exit_code = 4


class DimensionMismatchError(SenskitError, ValueError):
    exit_code = 5


class CalibrationTooSmallError(DimensionMismatchError):
    """Calibration region cannot hold a single shift of the kernel support."""


class MemoryCapError(SenskitError, MemoryError):
    """Refusal to materialise a per-voxel filter field above the configured cap."""

    exit_code = 6
