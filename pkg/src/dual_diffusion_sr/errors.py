"""Exception types shared across the package.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
NumericalFailure -> 3.
"""


class DDSRError(Exception):
    """Base class for every error raised on purpose by this package."""


class UsageError(DDSRError):
    """Bad command-line usage or a missing prerequisite artifact."""


class DataError(DDSRError, ValueError):
    """Inputs that cannot be used: bad shapes, ranges, files or configs."""


class ShapeError(DataError):
    """Tensor shapes that violate an operation's precondition."""


class TensorContainerError(DataError):
    """A tensor container file that is corrupt, truncated or mismatched."""


class NumericalFailure(DDSRError, RuntimeError):
    """A training loss or sampler state became non-finite."""
