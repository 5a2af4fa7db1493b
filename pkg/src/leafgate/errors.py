"""Exception hierarchy shared across the package.

Every error that can surface through the CLI carries an ``exit_code`` so the
command wrapper can map failures to the documented process exit codes:
2 usage, 3 data, 4 model file, 5 training.
"""


class LeafgateError(Exception):
    exit_code = 1


class UsageError(LeafgateError):
    exit_code = 2


class DataError(LeafgateError):
    exit_code = 3


class ShapeError(DataError):
    """Dimension mismatch inside the network, names the offending layer."""


class DegenerateInputError(DataError):
    """Input whose statistics make the requested operation undefined."""


class ModelFileError(LeafgateError):
    exit_code = 4


class BadMagicError(ModelFileError):
    pass


class UnsupportedVersionError(ModelFileError):
    pass


class ChecksumError(ModelFileError):
    pass


class ModelFormatError(ModelFileError):
    """Structurally broken model file (truncation, bad header, count mismatch)."""


class TrainingError(LeafgateError):
    exit_code = 5


class NonFiniteError(TrainingError):
    """NaN/Inf appeared in a gradient or parameter during training."""


class StratificationError(TrainingError):
    """A class has too few samples to build the requested stratified split."""
