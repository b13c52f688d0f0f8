"""Exceptions raised by meshloc.

Every error carries a human readable `message` and, when useful, the data
that caused it (`faulty_data`) so the command line can print both.
"""
from meshloc.util.log import logger


class MeshLocError(Exception):
    """Base class for all meshloc errors."""
    def __init__(self, message, faulty_data=None):
        self.message = message
        self.faulty_data = faulty_data
        logger.debug("%s: %s %s", self.__class__.__name__, message,
                     repr(faulty_data) if faulty_data is not None else '')
        super(MeshLocError, self).__init__(message)

    def __str__(self):
        if self.faulty_data is None:
            return self.message
        return self.message + "\n" + repr(self.faulty_data)

    def __repr__(self):
        return "%s(%r)" % (self.__class__.__name__, self.message)


class InvalidArgument(MeshLocError, ValueError):
    """A function was called outside of its preconditions."""


class MeshLoadError(MeshLocError):
    """Mesh file can't be read, parsed or yields an invalid mesh."""


class InvalidModel(MeshLocError, ValueError):
    """Unknown sensor model or invalid model parameters."""


class ScanMismatchError(MeshLocError, ValueError):
    """Scan doesn't match the ray layout of its sensor model."""


class NoCorrectionError(MeshLocError):
    """Not enough correspondences to estimate a correction."""


class NumericError(MeshLocError, ArithmeticError):
    """Non-finite values reached a solver."""


class ConfigError(MeshLocError):
    """Configuration file or command line values are invalid."""


class TrajectoryError(MeshLocError):
    """Trajectory can't be parsed or compared."""
    def __init__(self, message, faulty_data=None, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = "line %d: %s" % (line_number, message)
        super(TrajectoryError, self).__init__(message, faulty_data)
