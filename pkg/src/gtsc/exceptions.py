"""Exception and warning classes.

Each error maps onto one CLI exit code through its ``exit_code`` attribute:
2 for bad input data, 3 for numerical failures.
"""


class GTSCError(Exception):
    exit_code = 3


class DataError(GTSCError, ValueError):
    exit_code = 2


class NumericalError(GTSCError, ArithmeticError):
    exit_code = 3


class DimMismatch(DataError):
    """Operand shapes are incompatible."""


class SizeGuard(GTSCError, MemoryError):
    """The circulant oracle would exceed its entry budget."""

    exit_code = 3


class NonHermitianSpectrum(NumericalError):
    """A spectrum is not conjugate symmetric, so it has no real inverse DFT."""


class NonFiniteObjective(NumericalError):
    """NaN or Inf appeared in an objective value."""


class SingularSystem(NumericalError):
    """A per-slice r x r system in the dictionary update is ill-conditioned."""


class DegenerateData(DataError):
    """Tied neighbor distances overflow the neighbor count (strict mode only)."""


class NonFiniteData(DataError):
    """An input tensor holds NaN or Inf."""


class LabelMismatch(DataError):
    """Label vectors have different lengths or cannot be assigned."""


class BadMagic(DataError):
    """A tensor file does not start with the expected magic bytes."""


class DimCorruption(DataError):
    """A tensor file's declared dims disagree with its payload size."""


class ConstraintViolation(DataError):
    """A loaded dictionary has an atom with squared norm above 1."""


class MixedDimensions(DataError):
    """Images in one dataset have different sizes."""


class UnreadableImage(DataError):
    """An image file could not be parsed."""


class MissingData(DataError):
    """An input path does not exist or holds no data."""


class NoConvergenceWarning(RuntimeWarning):
    """An iterative method hit its iteration cap."""


class DegenerateCodesWarning(RuntimeWarning):
    """All codes are zero, so the dictionary update is undetermined."""
