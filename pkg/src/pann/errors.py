"""Exception types shared across the package.

Everything raised on purpose derives from :class:`PannError` so callers (and
the command line front end) can distinguish deliberate rejections from bugs.
"""


class PannError(Exception):
    """Base class for all deliberate errors raised by this package."""


class SingularTensorError(PannError):
    """Inversion of a tensor whose determinant is numerically zero."""


class NonPositiveDeterminantError(PannError):
    """A deformation state with det C <= 0 where positivity is required."""


class NonPositiveInvariantError(PannError):
    """An anisotropic invariant (I4 or I5) came out <= 0 for an SPD input."""


class DimensionMismatchError(PannError):
    """Array or component-count shape does not match the expected layout."""


class BracketFailureError(PannError):
    """A scalar root could not be bracketed inside the admissible interval."""


class NewtonDivergenceError(PannError):
    """The safeguarded Newton iteration exhausted its iteration budget."""


class EmptyDatasetError(PannError):
    """An operation that needs at least one tuple received none."""


class DatasetTooSmallError(PannError):
    """A split or statistic needs more tuples than the dataset holds."""


class AllZeroStressError(PannError):
    """Relative error is undefined because every reference stress is zero."""


class NonFiniteLossError(PannError):
    """Every calibration restart produced a NaN or infinite loss."""


class FormatError(PannError):
    """A dataset or model file does not conform to the documented format."""


class ConfigError(PannError):
    """A configuration file or flag combination is invalid."""


class SymmetryMismatchError(PannError):
    """A model and an operation disagree about the material symmetry class."""


class HypothesisViolatedWarning(UserWarning):
    """A theorem hypothesis failed numerically; the check ran in degraded form."""
