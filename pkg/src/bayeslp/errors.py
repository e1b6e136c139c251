"""Exception types shared across the package."""


class BayesLPError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(BayesLPError):
    """A matrix required to be positive definite is not (to within the
    factorization tolerance).  Typically signals a degenerate precision,
    e.g. an improper prior with no likelihood contribution."""


class DimensionMismatch(BayesLPError, ValueError):
    """Array shapes are inconsistent with the requested operation."""


class InvalidParameter(BayesLPError, ValueError):
    """A scalar or hyperparameter lies outside its valid domain."""


class InvalidOrder(BayesLPError, ValueError):
    """Difference order is incompatible with the sequence length."""


class InsufficientRange(BayesLPError, ValueError):
    """Requested knot grid cannot span enough intervals for the degree."""


class OutOfSupport(BayesLPError, ValueError):
    """An evaluation point lies outside the fully supported knot span."""


class IndexOutOfRange(BayesLPError, IndexError):
    """A coefficient or horizon index is out of bounds."""


class InsufficientData(BayesLPError, ValueError):
    """Not enough observations to build the requested design."""


class EmptyDraws(BayesLPError, ValueError):
    """A posterior-draw container holds no stored draws."""


class ParseError(BayesLPError, ValueError):
    """A data file could not be parsed; carries the row number."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class GapError(BayesLPError, ValueError):
    """A monthly series has a missing month; names the first gap."""

    def __init__(self, message, missing_month=None):
        super().__init__(message)
        self.missing_month = missing_month


class NonPositiveValue(BayesLPError, ValueError):
    """A transform requiring strictly positive inputs saw a value <= 0."""


class SpanMismatch(BayesLPError, ValueError):
    """Series spans share no common range."""


class ConfigError(BayesLPError, ValueError):
    """A run configuration is invalid (unknown key, bad value, missing path)."""


class ChainAborted(BayesLPError, RuntimeError):
    """A Gibbs chain failed mid-run; records where.

    Attributes
    ----------
    iteration : int
        Sweep index at which the failure occurred.
    block : str
        Name of the sampling block that raised.
    """

    def __init__(self, iteration, block, cause):
        super().__init__(f"chain aborted at iteration {iteration}, block '{block}': {cause}")
        self.iteration = iteration
        self.block = block
