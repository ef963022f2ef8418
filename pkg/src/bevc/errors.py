class BevcError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(BevcError, ValueError):
    pass


class NotHermitianError(BevcError, ValueError):
    pass


class NotAStateError(BevcError, ValueError):
    pass


class NotAProjectorError(BevcError, ValueError):
    pass


class NumericalError(BevcError, ArithmeticError):
    """An eigensolver or optimizer produced an unusable result."""
