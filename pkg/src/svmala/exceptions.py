"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class DataError(ValueError):
    """Input data could not be parsed or is unusable."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values or failed to factorize."""
