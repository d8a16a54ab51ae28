"""Exception types shared by all modules."""


class AdaptomoError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(AdaptomoError, ValueError):
    pass


class OutOfRangeError(InvalidArgumentError):
    pass


class FormatError(AdaptomoError, ValueError):
    """A raster or filter file violates its on-disk schema."""


class PackingError(AdaptomoError, RuntimeError):
    """Sphere packing exhausted its attempt budget."""


class NumericalError(AdaptomoError, ArithmeticError):
    pass


class DegenerateInputError(InvalidArgumentError):
    pass


class ConfigError(AdaptomoError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
