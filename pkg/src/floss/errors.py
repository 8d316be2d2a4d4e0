"""Exception hierarchy shared across the package."""


class FlossError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(FlossError, ValueError):
    """Shapes of maps (or vectors) do not agree."""


class DomainError(FlossError, ValueError):
    """A value lies outside its admissible range."""


class SaturationError(FlossError, ArithmeticError):
    """A loss would be infinite, e.g. -log(F) at F == 0."""


class FormatError(FlossError, ValueError):
    """A file does not follow the expected layout."""


class UnsupportedFormatError(FormatError):
    """A well-formed file of a variant we do not read (P2, 16-bit PGM...)."""


class ConfigError(FlossError, ValueError):
    """A configuration cannot be honoured."""


class DivergenceError(FlossError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, iteration, loss):
        super().__init__(f"training diverged at iteration {iteration} (loss={loss!r})")
        self.iteration = iteration
        self.loss = loss
