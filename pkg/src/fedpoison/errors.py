"""Exception types shared across the simulator."""


class FedPoisonError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(FedPoisonError, ValueError):
    """A data file is malformed (bad magic, truncation, count mismatch)."""


class ConfigError(FedPoisonError, ValueError):
    """A configuration value violates an invariant."""


class ContractError(FedPoisonError, ValueError):
    """A call violates an operation precondition (shape/dimension mismatch)."""


class NumericError(FedPoisonError, ArithmeticError):
    """A computation produced non-finite values or a decomposition failed."""


class DegenerateInputError(FedPoisonError, ValueError):
    """An input is degenerate (zero-norm model, non-positive degree, ...)."""
