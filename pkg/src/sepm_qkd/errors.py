"""Exception types raised across the package."""


class SepmError(Exception):
    """Base class for all package errors."""


class ParameterError(SepmError, ValueError):
    """An argument is outside its allowed domain."""


class ContractError(SepmError, ValueError):
    """An input violates a precondition (e.g. an unnormalized state)."""


class EstimationError(SepmError, ValueError):
    """Not enough data, or degenerate data, to form an estimate."""


class DegenerateInputError(SepmError, ValueError):
    """A closed-form expression has a vanishing denominator."""
