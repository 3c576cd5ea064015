class ElaError(Exception):
    """Base class for all errors raised by hilbert_ela."""

    def __init__(self, msg: str) -> None:
        self.msg = msg
        super().__init__(msg)


class DomainError(ElaError, ValueError):
    """Error raised when an argument lies outside the domain of an operation."""


class RangeError(ElaError, ValueError):
    """Error raised when a curve index or a grid coordinate is out of range."""


class CapacityError(ElaError):
    """Error raised when a request exceeds what a Hilbert curve can hold."""


class ContractError(ElaError):
    """Error raised when the caller breaks a precondition (e.g. unordered sample)."""
