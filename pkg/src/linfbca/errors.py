"""Exception types shared across the package."""


class LinfBcaError(Exception):
    """Base class for all package errors."""


class ContractViolationError(LinfBcaError, ValueError):
    """An argument or precondition check failed."""


class NumericalError(LinfBcaError, ArithmeticError):
    """A numerical procedure failed to reach its stated accuracy."""


class DegenerateMixtureError(NumericalError):
    """The observed covariance is rank deficient, so whitening is impossible."""


class PgmFormatError(LinfBcaError, ValueError):
    """A PGM file could not be parsed; ``offset`` is the failing byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class CampaignError(LinfBcaError, RuntimeError):
    """Too many trials of an experiment campaign failed."""
