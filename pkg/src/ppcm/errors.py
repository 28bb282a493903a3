"""Exception types raised across the package."""


class PPCMError(Exception):
    """Base class for all package errors."""


class DomainError(PPCMError, ValueError):
    """An argument lies outside the domain of the operation."""


class TruncationError(PPCMError, ValueError):
    """Fock cutoff too small for the requested photon number."""

    def __init__(self, message: str, required_cutoff: int):
        super().__init__(message)
        self.required_cutoff = required_cutoff


class NumericalInstabilityError(PPCMError, ArithmeticError):
    """A finite-difference estimate failed its consistency check."""

    def __init__(self, message: str, coarse: float, fine: float):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class ConditioningError(PPCMError, ValueError):
    """Conditioning on an outcome whose probability is too small."""


class IllConditionedError(PPCMError, ArithmeticError):
    """A derivative or slope vanishes where it must be inverted."""


class DegenerateDesignError(PPCMError, ValueError):
    """A fit was given too few distinct abscissae."""


class BracketError(PPCMError, ValueError):
    """The likelihood has no interior maximum inside the bracket."""

    def __init__(self, message: str, loglik_lo: float, loglik_hi: float):
        super().__init__(message)
        self.loglik_lo = loglik_lo
        self.loglik_hi = loglik_hi


class ConfigError(PPCMError, ValueError):
    """Bad run configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, constraint: str):
        super().__init__(f"{key}: {constraint}")
        self.key = key
        self.constraint = constraint


class SchemaError(PPCMError, ValueError):
    """Rows do not match the declared table schema."""
