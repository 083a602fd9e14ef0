"""Exception types shared across the package."""


class HartreeError(Exception):
    """Base class for errors raised by this package."""


class DomainError(HartreeError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class DivergenceError(HartreeError, ValueError):
    """An improper integral diverges for the requested exponents."""


class SingularInputError(HartreeError, ValueError):
    """A kernel was evaluated exactly at one of its singular points."""


class QuadratureError(HartreeError, RuntimeError):
    """The integrand produced non-finite values."""
