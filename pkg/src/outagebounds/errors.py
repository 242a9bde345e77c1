"""Exception types shared across the package."""


class OutageBoundsError(Exception):
    """Base class for all package errors."""


class DomainError(OutageBoundsError, ValueError):
    """An argument lies outside the domain of the operation."""


class BracketError(DomainError):
    """The supplied bracket does not contain a sign change."""


class ConvergenceError(OutageBoundsError, ArithmeticError):
    """An iterative method ran out of iterations before meeting its tolerance."""


class UnsupportedDistributionError(OutageBoundsError, ValueError):
    """The marginal lacks a property (e.g. monotone density) the bound requires."""


class DivergenceError(OutageBoundsError, ArithmeticError):
    """The requested quantity is infinite for this marginal."""
