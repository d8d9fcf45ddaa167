"""Exception hierarchy shared by all modules."""


class ResonanceError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ResonanceError, ValueError):
    """An input violates a documented invariant."""


class ParseError(ResonanceError, ValueError):
    """A protocol or schedule file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegeneracyError(ValidationError):
    """Resonances are (numerically) degenerate: tau**2 == 1 or a defective matrix."""


class RegimeError(ValidationError):
    """Parameters fall outside the regime a computation was asked for."""


class DegenerateCouplingError(ValidationError):
    """Zero coupling, so sigma vanishes and tau is undefined."""


class NumericError(ResonanceError, ArithmeticError):
    """Quadrature or linear algebra failed to reach the requested accuracy."""

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message} (residual estimate {residual:.3g})"
        super().__init__(message)
        self.residual = residual


class InfraredError(NumericError):
    """The form factor does not have a finite, positive infrared limit gamma_0."""


class BudgetError(ResonanceError, RuntimeError):
    """Full path enumeration was requested beyond the configured budget."""
