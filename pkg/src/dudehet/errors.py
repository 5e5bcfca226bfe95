"""Exception hierarchy shared by the analytic and simulation engines."""


class DudehetError(Exception):
    """Base class for all package errors."""


class DomainError(DudehetError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ContractError(DudehetError, ValueError):
    """A caller violated an operation's precondition (shape, hypothesis, ...)."""


class ConfigError(DudehetError, ValueError):
    """Invalid scenario configuration.

    ``line`` is set when the error comes from a configuration file.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AssociationError(DudehetError):
    """A UE landed in an association state the active bias branch rules out."""


class NumericalError(DudehetError, ArithmeticError):
    """A numerical method failed to reach its accuracy target."""


class HypergeometricError(NumericalError):
    def __init__(self, a, b, c, z, reason):
        self.params = (a, b, c, z)
        super().__init__(f"2F1({a}, {b}; {c}; {z}) failed: {reason}")


class IntegrationError(NumericalError):
    """Adaptive quadrature ran out of subdivisions.

    ``estimate`` and ``error`` hold the best value reached.
    """

    def __init__(self, message, estimate, error):
        self.estimate = estimate
        self.error = error
        super().__init__(message)
