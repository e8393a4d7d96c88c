"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where an operation is defined."""


class ComputationError(ArithmeticError):
    """A numerical procedure failed to converge."""


class QuadratureError(ComputationError):
    """Adaptive quadrature ran out of subdivisions before meeting its tolerance.

    The best available estimate and its error bound are kept on the exception
    so callers can decide whether a loose answer is still usable.
    """

    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class ConfigError(ValueError):
    """A configuration file failed validation.

    ``problems`` lists one ``(field, message)`` tuple per offending field.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{field}: {msg}" for field, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
