class NumericalError(RuntimeError):
    """A solver, quadrature or root finder failed; ``module`` names where."""

    def __init__(self, module, message, mode=None):
        self.module = module
        self.mode = mode
        where = module if mode is None else f"{module} (mode {mode})"
        super().__init__(f"{where}: {message}")


class ConfigError(ValueError):
    """Run configuration failed validation; ``field`` is a dotted path."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
