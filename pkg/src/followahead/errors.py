"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    pass


class DegenerateGeometryError(ValueError):
    """Robot and human positions coincide, so a bearing is undefined."""


class ParseError(ValueError):
    """Malformed map, parameter, state or trace document."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    pass


class NotReadyError(RuntimeError):
    """Not enough pose history for a line fit."""


class TrainingError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


class PlanningInfeasibleError(RuntimeError):
    pass
