class PhaseLensError(Exception):
    """Base error. `stage` names the pipeline step that failed, if known."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.message = message
        self.stage = stage

    @property
    def detail(self):
        return self.message

    def __str__(self):
        if self.stage:
            return f"[{self.stage}] {self.detail}"
        return self.detail


class ArgumentError(PhaseLensError, ValueError):
    pass


class NumericError(PhaseLensError, ArithmeticError):
    def __init__(self, message, stage=None, node=None):
        super().__init__(message, stage)
        self.node = node


class LinearAlgebraError(NumericError):
    def __init__(self, message, stage=None, condition=None):
        super().__init__(message, stage)
        self.condition = condition


class BlowUpError(NumericError):
    def __init__(self, message, dt, stage='simulate'):
        super().__init__(message, stage)
        self.dt = dt


class ModelError(PhaseLensError, LookupError):
    pass


class ModelParseError(ModelError):
    def __init__(self, message, pointer='', stage='load'):
        super().__init__(message, stage)
        self.pointer = pointer

    @property
    def detail(self):
        return f"{self.message} at {self.pointer}" if self.pointer else self.message


class ModelValidationError(ModelError):
    pass


class BracketError(PhaseLensError):
    def __init__(self, message, bracket, stage='locate'):
        super().__init__(message, stage)
        self.bracket = bracket


class StageError(PhaseLensError):
    """Wraps a failure inside a multi-stage pipeline, keeping the original."""

    def __init__(self, stage, cause):
        super().__init__(getattr(cause, 'detail', str(cause)), stage)
        self.cause = cause
