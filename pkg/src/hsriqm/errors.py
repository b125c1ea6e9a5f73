"""Exception hierarchy shared by all pipeline stages."""


class HsriqmError(Exception):
    """Base class for all metric errors."""


class FormatError(HsriqmError):
    """Unsupported or malformed image / container format."""


class ArgumentError(HsriqmError, ValueError):
    """Invalid argument to a pipeline operation."""


class TrainingError(HsriqmError):
    """A model component could not be trained from the given data."""


class SolverError(HsriqmError):
    """An iterative solver diverged or violated its monotonicity contract."""


class ModelError(HsriqmError):
    """A loaded model is inconsistent or unusable (e.g. degenerate stats)."""


class UndefinedStatisticError(HsriqmError, ValueError):
    """A statistic is undefined for the given data (e.g. zero variance)."""


class StageError(HsriqmError):
    """Wraps a failure inside score_pair with the name of the failing stage."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
