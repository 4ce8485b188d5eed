"""Exception and warning types shared across the package."""


class ContractViolationError(ValueError):
    """An input violates a documented precondition (shape, range, or finiteness)."""


class CameraParameterError(ContractViolationError):
    """A camera description is inadmissible (non-positive gain, bad radial profile, ...)."""


class WeightFormatError(ValueError):
    """A weight file is malformed or does not match the expected record layout."""


class FrameFormatError(ValueError):
    """A frame file is malformed (bad magic, kind byte, or payload size)."""


class DegenerateSceneError(ValueError):
    """A scene statistic cannot be computed (e.g. dry/wet reference temperatures collapse)."""


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during optimisation.

    Carries the epoch and step at which the first non-finite value appeared.
    """

    def __init__(self, epoch: int, step: int, message: str | None = None):
        self.epoch = epoch
        self.step = step
        super().__init__(
            message or f"non-finite loss at epoch {epoch}, step {step}"
        )


class SaturationWarning(UserWarning):
    """More than 1% of simulated pixels were clamped to the gray-level range."""
