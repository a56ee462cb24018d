"""Exception types shared across the package."""


class FallcastError(Exception):
    """Base class for all package-specific errors."""


class TrainingDivergedError(FallcastError):
    """A gradient or loss became non-finite during optimization."""


class MissingAnchorError(FallcastError):
    """Shoulder/hip keypoints needed for the body center are invalid."""


class DegeneratePoseError(FallcastError):
    """Torso length is zero, so features cannot be normalized."""


class WindowUnderflowError(FallcastError):
    """Not enough history to assemble a full feature window."""


class UnrecoverableGapError(FallcastError):
    """A keypoint is missing before two valid samples were seen."""


class SchemaError(FallcastError):
    """An input file violates the keypoint-sequence schema."""


class SequenceParseError(FallcastError):
    """An input file could not be parsed at all."""


class ConfigurationError(FallcastError):
    """A command or evaluation was invoked with an unusable configuration."""


class InsufficientDataError(FallcastError):
    """Too few samples for the requested fit."""
