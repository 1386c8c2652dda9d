# Defines the exceptions raised by pcan
# 
# Copyright (c) 2026, pcan developers and contributors


__all__ = ['PCANError', 'InvalidBoxError', 'ConventionMismatchError',
           'GenerationError', 'SamplerError', 'ShapeError',
           'ConfigurationError', 'TrainingAbortError', 'CheckpointError',
           'FormatError']


class PCANError(Exception):
    """Base class of every error raised on purpose by pcan."""


class InvalidBoxError(PCANError, ValueError):
    """Degenerate box, or coordinates outside the range of their convention."""


class ConventionMismatchError(InvalidBoxError):
    """Binary box operation called on boxes with different conventions."""


class GenerationError(PCANError, RuntimeError):
    """The scene generator ran out of resampling attempts."""


class SamplerError(PCANError, RuntimeError):
    """A rejection sampler could not satisfy its constraints.

    :param constraint: name of the constraint that could not be met
    """

    def __init__(self, message, constraint=None):
        super(SamplerError, self).__init__(message)
        self.constraint = constraint


class ShapeError(PCANError, ValueError):
    """Array shape (or size) contract violated."""


class ConfigurationError(PCANError, ValueError):
    """Invalid configuration value or key."""


class TrainingAbortError(PCANError, RuntimeError):
    """Training stopped because a loss component is not finite.

    :param component: name of the offending loss component
    :param checkpoint_path: path of the last good checkpoint, if any
    """

    def __init__(self, message, component=None, checkpoint_path=None):
        super(TrainingAbortError, self).__init__(message)
        self.component = component
        self.checkpoint_path = checkpoint_path


class CheckpointError(PCANError, OSError):
    """Checkpoint missing or unreadable."""


class FormatError(PCANError, ValueError):
    """Binary array file with a bad header or truncated payload."""
