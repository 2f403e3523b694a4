"""Exception hierarchy shared across the package.

Everything derives from NeurospeechError so callers can catch broadly.
Errors that signal bad arguments also subclass ValueError, which keeps
them compatible with plain-ValueError expectations in calling code.
"""


class NeurospeechError(Exception):
    """Base class for all package errors."""


class InvalidFrequencyError(NeurospeechError, ValueError):
    """Cutoff or center frequency outside (0, Nyquist) or badly ordered."""


class FilterInstabilityError(NeurospeechError):
    """A designed filter has a pole on or outside the unit circle."""


class NonFiniteOutputError(NeurospeechError):
    """Filtering produced NaN or infinity."""


class TooShortSignalError(NeurospeechError, ValueError):
    """Signal has fewer samples than one analysis window or frame."""


class WindowTooShortError(NeurospeechError, ValueError):
    """Statistics window must contain at least two samples."""


class UnknownChannelError(NeurospeechError, ValueError):
    """Requested channel label is not present in the signal."""


class WrongFrameLengthError(NeurospeechError, ValueError):
    """Frame passed to the cepstral transform has the wrong sample count."""


class WrongSampleRateError(NeurospeechError, ValueError):
    """Signal sample rate does not match what the operation requires."""


class SequenceTooShortError(NeurospeechError, ValueError):
    """Feature sequence too short for the requested delta window."""


class DimensionMismatchError(NeurospeechError, ValueError):
    """Array shape incompatible with the model or with a companion array."""


class InsufficientSamplesError(NeurospeechError, ValueError):
    """Fewer fit rows than requested components."""


class DegenerateFitError(NeurospeechError):
    """Decomposition has no usable variance (all eigenvalues zero)."""


class DivergenceError(NeurospeechError):
    """Training produced a non-finite loss."""


class NonFiniteGradientError(DivergenceError):
    """A gradient tensor contains NaN or infinity."""


class EmptySplitError(NeurospeechError, ValueError):
    """A train/validation/test split contains no examples."""


class ClassTooSmallError(NeurospeechError, ValueError):
    """A class has too few trials to populate all three splits."""


class CorruptFileError(NeurospeechError):
    """On-disk artifact failed validation.

    ``offset`` is the byte position at which the problem was detected,
    when that is meaningful.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class MissingArtifactError(NeurospeechError):
    """A required upstream artifact (features, reducer, model) is absent."""


class MissingSoftTargetError(NeurospeechError, ValueError):
    """A training example has no stored teacher logits."""


class IdMismatchError(NeurospeechError, ValueError):
    """Example ids are duplicated or do not line up across stages."""
