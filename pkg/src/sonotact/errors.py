"""Exception hierarchy. Every error raised on purpose derives from SonotactError."""


class SonotactError(Exception):
    """Base class; the CLI maps it to exit status 4 unless a subclass says otherwise."""

    exit_code = 4


# audio
class NonPositiveDuration(SonotactError, ValueError):
    pass


class FrequencyAboveNyquist(SonotactError, ValueError):
    pass


class InvalidAmplitude(SonotactError, ValueError):
    pass


class SignalTooShort(SonotactError, ValueError):
    pass


class InvalidBand(SonotactError, ValueError):
    pass


# audio bank
class MissingLabel(SonotactError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnreadableWav(SonotactError, OSError):
    pass


class EmptyBank(SonotactError, ValueError):
    pass


# dataset
class IoFailure(SonotactError, OSError):
    pass


class DegenerateSplit(SonotactError, ValueError):
    pass


class BadMagic(SonotactError, ValueError):
    pass


class ChecksumMismatch(SonotactError, ValueError):
    pass


class TruncatedBlob(SonotactError, ValueError):
    pass


class InvalidTensor(SonotactError, ValueError):
    pass


# model
class InvalidArch(SonotactError, ValueError):
    pass


class ShapeMismatch(SonotactError, ValueError):
    pass


class EmptyDataset(SonotactError, ValueError):
    pass


class NonFiniteFeatures(SonotactError, ValueError):
    pass


# metrics
class EmptyEvaluation(SonotactError, ValueError):
    pass


class EmptyMask(SonotactError, ValueError):
    pass


# cli
class ConfigError(SonotactError, ValueError):
    exit_code = 2


class MissingArtifact(SonotactError, FileNotFoundError):
    exit_code = 3
