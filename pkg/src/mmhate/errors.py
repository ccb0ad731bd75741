"""Exception hierarchy shared across the toolkit."""


class MmhateError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(MmhateError, ValueError):
    """Bad input data or arguments (CLI exit code 1)."""


class AudioFormatError(ValidationError):
    """Malformed RIFF/WAVE container."""


class UnsupportedCodecError(AudioFormatError):
    """Well-formed WAV with an encoding we do not decode (e.g. mu-law, 24-bit)."""


class TooShortError(ValidationError):
    """Signal shorter than one analysis window/frame."""


class DimensionError(ValidationError):
    """Vector or matrix dimension does not match the expected size."""


class EmbeddingFormatError(ValidationError):
    """Bad magic, version, or header in a binary embedding file."""


class CorruptionError(EmbeddingFormatError):
    """Truncated or inconsistent embedding file payload."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


class ManifestError(ValidationError):
    """Schema or row-level problem in a dataset manifest."""


class ConfigError(ValidationError):
    """Invalid configuration key or value."""


class NumericError(MmhateError):
    """NaN/Inf detected during training or inference (CLI exit code 3)."""
