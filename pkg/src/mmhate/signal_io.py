"""Audio decoding, resampling, and spectral-gate denoising.

Decodes RIFF/WAVE (PCM16 or float32, mono/stereo) into a canonical mono
signal with samples in [-1, 1], and removes stationary noise with a
magnitude-threshold spectral gate (Hann analysis windows, 50% overlap,
attenuation of bins that fall below a per-bin noise profile).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import AudioFormatError, TooShortError, UnsupportedCodecError, ValidationError

DEFAULT_FFT_SIZE = 2048
DEFAULT_REDUCTION_DB = 12.0
DEFAULT_SENSITIVITY = 1.5
DEFAULT_NOISE_SECONDS = 0.5

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3


@dataclass(frozen=True)
class AudioSignal:
    """Mono audio: finite samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int
    id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValidationError("audio samples must be finite")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class NoiseProfile:
    """Per-bin magnitude thresholds for one FFT size (length fft_size//2 + 1)."""

    thresholds: np.ndarray
    fft_size: int

    def __post_init__(self):
        thresholds = np.asarray(self.thresholds, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "thresholds", thresholds)
        if self.fft_size <= 0:
            raise ValidationError("fft_size must be positive")
        expected = self.fft_size // 2 + 1
        if thresholds.size != expected:
            raise ValidationError(
                f"noise profile has {thresholds.size} bins, expected {expected} for fft_size {self.fft_size}"
            )
        if np.any(thresholds < 0):
            raise ValidationError("noise thresholds must be non-negative")


def decode_wav(blob: bytes, clip_id: str = "") -> AudioSignal:
    """Decode a RIFF/WAVE blob (PCM16 or float32, 1-2 channels) to mono.

    Integer samples are scaled by 1/32768; stereo is averaged to mono.
    Float payloads whose peak exceeds 1 are peak-normalized so the
    [-1, 1] invariant holds.
    """
    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise AudioFormatError("not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        chunk_id = blob[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", blob, pos + 4)
        body_start = pos + 8
        if body_start + chunk_size > len(blob):
            raise AudioFormatError(f"chunk {chunk_id!r} overruns file end")
        body = blob[body_start : body_start + chunk_size]
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise AudioFormatError("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            data = body
        pos = body_start + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise AudioFormatError("missing fmt chunk")
    if data is None:
        raise AudioFormatError("missing data chunk")

    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedCodecError(f"unsupported channel count {channels}")
    if sample_rate <= 0:
        raise AudioFormatError("sample rate must be positive")

    if audio_format == _WAVE_FORMAT_PCM and bits == 16:
        width = 2
        usable = len(data) - len(data) % (width * channels)
        raw = np.frombuffer(data[:usable], dtype="<i2").astype(np.float64)
        samples = raw / 32768.0
    elif audio_format == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        width = 4
        usable = len(data) - len(data) % (width * channels)
        samples = np.frombuffer(data[:usable], dtype="<f4").astype(np.float64)
        if samples.size and not np.all(np.isfinite(samples)):
            raise AudioFormatError("float WAV contains non-finite samples")
    else:
        raise UnsupportedCodecError(f"unsupported encoding (format={audio_format}, bits={bits})")

    if channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)

    peak = np.max(np.abs(samples)) if samples.size else 0.0
    if peak > 1.0:
        samples = samples / peak

    return AudioSignal(samples=samples, sample_rate=int(sample_rate), id=clip_id)


def encode_wav(signal: AudioSignal, encoding: str = "float32") -> bytes:
    """Encode a signal as a RIFF/WAVE blob ("float32" or "pcm16")."""
    if encoding == "float32":
        payload = signal.samples.astype("<f4").tobytes()
        audio_format, bits = _WAVE_FORMAT_IEEE_FLOAT, 32
    elif encoding == "pcm16":
        ints = np.clip(np.rint(signal.samples * 32768.0), -32768, 32767).astype("<i2")
        payload = ints.tobytes()
        audio_format, bits = _WAVE_FORMAT_PCM, 16
    else:
        raise ValidationError(f"unknown encoding {encoding!r}")

    byte_rate = signal.sample_rate * bits // 8
    fmt = struct.pack("<HHIIHH", audio_format, 1, signal.sample_rate, byte_rate, bits // 8, bits)
    chunks = b"".join(
        [
            b"fmt ",
            struct.pack("<I", len(fmt)),
            fmt,
            b"data",
            struct.pack("<I", len(payload)),
            payload,
        ]
    )
    if len(payload) & 1:
        chunks += b"\x00"
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


def read_wav(path, clip_id: str = "") -> AudioSignal:
    with open(path, "rb") as fh:
        return decode_wav(fh.read(), clip_id=clip_id)


def write_wav(path, signal: AudioSignal, encoding: str = "float32") -> None:
    with open(path, "wb") as fh:
        fh.write(encode_wav(signal, encoding=encoding))


def resample(signal: AudioSignal, target_rate: int) -> AudioSignal:
    """Linear-interpolation resampling preserving duration within one period."""
    if target_rate <= 0:
        raise ValidationError("target_rate must be positive")
    if target_rate == signal.sample_rate:
        return AudioSignal(signal.samples, signal.sample_rate, signal.id)
    n_in = signal.samples.size
    n_out = max(1, int(round(n_in * target_rate / signal.sample_rate)))
    t_out = np.arange(n_out, dtype=np.float64) / target_rate
    t_in = np.arange(n_in, dtype=np.float64) / signal.sample_rate
    out = np.interp(t_out, t_in, signal.samples)
    return AudioSignal(out, target_rate, signal.id)


def _hann_periodic(n: int) -> np.ndarray:
    # periodic Hann: w[j] + w[j + n/2] == 1, so 50%-overlap add reconstructs exactly
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _stft_frames(x: np.ndarray, fft_size: int, hop: int) -> np.ndarray:
    n_frames = (x.size - fft_size) // hop + 1
    idx = np.arange(fft_size)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx]


def estimate_noise_profile(
    noise_clip: AudioSignal, fft_size: int = DEFAULT_FFT_SIZE, sensitivity: float = DEFAULT_SENSITIVITY
) -> NoiseProfile:
    """Mean STFT magnitude per bin over the clip, scaled by `sensitivity`."""
    x = noise_clip.samples
    if x.size < fft_size:
        raise TooShortError(f"noise clip has {x.size} samples, needs at least {fft_size}")
    window = _hann_periodic(fft_size)
    frames = _stft_frames(x, fft_size, fft_size // 2)
    mags = np.abs(np.fft.rfft(frames * window, axis=1))
    thresholds = mags.mean(axis=0) * sensitivity
    return NoiseProfile(thresholds=thresholds, fft_size=fft_size)


def spectral_gate(
    signal: AudioSignal, noise: NoiseProfile, reduction_db: float = DEFAULT_REDUCTION_DB
) -> AudioSignal:
    """Attenuate STFT bins whose magnitude falls below the noise profile.

    Hann analysis windows at 50% overlap; gated bins are scaled by
    10^(-reduction_db/20); inverse STFT by plain overlap-add (the periodic
    Hann at half-window hop sums to one, so ungated content passes through
    unchanged). Output length equals input length.
    """
    if reduction_db < 0:
        raise ValidationError("reduction_db must be non-negative")
    x = signal.samples
    n = x.size
    fft_size = noise.fft_size
    hop = fft_size // 2
    if n < fft_size:
        raise TooShortError(f"signal has {n} samples, needs at least {fft_size}")

    # pad half a window on the left so edge samples get unit window-sum too
    n_frames = int(np.ceil(n / hop)) + 1
    padded_len = (n_frames - 1) * hop + fft_size
    padded = np.zeros(padded_len)
    padded[hop : hop + n] = x

    window = _hann_periodic(fft_size)
    frames = _stft_frames(padded, fft_size, hop)
    spec = np.fft.rfft(frames * window, axis=1)

    attenuation = 10.0 ** (-reduction_db / 20.0)
    gate = np.where(np.abs(spec) < noise.thresholds[None, :], attenuation, 1.0)
    recon = np.fft.irfft(spec * gate, n=fft_size, axis=1)

    out = np.zeros(padded_len)
    for k in range(n_frames):
        out[k * hop : k * hop + fft_size] += recon[k]
    result = np.clip(out[hop : hop + n], -1.0, 1.0)
    return AudioSignal(result, signal.sample_rate, signal.id)


def default_noise_profile(
    signal: AudioSignal,
    fft_size: int = DEFAULT_FFT_SIZE,
    sensitivity: float = DEFAULT_SENSITIVITY,
    noise_seconds: float = DEFAULT_NOISE_SECONDS,
) -> NoiseProfile:
    """Profile from the first `noise_seconds` of the recording itself.

    In-the-wild clips rarely ship a separate noise reference, so the lead-in
    stands in for one. Falls back to the whole clip when it is shorter than
    the requested lead-in window.
    """
    lead = min(signal.samples.size, max(fft_size, int(round(noise_seconds * signal.sample_rate))))
    clip = AudioSignal(signal.samples[:lead], signal.sample_rate, signal.id)
    return estimate_noise_profile(clip, fft_size=fft_size, sensitivity=sensitivity)


def denoise(
    signal: AudioSignal,
    noise_clip: AudioSignal | None = None,
    fft_size: int = DEFAULT_FFT_SIZE,
    reduction_db: float = DEFAULT_REDUCTION_DB,
    sensitivity: float = DEFAULT_SENSITIVITY,
) -> AudioSignal:
    """Convenience wrapper: estimate a profile and gate in one call."""
    if noise_clip is not None:
        profile = estimate_noise_profile(noise_clip, fft_size=fft_size, sensitivity=sensitivity)
    else:
        profile = default_noise_profile(signal, fft_size=fft_size, sensitivity=sensitivity)
    return spectral_gate(signal, profile, reduction_db=reduction_db)
