"""Short-term, mid-term, and fixed-size acoustic feature representations.

Short-term frames yield 34 base features plus their frame-to-frame deltas
(68 columns total); mid-term windows take the mean and population standard
deviation of each short-term column (136); the fixed-size vectors are
either the column mean over all mid-term windows (F1, 136 dims) or the
first ten mid-term rows concatenated with zero padding (F2, 1360 dims).

Column layout (frozen; deltas repeat the base order with a ``delta_``
prefix):

    0  zcr                  zero-crossing rate of the frame
    1  energy               mean squared amplitude
    2  energy_entropy       entropy of energy over 10 sub-blocks (bits)
    3  spectral_centroid    magnitude-spectrum centroid / (sr/2)
    4  spectral_spread      magnitude-spectrum spread / (sr/2)
    5  spectral_entropy     entropy of spectral energy over 10 blocks (bits)
    6  spectral_flux        squared difference of normalized spectra
    7  spectral_rolloff     bin fraction below which 90% of energy lies
    8..20  mfcc_1..mfcc_13  DCT-II (ortho) of log mel-filterbank magnitudes
    21..32 chroma_1..chroma_12  energy share per pitch class (A = class 0)
    33 chroma_std           population std of the 12 chroma values

All spectral columns use the magnitude rFFT of the Hamming-windowed frame
(FFT length = frame length). The mel filterbank has 40 unit-peak
triangular filters from 0 Hz to sr/2 on the HTK mel scale; log uses
``log(E + 1e-8)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from .errors import DimensionError, TooShortError, ValidationError
from .signal_io import AudioSignal

SHORT_TERM_FEATURE_COUNT = 68
MID_TERM_FEATURE_COUNT = 136
F1_LENGTH = 136
F2_LENGTH = 1360
F2_WINDOW_COUNT = 10

MFCC_COUNT = 13
MEL_FILTER_COUNT = 40
CHROMA_CLASSES = 12
_ENTROPY_BLOCKS = 10
_ROLLOFF_FRACTION = 0.90
_EPS = 1e-8

BASE_FEATURE_NAMES: tuple[str, ...] = (
    "zcr",
    "energy",
    "energy_entropy",
    "spectral_centroid",
    "spectral_spread",
    "spectral_entropy",
    "spectral_flux",
    "spectral_rolloff",
    *[f"mfcc_{i}" for i in range(1, MFCC_COUNT + 1)],
    *[f"chroma_{i}" for i in range(1, CHROMA_CLASSES + 1)],
    "chroma_std",
)
FEATURE_NAMES: tuple[str, ...] = BASE_FEATURE_NAMES + tuple(f"delta_{n}" for n in BASE_FEATURE_NAMES)


class FeatureKind(str, Enum):
    F1 = "f1"
    F2 = "f2"

    @property
    def length(self) -> int:
        return F1_LENGTH if self is FeatureKind.F1 else F2_LENGTH


@dataclass(frozen=True)
class FrameSpec:
    window_ms: float = 50.0
    step_ms: float = 50.0

    def __post_init__(self):
        if self.window_ms <= 0 or self.step_ms <= 0:
            raise ValidationError("window_ms and step_ms must be positive")


@dataclass(frozen=True)
class ShortTermFeatureMatrix:
    values: np.ndarray  # (frames, 68)
    feature_names: tuple[str, ...]
    frame_spec: FrameSpec

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[1] != SHORT_TERM_FEATURE_COUNT:
            raise DimensionError(f"short-term matrix must have {SHORT_TERM_FEATURE_COUNT} columns")
        if not np.all(np.isfinite(values)):
            raise ValidationError("short-term features must be finite")


@dataclass(frozen=True)
class MidTermFeatureMatrix:
    values: np.ndarray  # (windows, 136)
    mid_window_ms: float
    mid_step_ms: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[1] != MID_TERM_FEATURE_COUNT:
            raise DimensionError(f"mid-term matrix must have {MID_TERM_FEATURE_COUNT} columns")
        if not np.all(np.isfinite(values)):
            raise ValidationError("mid-term features must be finite")


@dataclass(frozen=True)
class FeatureRepresentation:
    kind: FeatureKind
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", values)
        if values.size != self.kind.length:
            raise DimensionError(f"{self.kind.value} vector must have length {self.kind.length}, got {values.size}")


@lru_cache(maxsize=8)
def _mel_filterbank(sample_rate: int, n_fft: int) -> np.ndarray:
    """Unit-peak triangular filters, HTK mel scale, 0 Hz to Nyquist."""
    n_bins = n_fft // 2 + 1
    mel = lambda f: 2595.0 * np.log10(1.0 + f / 700.0)
    inv_mel = lambda m: 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    edges = inv_mel(np.linspace(mel(0.0), mel(sample_rate / 2.0), MEL_FILTER_COUNT + 2))
    bin_freqs = np.arange(n_bins) * sample_rate / n_fft
    bank = np.zeros((MEL_FILTER_COUNT, n_bins))
    for i in range(MEL_FILTER_COUNT):
        lo, center, hi = edges[i], edges[i + 1], edges[i + 2]
        rising = (bin_freqs - lo) / max(center - lo, _EPS)
        falling = (hi - bin_freqs) / max(hi - center, _EPS)
        bank[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


@lru_cache(maxsize=8)
def _chroma_classes(sample_rate: int, n_fft: int) -> np.ndarray:
    """Pitch class per rFFT bin (A = 0); DC gets -1 and is skipped."""
    n_bins = n_fft // 2 + 1
    freqs = np.arange(n_bins) * sample_rate / n_fft
    classes = np.full(n_bins, -1, dtype=np.int64)
    nonzero = freqs > 0
    classes[nonzero] = np.mod(np.round(12.0 * np.log2(freqs[nonzero] / 440.0)).astype(np.int64), 12)
    return classes


def _block_entropy(energies: np.ndarray) -> np.ndarray:
    """Entropy in bits of each row of non-negative block energies."""
    totals = energies.sum(axis=1, keepdims=True)
    p = energies / (totals + _EPS)
    return -(p * np.log2(p + _EPS)).sum(axis=1)


def short_term_features(signal: AudioSignal, spec: FrameSpec = FrameSpec()) -> ShortTermFeatureMatrix:
    """Frame the signal and compute the 68-column short-term matrix."""
    sr = signal.sample_rate
    win = int(round(spec.window_ms / 1000.0 * sr))
    step = int(round(spec.step_ms / 1000.0 * sr))
    x = signal.samples
    if win < 2 or step < 1:
        raise ValidationError("frame window/step too small for this sample rate")
    if x.size < win:
        raise TooShortError(f"signal has {x.size} samples, needs at least one window of {win}")

    n_frames = (x.size - win) // step + 1
    idx = np.arange(win)[None, :] + step * np.arange(n_frames)[:, None]
    frames = x[idx]

    window = np.hamming(win)
    mags = np.abs(np.fft.rfft(frames * window, axis=1))
    n_bins = mags.shape[1]
    freqs = np.arange(n_bins) * sr / win
    nyquist = sr / 2.0

    feats = np.zeros((n_frames, len(BASE_FEATURE_NAMES)))

    signs = np.sign(frames)
    feats[:, 0] = np.abs(np.diff(signs, axis=1)).sum(axis=1) / (2.0 * (win - 1))
    feats[:, 1] = (frames**2).mean(axis=1)

    sub_len = win // _ENTROPY_BLOCKS
    sub = frames[:, : sub_len * _ENTROPY_BLOCKS].reshape(n_frames, _ENTROPY_BLOCKS, sub_len)
    feats[:, 2] = _block_entropy((sub**2).sum(axis=2))

    mag_sums = mags.sum(axis=1)
    centroid_hz = (mags * freqs).sum(axis=1) / (mag_sums + _EPS)
    feats[:, 3] = centroid_hz / nyquist
    spread_sq = (mags * (freqs[None, :] - centroid_hz[:, None]) ** 2).sum(axis=1) / (mag_sums + _EPS)
    feats[:, 4] = np.sqrt(spread_sq) / nyquist

    power = mags**2
    bins_per_block = n_bins // _ENTROPY_BLOCKS
    blocks = power[:, : bins_per_block * _ENTROPY_BLOCKS].reshape(n_frames, _ENTROPY_BLOCKS, bins_per_block)
    feats[:, 5] = _block_entropy(blocks.sum(axis=2))

    normed = mags / (mag_sums[:, None] + _EPS)
    feats[1:, 6] = ((normed[1:] - normed[:-1]) ** 2).sum(axis=1)

    cumulative = np.cumsum(power, axis=1)
    total = cumulative[:, -1]
    target = _ROLLOFF_FRACTION * total
    rolloff_bin = (cumulative < target[:, None]).sum(axis=1)
    feats[:, 7] = np.where(total > 0, rolloff_bin / n_bins, 0.0)

    filterbank = _mel_filterbank(sr, win)
    mel_energies = mags @ filterbank.T
    feats[:, 8 : 8 + MFCC_COUNT] = dct(np.log(mel_energies + _EPS), type=2, norm="ortho", axis=1)[:, :MFCC_COUNT]

    classes = _chroma_classes(sr, win)
    chroma = np.zeros((n_frames, CHROMA_CLASSES))
    total_power = power.sum(axis=1)
    for c in range(CHROMA_CLASSES):
        chroma[:, c] = power[:, classes == c].sum(axis=1)
    chroma /= total_power[:, None] + _EPS
    feats[:, 21 : 21 + CHROMA_CLASSES] = chroma
    feats[:, 33] = chroma.std(axis=1)

    deltas = np.zeros_like(feats)
    deltas[1:] = feats[1:] - feats[:-1]  # first frame has no predecessor
    values = np.concatenate([feats, deltas], axis=1)
    return ShortTermFeatureMatrix(values=values, feature_names=FEATURE_NAMES, frame_spec=spec)


def mid_term_features(
    st: ShortTermFeatureMatrix, mid_window_ms: float = 1000.0, mid_step_ms: float = 1000.0
) -> MidTermFeatureMatrix:
    """Mean and population std of each short-term column per mid-term window.

    A trailing partial window is kept as long as it covers at least one
    short-term frame.
    """
    if mid_window_ms <= 0 or mid_step_ms <= 0:
        raise ValidationError("mid-term window/step must be positive")
    n_frames = st.values.shape[0]
    if n_frames == 0:
        raise ValidationError("short-term matrix is empty")
    frames_per_window = max(1, int(round(mid_window_ms / st.frame_spec.step_ms)))
    frames_per_step = max(1, int(round(mid_step_ms / st.frame_spec.step_ms)))

    rows = []
    for start in range(0, n_frames, frames_per_step):
        chunk = st.values[start : start + frames_per_window]
        rows.append(np.concatenate([chunk.mean(axis=0), chunk.std(axis=0)]))
    return MidTermFeatureMatrix(values=np.asarray(rows), mid_window_ms=mid_window_ms, mid_step_ms=mid_step_ms)


def make_f1(mt: MidTermFeatureMatrix) -> FeatureRepresentation:
    """Column-wise mean over all mid-term windows (136 dims)."""
    if mt.values.shape[0] == 0:
        raise ValidationError("mid-term matrix is empty")
    return FeatureRepresentation(kind=FeatureKind.F1, values=mt.values.mean(axis=0))


def make_f2(mt: MidTermFeatureMatrix) -> FeatureRepresentation:
    """First ten mid-term rows concatenated in time order, zero-padded (1360 dims)."""
    if mt.values.shape[0] == 0:
        raise ValidationError("mid-term matrix is empty")
    out = np.zeros(F2_LENGTH)
    rows = mt.values[:F2_WINDOW_COUNT]
    out[: rows.size] = rows.reshape(-1)
    return FeatureRepresentation(kind=FeatureKind.F2, values=out)


def extract_representation(
    signal: AudioSignal,
    kind: FeatureKind,
    spec: FrameSpec = FrameSpec(),
    mid_window_ms: float = 1000.0,
    mid_step_ms: float = 1000.0,
) -> FeatureRepresentation:
    """Full chain: short-term frames, mid-term statistics, fixed-size vector."""
    st = short_term_features(signal, spec)
    mt = mid_term_features(st, mid_window_ms, mid_step_ms)
    return make_f1(mt) if kind is FeatureKind.F1 else make_f2(mt)


@dataclass(frozen=True)
class FeatureScaler:
    """Per-dimension min/max for mapping features into [-1, 1]."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        minimum = np.asarray(self.minimum, dtype=np.float64).reshape(-1)
        maximum = np.asarray(self.maximum, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "minimum", minimum)
        object.__setattr__(self, "maximum", maximum)
        if minimum.size != maximum.size:
            raise DimensionError("scaler min/max lengths differ")
        if np.any(minimum > maximum):
            raise ValidationError("scaler requires min <= max in every dimension")

    @property
    def degenerate(self) -> np.ndarray:
        return self.maximum == self.minimum

    def transform(self, values: np.ndarray) -> np.ndarray:
        """Scale rows (or one vector) to [-1, 1]; degenerate dims map to 0."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != self.minimum.size:
            raise DimensionError(
                f"scaler expects dimension {self.minimum.size}, got {values.shape[-1]}"
            )
        span = self.maximum - self.minimum
        safe_span = np.where(self.degenerate, 1.0, span)
        scaled = 2.0 * (values - self.minimum) / safe_span - 1.0
        scaled = np.where(self.degenerate, 0.0, scaled)
        return np.clip(scaled, -1.0, 1.0)


def mid_term_feature_names() -> tuple:
    return tuple(f"mean_{n}" for n in FEATURE_NAMES) + tuple(f"std_{n}" for n in FEATURE_NAMES)


def representation_feature_names(kind: FeatureKind) -> tuple:
    mid_names = mid_term_feature_names()
    if kind is FeatureKind.F1:
        return mid_names
    return tuple(f"w{w}_{n}" for w in range(F2_WINDOW_COUNT) for n in mid_names)


def fit_scaler(representations) -> FeatureScaler:
    """Per-dimension extremes over a homogeneous collection of representations."""
    reps = list(representations)
    if not reps:
        raise ValidationError("cannot fit a scaler on an empty collection")
    kinds = {r.kind for r in reps}
    if len(kinds) != 1:
        raise ValidationError(f"mixed representation kinds: {sorted(k.value for k in kinds)}")
    stacked = np.stack([r.values for r in reps])
    return FeatureScaler(minimum=stacked.min(axis=0), maximum=stacked.max(axis=0))


def apply_scaler(scaler: FeatureScaler, rep: FeatureRepresentation) -> FeatureRepresentation:
    return FeatureRepresentation(kind=rep.kind, values=scaler.transform(rep.values))
