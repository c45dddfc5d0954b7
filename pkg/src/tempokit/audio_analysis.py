"""Spectral audio analysis: STFT, onset detection, toy features.

Onsets are found on a positive spectral-flux curve with the shared
median/MAD picker. The STFT hop defaults to one column per video frame
(sample_rate / fps, rounded) so that flux peak columns convert to frame
indices with a plain rounding rule.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .media_io import AudioEmbeddings
from .peaks import PeakPickParams, PeakSet, pick_peaks

LOG_FLOOR = 1e-6


@dataclass
class Spectrogram:
    magnitudes: np.ndarray  # (T_frames, bins), nonnegative
    hop: int
    win: int
    sample_rate: int


@dataclass
class OnsetParams:
    """Tunables for onset detection.

    hop=None means "derive from the video rate": round(sample_rate/fps),
    giving one STFT column per video frame.
    """

    win: int = 1024
    hop: int | None = None
    threshold_k: float = 1.5
    smoothing: int = 5

    def __post_init__(self):
        if self.win < 1:
            raise ValidationError("win must be >= 1")
        if self.hop is not None and not (1 <= self.hop <= self.win):
            raise ValidationError("need win >= hop >= 1")
        if self.threshold_k <= 0:
            raise ValidationError("threshold_k must be positive")


def stft_magnitude(signal, win=1024, hop=512):
    """Hann-windowed magnitude spectrogram with win/2+1 bins per column."""
    samples = signal.samples
    if samples.size < win:
        raise ValidationError(
            f"signal has {samples.size} samples, shorter than win={win}")
    n_cols = (samples.size - win) // hop + 1
    window = np.hanning(win)
    starts = hop * np.arange(n_cols)
    frames = samples[starts[:, None] + np.arange(win)[None, :]]
    magnitudes = np.abs(np.fft.rfft(frames * window, axis=1))
    return Spectrogram(magnitudes, hop, win, signal.sample_rate)


def spectral_flux(spec):
    """Positive spectral flux per column; the first entry is 0."""
    mag = spec.magnitudes
    flux = np.zeros(mag.shape[0])
    if mag.shape[0] >= 2:
        rise = np.clip(mag[1:] - mag[:-1], 0.0, None)
        flux[1:] = rise.sum(axis=1)
    return flux


def detect_onsets(signal, fps, params=None, n_frames=None):
    """Detect audio onsets and report them as video-frame indices.

    Flux peak columns t map to frames round(t * hop * fps / sample_rate);
    results are sorted, deduplicated, and clamped to [0, n_frames-1] when
    a frame count is supplied.
    """
    if fps <= 0:
        raise ValidationError("fps must be positive")
    if params is None:
        params = OnsetParams()
    hop = params.hop if params.hop is not None else round(signal.sample_rate / fps)
    hop = max(1, int(hop))
    spec = stft_magnitude(signal, params.win, hop)
    flux = spectral_flux(spec)
    cols = pick_peaks(flux, PeakPickParams(params.threshold_k, params.smoothing))
    frames = [round(t * hop * fps / signal.sample_rate) for t in cols]
    if n_frames is not None:
        frames = [min(max(f, 0), n_frames - 1) for f in frames]
    else:
        frames = [max(f, 0) for f in frames]
    return PeakSet(frames)


def _triangle_filterbank(bands, bins):
    """Triangular filters with linearly spaced centers covering all bins."""
    centers = np.linspace(0, bins - 1, bands + 2)
    bank = np.zeros((bands, bins))
    grid = np.arange(bins, dtype=np.float64)
    for b in range(bands):
        left, mid, right = centers[b], centers[b + 1], centers[b + 2]
        up = (grid - left) / max(mid - left, 1e-9)
        down = (right - grid) / max(right - mid, 1e-9)
        bank[b] = np.clip(np.minimum(up, down), 0.0, None)
    return bank


def toy_audio_features(signal, length, layers, dim, win=1024, hop=None):
    """Deterministic stand-in for a pretrained audio encoder.

    Log filterbank energies per STFT column are average-pooled into
    exactly `length` time segments and replicated across `layers` with a
    fixed per-layer affine decoration, so the output has the same
    (L, H_layers, d) layout the real encoder files use. Output is scale
    monotone: louder input never produces smaller features.
    """
    if length < 1 or layers < 1 or dim < 1:
        raise ValidationError("length, layers and dim must be >= 1")
    if hop is None:
        hop = max(1, signal.samples.size // max(length * 2, 4))
        hop = min(hop, win)
    spec = stft_magnitude(signal, win, hop)
    bank = _triangle_filterbank(dim, spec.magnitudes.shape[1])
    energies = spec.magnitudes @ bank.T  # (T, dim)
    feats = (np.log10(energies + LOG_FLOOR) + 6.0) / 3.0

    n_cols = feats.shape[0]
    bounds = np.floor(np.linspace(0, n_cols, length + 1)).astype(int)
    pooled = np.empty((length, dim))
    for seg in range(length):
        lo, hi = bounds[seg], bounds[seg + 1]
        if hi <= lo:  # more segments than columns: reuse nearest column
            lo = min(lo, n_cols - 1)
            hi = lo + 1
        pooled[seg] = feats[lo:hi].mean(axis=0)

    # Per-layer decoration: positive scale plus a small offset, fixed by
    # the layer index so the extractor stays deterministic and monotone.
    scales = 1.0 + 0.05 * np.arange(layers)
    offsets = 0.01 * np.arange(layers)
    values = pooled[:, None, :] * scales[None, :, None]
    values = values + offsets[None, :, None]
    return AudioEmbeddings(values)
