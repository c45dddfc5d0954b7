"""Peak picking shared by the audio and video pipelines.

Both modalities reduce to a 1-d activity curve (spectral flux, mean flow
magnitude) and run the same adaptive picker: a value is a peak when it
exceeds a moving median plus k times the moving median absolute
deviation, and is the local maximum within +/-2 samples. Using one
implementation keeps the two modalities symmetric.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class PeakPickParams:
    threshold_k: float = 1.5
    smoothing: int = 5  # moving median/MAD window length

    def __post_init__(self):
        if self.threshold_k <= 0:
            raise ValueError("threshold_k must be positive")
        if self.smoothing < 1:
            raise ValueError("smoothing window must be >= 1")


class PeakSet:
    """Strictly increasing, deduplicated frame indices."""

    def __init__(self, indices=()):
        cleaned = sorted({int(i) for i in indices})
        if cleaned and cleaned[0] < 0:
            raise ValueError("peak indices must be nonnegative")
        self.indices = tuple(cleaned)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, idx):
        return int(idx) in set(self.indices)

    def __eq__(self, other):
        if isinstance(other, PeakSet):
            return self.indices == other.indices
        return self.indices == tuple(other)

    def __repr__(self):
        return f"PeakSet({list(self.indices)})"


def moving_median(values, width):
    """Centered moving median; the window is clipped at the edges."""
    values = np.asarray(values, dtype=np.float64)
    half = width // 2
    out = np.empty_like(values)
    for i in range(values.size):
        lo = max(0, i - half)
        hi = min(values.size, i + half + 1)
        out[i] = np.median(values[lo:hi])
    return out


def moving_mad(values, width):
    """Centered moving median absolute deviation (same windows)."""
    values = np.asarray(values, dtype=np.float64)
    half = width // 2
    out = np.empty_like(values)
    for i in range(values.size):
        lo = max(0, i - half)
        hi = min(values.size, i + half + 1)
        window = values[lo:hi]
        out[i] = np.median(np.abs(window - np.median(window)))
    return out


def pick_peaks(curve, params=None):
    """Return a PeakSet of indices into curve.

    A peak must beat median + k * MAD of its neighborhood and be the
    local maximum within +/-2 samples (strictly above its left side so a
    flat plateau yields exactly one peak, at its left edge).
    """
    if params is None:
        params = PeakPickParams()
    curve = np.asarray(curve, dtype=np.float64)
    if curve.size == 0:
        return PeakSet()
    threshold = moving_median(curve, params.smoothing)
    threshold += params.threshold_k * moving_mad(curve, params.smoothing)

    peaks = []
    n = curve.size
    for t in range(n):
        if not curve[t] > threshold[t]:
            continue
        left = curve[max(0, t - 2):t]
        right = curve[t + 1:min(n, t + 3)]
        if left.size and not np.all(curve[t] > left):
            continue
        if right.size and not np.all(curve[t] >= right):
            continue
        peaks.append(t)
    return PeakSet(peaks)
