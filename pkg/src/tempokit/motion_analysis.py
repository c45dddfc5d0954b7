"""Dense motion analysis: grayscale, optical flow, per-frame motion.

The flow solver is the classic variational one (quadratic brightness
constancy plus quadratic smoothness) iterated with the standard 8-point
neighbor average. Gradients are central differences and the temporal
term is a forward difference; boundaries are handled by reflection.

The data term is evaluated on 8-bit-scale intensities (grids in [0,1]
are multiplied by 255) so the default smoothness weight alpha=10 sits in
its classic operating range. The recovered displacements are in pixels
per frame either way.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve

from .errors import ShapeError, ValidationError
from .peaks import PeakPickParams, pick_peaks

_LUMA = np.array([0.299, 0.587, 0.114])
_AVG_KERNEL = np.array([
    [1 / 12, 1 / 6, 1 / 12],
    [1 / 6, 0.0, 1 / 6],
    [1 / 12, 1 / 6, 1 / 12],
])


@dataclass
class FlowField:
    u: np.ndarray  # horizontal displacement, pixels/frame
    v: np.ndarray  # vertical displacement

    @property
    def magnitude(self):
        return np.sqrt(self.u ** 2 + self.v ** 2)


@dataclass
class FlowParams:
    alpha: float = 10.0     # smoothness weight (8-bit intensity scale)
    iterations: int = 100

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValidationError("alpha must be positive")
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")


def to_grayscale(frame):
    """Rec.601 luma of an RGB 8-bit frame, scaled into [0, 1]."""
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ShapeError("frame must be (H, W, 3)")
    return (frame.astype(np.float64) @ _LUMA) / 255.0


def _central_gradients(image):
    padded = np.pad(image, 1, mode="reflect")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy


def optical_flow(frame1, frame2, params=None):
    """Dense flow from frame1 to frame2 (gray grids in [0, 1])."""
    if params is None:
        params = FlowParams()
    f1 = np.asarray(frame1, dtype=np.float64)
    f2 = np.asarray(frame2, dtype=np.float64)
    if f1.shape != f2.shape:
        raise ShapeError(f"frame shapes differ: {f1.shape} vs {f2.shape}")
    if f1.ndim != 2 or min(f1.shape) < 3:
        raise ShapeError("frames must be 2-d grids of at least 3x3")

    i1 = f1 * 255.0
    i2 = f2 * 255.0
    mean = (i1 + i2) / 2.0
    ix, iy = _central_gradients(mean)
    it = i2 - i1
    denom = params.alpha ** 2 + ix ** 2 + iy ** 2

    u = np.zeros_like(i1)
    v = np.zeros_like(i1)
    for _ in range(params.iterations):
        u_avg = convolve(u, _AVG_KERNEL, mode="reflect")
        v_avg = convolve(v, _AVG_KERNEL, mode="reflect")
        shared = (ix * u_avg + iy * v_avg + it) / denom
        u = u_avg - ix * shared
        v = v_avg - iy * shared
    return FlowField(u, v)


def motion_curve(video, params=None):
    """Mean flow magnitude per frame; index 0 has no predecessor and is 0."""
    if video.frame_count < 2:
        raise ValidationError("motion curve needs at least 2 frames")
    grays = [to_grayscale(f) for f in video.frames]
    curve = np.zeros(video.frame_count)
    for i in range(1, video.frame_count):
        flow = optical_flow(grays[i - 1], grays[i], params)
        curve[i] = flow.magnitude.mean()
    return curve


def detect_motion_peaks(curve, params=None, on_derivative=False):
    """Peak-pick a motion curve with the shared median/MAD picker.

    on_derivative picks peaks of the positive first difference instead
    of the curve itself.
    """
    if params is None:
        params = PeakPickParams()
    curve = np.asarray(curve, dtype=np.float64)
    if on_derivative:
        curve = np.concatenate([[0.0], np.clip(np.diff(curve), 0.0, None)])
    return pick_peaks(curve, params)
