"""Audio-video temporal alignment score.

Audio onsets A and video motion peaks V (both as frame indices) are
matched within a frame tolerance; the score is

    (matched_audio + matched_video) / (2 * |A union V|)

with the union taken over exact indices. Identical peak sets score 1;
peaks that match only within tolerance still enlarge the union, so the
measure behaves like an intersection-over-union. When both sets are
empty the score is defined as 1.0 and the report is flagged vacuous.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DurationError, ValidationError
from .media_io import AudioSignal, Video
from .peaks import PeakSet
from . import audio_analysis, motion_analysis

# Durations may disagree by up to one frame silently; larger mismatches
# are truncated to the shorter stream with a warning, and beyond this
# fraction of the longer duration alignment is refused.
TRUNCATION_LIMIT = 0.5


@dataclass
class AlignReport:
    score: float
    matched_audio: int
    matched_video: int
    tolerance: int
    audio_peaks: int
    video_peaks: int
    union_size: int
    vacuous: bool = False

    def to_dict(self):
        return {
            "score": self.score,
            "matched_audio": self.matched_audio,
            "matched_video": self.matched_video,
            "tolerance": self.tolerance,
            "audio_peaks": self.audio_peaks,
            "video_peaks": self.video_peaks,
            "union_size": self.union_size,
            "vacuous": self.vacuous,
        }

    def to_text(self):
        """Line-oriented key=value rendering."""
        return "\n".join(f"{k}={v}" for k, v in self.to_dict().items())

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _count_matched(sources, targets, tolerance):
    """How many source peaks have a target within +/-tolerance frames."""
    if not len(sources) or not len(targets):
        return 0
    targets = np.asarray(list(targets))
    matched = 0
    for peak in sources:
        pos = np.searchsorted(targets, peak)
        best = min(
            abs(peak - targets[max(pos - 1, 0)]),
            abs(peak - targets[min(pos, targets.size - 1)]),
        )
        if best <= tolerance:
            matched += 1
    return matched


def av_align_score(audio_peaks, video_peaks, tolerance=1):
    """Score two peak sets. tolerance is in frames (>= 0)."""
    if tolerance < 0:
        raise ValidationError("tolerance must be >= 0")
    a = audio_peaks if isinstance(audio_peaks, PeakSet) else PeakSet(audio_peaks)
    v = video_peaks if isinstance(video_peaks, PeakSet) else PeakSet(video_peaks)
    union = len(set(a.indices) | set(v.indices))
    if union == 0:
        return AlignReport(1.0, 0, 0, int(tolerance), 0, 0, 0, vacuous=True)
    matched_a = _count_matched(a, v, tolerance)
    matched_v = _count_matched(v, a, tolerance)
    score = (matched_a + matched_v) / (2.0 * union)
    return AlignReport(score, matched_a, matched_v, int(tolerance),
                       len(a), len(v), union)


def av_align_from_media(video, audio, onset_params=None, flow_params=None,
                        peak_params=None, tolerance=1, fps_override=None):
    """Full pipeline: media in, alignment report out.

    Durations that disagree by more than one frame are truncated to the
    shorter stream (with a warning); a mismatch beyond half the longer
    duration raises DurationError.
    """
    fps = fps_override if fps_override is not None else video.fps
    if fps <= 0:
        raise ValidationError("fps must be positive")
    video, audio = _reconcile_durations(video, audio, fps)

    onsets = audio_analysis.detect_onsets(
        audio, fps, onset_params, n_frames=video.frame_count)
    curve = motion_analysis.motion_curve(video, flow_params)
    motion = motion_analysis.detect_motion_peaks(curve, peak_params)
    return av_align_score(onsets, motion, tolerance)


def _reconcile_durations(video, audio, fps):
    video_dur = video.frame_count / fps
    audio_dur = audio.duration
    mismatch = abs(video_dur - audio_dur)
    if mismatch <= 1.0 / fps:
        return video, audio
    longer = max(video_dur, audio_dur)
    if mismatch > TRUNCATION_LIMIT * longer:
        raise DurationError(
            f"durations differ by {mismatch:.3f}s "
            f"(video {video_dur:.3f}s, audio {audio_dur:.3f}s), "
            f"beyond the truncation policy")
    warnings.warn(
        f"durations differ by {mismatch:.3f}s; truncating to the shorter "
        f"stream", stacklevel=2)
    shorter = min(video_dur, audio_dur)
    n_frames = max(2, int(np.floor(shorter * fps + 1e-9)))
    n_samples = max(1, int(round(shorter * audio.sample_rate)))
    video = Video(video.frames[:n_frames], video.fps_num, video.fps_den)
    audio = AudioSignal(audio.samples[:n_samples], audio.sample_rate)
    return video, audio
