"""Audio-conditioned video toolkit.

Pieces: a from-raw-media audio-video temporal alignment score
(tempokit.av_align), the audio-to-pseudo-token conditioning stack
(tempokit.tempo_tokens), a desk-scale frozen-backbone diffusion trainer
(tempokit.diffusion_toy), binary media formats (tempokit.media_io), and
a synthetic event-aligned corpus generator (tempokit.synthgen).
"""

__version__ = "0.1.0"

from .av_align import AlignReport, av_align_from_media, av_align_score
from .media_io import (AudioEmbeddings, AudioSignal, AVPair, ConditionFile,
                       Video)
from .peaks import PeakSet

__all__ = [
    "AlignReport",
    "AudioEmbeddings",
    "AudioSignal",
    "AVPair",
    "ConditionFile",
    "PeakSet",
    "Video",
    "av_align_from_media",
    "av_align_score",
    "__version__",
]
