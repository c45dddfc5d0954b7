"""Binary exchange formats: WAV audio, raw video, and tensor files.

All custom containers are little-endian with IEEE-754 binary32 payloads:

  RVID     magic "RVID", u32 width, height, frame_count, fps_num,
           fps_den, then frame_count frames of width*height*3 RGB bytes,
           row-major from the top-left.
  TTE1     magic "TTE1", u32 L, H_layers, d, then L*H_layers*d float32
           values in (segment, layer, channel) order.
  TTC1     magic "TTC1", u32 L, tokens_per_frame, token_dim, then values
           in (frame, token, channel) order.
  TTCKPT1  magic "TTCKPT1", u32 record_count, then per record:
           u32 name_len, UTF-8 name, u32 ndim, u32 dims..., float32
           values in C order. Used for named parameter checkpoints.

WAV support is limited to RIFF/WAVE PCM 16-bit, mono or stereo. Decoding
normalizes by 32768 (stereo is averaged to mono before normalization).

read_video also accepts a directory of binary PPM (P6) frames listed by
a manifest.txt whose first line is "fps <num> <den>" followed by one
frame filename per line.
"""

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ShapeError, ValidationError
from .numerics import require_finite

PCM_SCALE = 32768.0


@dataclass
class AudioSignal:
    """Mono audio samples in [-1, 1] at an integer sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = require_finite(self.samples, "audio samples")
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ValidationError("audio must be a nonempty 1-d array")
        if self.sample_rate <= 0:
            raise ValidationError("sample rate must be positive")
        if np.abs(self.samples).max() > 1.0:
            raise ValidationError("audio samples must lie in [-1, 1]")

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


@dataclass
class Video:
    """RGB frame stack (frame_count, height, width, 3) uint8 at a
    rational frame rate fps_num/fps_den."""

    frames: np.ndarray
    fps_num: int
    fps_den: int = 1

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.uint8)
        if self.frames.ndim != 4 or self.frames.shape[3] != 3:
            raise ShapeError("frames must have shape (L, H, W, 3)")
        if self.frames.shape[0] < 1:
            raise ValidationError("video needs at least one frame")
        if self.fps_num <= 0 or self.fps_den <= 0:
            raise ValidationError("fps must be positive")

    @property
    def frame_count(self):
        return self.frames.shape[0]

    @property
    def fps(self):
        return self.fps_num / self.fps_den

    @property
    def duration(self):
        return self.frame_count / self.fps


@dataclass
class AVPair:
    """A decoded video together with its mono audio track."""

    video: Video
    audio: AudioSignal


@dataclass
class AudioEmbeddings:
    """Encoder activations per temporal segment: (L, H_layers, d)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = require_finite(self.values, "embeddings")
        if self.values.ndim != 3 or self.values.shape[0] < 1:
            raise ShapeError("embeddings must have shape (L, H_layers, d)")

    @property
    def segments(self):
        return self.values.shape[0]

    @property
    def layers(self):
        return self.values.shape[1]

    @property
    def dim(self):
        return self.values.shape[2]


@dataclass
class ConditionFile:
    """Per-frame conditioning tokens as stored in a TTC1 file."""

    values: np.ndarray  # (L, tokens_per_frame, token_dim)

    def __post_init__(self):
        self.values = require_finite(self.values, "condition values")
        if self.values.ndim != 3:
            raise ShapeError("condition values must be (L, tokens, dim)")

    @property
    def frame_count(self):
        return self.values.shape[0]

    @property
    def tokens_per_frame(self):
        return self.values.shape[1]

    @property
    def token_dim(self):
        return self.values.shape[2]


def _read_exact(fh, n, what):
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file while reading {what}")
    return data


# ---------------------------------------------------------------------------
# WAV
# ---------------------------------------------------------------------------

def read_wav(path):
    """Decode a PCM-16 RIFF/WAVE file to a normalized mono AudioSignal."""
    with open(path, "rb") as fh:
        header = _read_exact(fh, 12, "RIFF header")
        if header[0:4] != b"RIFF" or header[8:12] != b"WAVE":
            raise FormatError("not a RIFF/WAVE file")
        fmt = None
        data = None
        while True:
            chunk_header = fh.read(8)
            if len(chunk_header) == 0:
                break
            if len(chunk_header) != 8:
                raise FormatError("truncated chunk header")
            chunk_id, size = struct.unpack("<4sI", chunk_header)
            if chunk_id == b"fmt ":
                payload = _read_exact(fh, size, "fmt chunk")
                if size < 16:
                    raise FormatError("fmt chunk too short")
                fmt = struct.unpack("<HHIIHH", payload[:16])
            elif chunk_id == b"data":
                data = _read_exact(fh, size, "data chunk")
            else:
                fh.seek(size, os.SEEK_CUR)
            if size % 2 == 1:  # chunks are word-aligned
                fh.seek(1, os.SEEK_CUR)

    if fmt is None or data is None:
        raise FormatError("missing fmt or data chunk")
    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format != 1:
        raise FormatError(f"unsupported codec {audio_format} (PCM only)")
    if bits != 16:
        raise FormatError(f"unsupported bit depth {bits} (16-bit only)")
    if channels not in (1, 2):
        raise FormatError(f"unsupported channel count {channels}")
    frame_bytes = 2 * channels
    if len(data) == 0 or len(data) % frame_bytes != 0:
        raise FormatError("data chunk length inconsistent with frame size")

    raw = np.frombuffer(data, dtype="<i2").astype(np.float64)
    if channels == 2:
        raw = raw.reshape(-1, 2).mean(axis=1)
    return AudioSignal(raw / PCM_SCALE, int(sample_rate))


def write_wav(signal, path):
    """Encode an AudioSignal as mono PCM-16 RIFF/WAVE."""
    clipped = np.clip(signal.samples, -1.0, 1.0)
    pcm = np.clip(np.rint(clipped * PCM_SCALE), -32768, 32767).astype("<i2")
    data = pcm.tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, signal.sample_rate,
                      signal.sample_rate * 2, 2, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(data)) + data
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


# ---------------------------------------------------------------------------
# RVID and PPM directories
# ---------------------------------------------------------------------------

def write_video(video, path):
    header = b"RVID" + struct.pack(
        "<5I",
        video.frames.shape[2],
        video.frames.shape[1],
        video.frame_count,
        video.fps_num,
        video.fps_den,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(video.frames).tobytes())


def read_video(path):
    """Read an RVID file, or a PPM frame directory with a manifest."""
    if os.path.isdir(path):
        return _read_video_ppm_dir(path)
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != b"RVID":
            raise FormatError(f"bad magic {magic!r}, expected b'RVID'")
        width, height, frame_count, fps_num, fps_den = struct.unpack(
            "<5I", _read_exact(fh, 20, "RVID header"))
        if min(width, height, frame_count, fps_num, fps_den) < 1:
            raise FormatError("RVID header fields must be positive")
        payload = fh.read()
    expected = frame_count * height * width * 3
    if len(payload) != expected:
        raise FormatError(
            f"RVID payload is {len(payload)} bytes, expected {expected}")
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(
        frame_count, height, width, 3)
    return Video(frames.copy(), fps_num, fps_den)


def _read_ppm(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    parts = blob.split(maxsplit=4)
    if len(parts) != 5 or parts[0] != b"P6":
        raise FormatError(f"{path}: not a binary P6 PPM")
    try:
        width, height, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    except ValueError as exc:
        raise FormatError(f"{path}: bad PPM header") from exc
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 supported")
    pixels = parts[4]
    if len(pixels) != width * height * 3:
        raise FormatError(f"{path}: PPM payload length mismatch")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3)


def _read_video_ppm_dir(dirpath):
    manifest = os.path.join(dirpath, "manifest.txt")
    if not os.path.exists(manifest):
        raise FormatError(f"{dirpath}: missing manifest.txt")
    with open(manifest, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("fps "):
        raise FormatError("manifest must start with 'fps <num> <den>'")
    try:
        _, num, den = lines[0].split()
        fps_num, fps_den = int(num), int(den)
    except ValueError as exc:
        raise FormatError("bad fps line in manifest") from exc
    names = lines[1:]
    if not names:
        raise FormatError("manifest lists no frames")
    frames = [_read_ppm(os.path.join(dirpath, name)) for name in names]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise FormatError("PPM frames have inconsistent dimensions")
    return Video(np.stack(frames), fps_num, fps_den)


def write_video_ppm(video, dirpath):
    os.makedirs(dirpath, exist_ok=True)
    names = []
    height, width = video.frames.shape[1:3]
    for i in range(video.frame_count):
        name = f"frame_{i:06d}.ppm"
        names.append(name)
        with open(os.path.join(dirpath, name), "wb") as fh:
            fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
            fh.write(video.frames[i].tobytes())
    with open(os.path.join(dirpath, "manifest.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(f"fps {video.fps_num} {video.fps_den}\n")
        fh.write("\n".join(names) + "\n")


# ---------------------------------------------------------------------------
# TTE1 embeddings
# ---------------------------------------------------------------------------

def write_embeddings(emb, path):
    values = np.asarray(emb.values, dtype="<f4")
    if not np.all(np.isfinite(values)):
        raise ValidationError("embeddings contain non-finite values")
    length, layers, dim = values.shape
    with open(path, "wb") as fh:
        fh.write(b"TTE1" + struct.pack("<3I", length, layers, dim))
        fh.write(np.ascontiguousarray(values).tobytes())


def read_embeddings(path):
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != b"TTE1":
            raise FormatError(f"bad magic {magic!r}, expected b'TTE1'")
        length, layers, dim = struct.unpack("<3I",
                                            _read_exact(fh, 12, "TTE1 header"))
        payload = fh.read()
    expected = 4 * length * layers * dim
    if len(payload) != expected:
        raise FormatError(
            f"TTE1 payload is {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise ValidationError("TTE1 payload contains non-finite values")
    return AudioEmbeddings(values.reshape(length, layers, dim))


# ---------------------------------------------------------------------------
# TTC1 conditioning tokens
# ---------------------------------------------------------------------------

def write_condition(cond, path):
    """Write per-frame conditioning tokens (anything with .values, or a
    raw nested sequence) as a TTC1 file."""
    values = getattr(cond, "values", cond)
    try:
        values = np.asarray(values, dtype="<f4")
    except ValueError as exc:
        raise ValidationError(
            "inconsistent per-frame token counts") from exc
    if values.ndim != 3:
        raise ValidationError(
            f"condition values must be 3-d, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValidationError("condition values contain non-finite entries")
    length, tokens, dim = values.shape
    with open(path, "wb") as fh:
        fh.write(b"TTC1" + struct.pack("<3I", length, tokens, dim))
        fh.write(np.ascontiguousarray(values).tobytes())


def read_condition(path):
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != b"TTC1":
            raise FormatError(f"bad magic {magic!r}, expected b'TTC1'")
        length, tokens, dim = struct.unpack("<3I",
                                            _read_exact(fh, 12, "TTC1 header"))
        payload = fh.read()
    expected = 4 * length * tokens * dim
    if len(payload) != expected:
        raise FormatError(
            f"TTC1 payload is {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return ConditionFile(values.reshape(length, tokens, dim))


# ---------------------------------------------------------------------------
# TTCKPT1 named tensor records
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"TTCKPT1"


def write_named_tensors(records, path):
    """Write an ordered mapping of name -> array as a TTCKPT1 file."""
    items = list(records.items())
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC + struct.pack("<I", len(items)))
        for name, array in items:
            array = np.asarray(array, dtype="<f4")
            if not np.all(np.isfinite(array)):
                raise ValidationError(f"record {name!r} has non-finite values")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)) + encoded)
            fh.write(struct.pack("<I", array.ndim))
            fh.write(struct.pack(f"<{array.ndim}I", *array.shape))
            fh.write(np.ascontiguousarray(array).tobytes())


def read_named_tensors(path):
    with open(path, "rb") as fh:
        magic = _read_exact(fh, len(CHECKPOINT_MAGIC), "magic")
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(
                f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "record count"))
        records = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4, "name size"))
            name = _read_exact(fh, name_len, "record name").decode("utf-8")
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4, "rank"))
            shape = struct.unpack(f"<{ndim}I",
                                  _read_exact(fh, 4 * ndim, "dims"))
            n_values = int(np.prod(shape, dtype=np.int64)) if ndim else 1
            payload = _read_exact(fh, 4 * n_values, f"record {name}")
            values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
            records[name] = values.reshape(shape)
        trailing = fh.read()
    if trailing:
        raise FormatError("trailing bytes after final record")
    return records
