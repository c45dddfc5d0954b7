import struct

import numpy as np
import pytest

from tempokit.errors import FormatError, ValidationError
from tempokit.media_io import (AudioEmbeddings, AudioSignal, ConditionFile,
                               Video, read_condition, read_embeddings,
                               read_named_tensors, read_video, read_wav,
                               write_condition, write_embeddings,
                               write_named_tensors, write_video,
                               write_video_ppm, write_wav)


def craft_wav(path, pcm, channels=1, sample_rate=16000, audio_format=1,
              bits=16):
    """Hand-rolled WAV writer used as an independent oracle for read_wav."""
    data = pcm.astype("<i2").tobytes()
    fmt = struct.pack("<HHIIHH", audio_format, channels, sample_rate,
                      sample_rate * 2 * channels, 2 * channels, bits)
    body = b"WAVE"
    body += b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(data)) + data
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


class TestWav:
    def test_one_second_of_silence(self, tmp_path):
        p = tmp_path / "s.wav"
        craft_wav(p, np.zeros(16000, dtype=np.int16))
        sig = read_wav(p)
        assert sig.sample_rate == 16000
        assert sig.samples.size == 16000
        np.testing.assert_array_equal(sig.samples, 0.0)

    def test_positive_full_scale_sample(self, tmp_path):
        p = tmp_path / "m.wav"
        craft_wav(p, np.array([32767], dtype=np.int16))
        assert read_wav(p).samples[0] == 0.999969482421875

    def test_stereo_averaged_before_normalization(self, tmp_path):
        p = tmp_path / "st.wav"
        craft_wav(p, np.array([32767, -32768], dtype=np.int16), channels=2)
        # mean(-0.5) / 32768
        assert read_wav(p).samples[0] == -1.52587890625e-05

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "bad.wav"
        p.write_bytes(b"RIFX" + b"\x00" * 40)
        with pytest.raises(FormatError):
            read_wav(p)

    def test_non_pcm_codec_rejected(self, tmp_path):
        p = tmp_path / "f.wav"
        craft_wav(p, np.zeros(4, dtype=np.int16), audio_format=3)
        with pytest.raises(FormatError):
            read_wav(p)

    def test_wrong_bit_depth_rejected(self, tmp_path):
        p = tmp_path / "b8.wav"
        craft_wav(p, np.zeros(4, dtype=np.int16), bits=8)
        with pytest.raises(FormatError):
            read_wav(p)

    def test_write_read_round_trip_within_quantization(self, tmp_path):
        rng = np.random.default_rng(0)
        sig = AudioSignal(rng.uniform(-1, 1, 2000), 8000)
        p = tmp_path / "rt.wav"
        write_wav(sig, p)
        back = read_wav(p)
        assert back.sample_rate == 8000
        np.testing.assert_allclose(back.samples, sig.samples,
                                   atol=1.0 / 32768)

    def test_output_always_in_range(self, tmp_path):
        rng = np.random.default_rng(5)
        for i in range(5):
            p = tmp_path / f"r{i}.wav"
            craft_wav(p, rng.integers(-32768, 32768, 500).astype(np.int16))
            s = read_wav(p).samples
            assert s.min() >= -1.0 and s.max() <= 1.0


class TestRvid:
    def test_single_pixel_round_trip(self, tmp_path):
        video = Video(np.array([[[[1, 2, 3]]]], dtype=np.uint8), 24, 1)
        p = tmp_path / "one.rvid"
        write_video(video, p)
        back = read_video(p)
        np.testing.assert_array_equal(back.frames, video.frames)
        assert (back.fps_num, back.fps_den) == (24, 1)

    def test_synthetic_clip_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        video = Video(rng.integers(0, 256, (24, 64, 64, 3), dtype=np.uint8),
                      30000, 1001)
        p = tmp_path / "clip.rvid"
        write_video(video, p)
        back = read_video(p)
        assert back.frames.tobytes() == video.frames.tobytes()
        assert back.fps == pytest.approx(video.fps)

    def test_truncated_payload_rejected(self, tmp_path):
        rng = np.random.default_rng(2)
        video = Video(rng.integers(0, 256, (10, 4, 4, 3), dtype=np.uint8), 24)
        p = tmp_path / "trunc.rvid"
        write_video(video, p)
        blob = p.read_bytes()
        p.write_bytes(blob[:-4 * 4 * 3])  # drop one frame
        with pytest.raises(FormatError):
            read_video(p)

    def test_trailing_garbage_rejected(self, tmp_path):
        video = Video(np.zeros((1, 2, 2, 3), dtype=np.uint8), 24)
        p = tmp_path / "g.rvid"
        write_video(video, p)
        p.write_bytes(p.read_bytes() + b"x")
        with pytest.raises(FormatError):
            read_video(p)

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "nope.rvid"
        p.write_bytes(b"VIDR" + b"\x00" * 20)
        with pytest.raises(FormatError):
            read_video(p)

    def test_ppm_directory_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        video = Video(rng.integers(0, 256, (5, 6, 7, 3), dtype=np.uint8),
                      25, 2)
        d = tmp_path / "frames"
        write_video_ppm(video, d)
        back = read_video(d)
        np.testing.assert_array_equal(back.frames, video.frames)
        assert (back.fps_num, back.fps_den) == (25, 2)


class TestEmbeddings:
    def test_minimal_file_layout(self, tmp_path):
        p = tmp_path / "e.tte"
        write_embeddings(AudioEmbeddings(np.zeros((1, 1, 1))), p)
        blob = p.read_bytes()
        assert len(blob) == 16 + 4
        assert blob[:4] == b"TTE1"
        assert struct.unpack("<3I", blob[4:16]) == (1, 1, 1)

    def test_large_random_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        values = rng.normal(size=(24, 12, 768)).astype(np.float32)
        p = tmp_path / "big.tte"
        write_embeddings(AudioEmbeddings(values), p)
        back = read_embeddings(p)
        np.testing.assert_array_equal(back.values,
                                      values.astype(np.float64))

    def test_payload_length_mismatch_rejected(self, tmp_path):
        p = tmp_path / "short.tte"
        write_embeddings(AudioEmbeddings(np.zeros((2, 3, 4))), p)
        p.write_bytes(p.read_bytes()[:-4])
        with pytest.raises(FormatError):
            read_embeddings(p)

    def test_nan_payload_rejected(self, tmp_path):
        p = tmp_path / "nan.tte"
        values = np.zeros((1, 1, 2), dtype="<f4")
        values[0, 0, 1] = np.nan
        p.write_bytes(b"TTE1" + struct.pack("<3I", 1, 1, 2) + values.tobytes())
        with pytest.raises(ValidationError):
            read_embeddings(p)

    def test_nan_rejected_on_construction(self):
        with pytest.raises(ValidationError):
            AudioEmbeddings(np.array([[[np.inf]]]))


class TestCondition:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        values = rng.normal(size=(8, 4, 16)).astype(np.float32)
        p = tmp_path / "c.ttc"
        write_condition(ConditionFile(values), p)
        back = read_condition(p)
        np.testing.assert_array_equal(back.values, values.astype(np.float64))
        assert back.tokens_per_frame == 4

    def test_ragged_token_lists_rejected(self, tmp_path):
        ragged = [[[1.0, 2.0]], [[1.0, 2.0], [3.0, 4.0]]]
        with pytest.raises(ValidationError):
            write_condition(ragged, tmp_path / "r.ttc")

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "bad.ttc"
        p.write_bytes(b"TTC2" + struct.pack("<3I", 1, 1, 1) + b"\x00" * 4)
        with pytest.raises(FormatError):
            read_condition(p)


class TestNamedTensors:
    def test_round_trip_preserves_order_and_values(self, tmp_path):
        rng = np.random.default_rng(7)
        records = {
            "alpha": rng.normal(size=(3, 4)).astype(np.float32),
            "beta.bias": rng.normal(size=7).astype(np.float32),
            "scalar": np.float32(2.5),
        }
        p = tmp_path / "ck.bin"
        write_named_tensors(records, p)
        back = read_named_tensors(p)
        assert list(back) == list(records)
        for name in records:
            np.testing.assert_array_equal(
                back[name], np.asarray(records[name], dtype=np.float64))

    def test_trailing_bytes_rejected(self, tmp_path):
        p = tmp_path / "t.bin"
        write_named_tensors({"x": np.zeros(2, dtype=np.float32)}, p)
        p.write_bytes(p.read_bytes() + b"\x00")
        with pytest.raises(FormatError):
            read_named_tensors(p)

    def test_truncation_rejected(self, tmp_path):
        p = tmp_path / "t2.bin"
        write_named_tensors({"x": np.zeros(8, dtype=np.float32)}, p)
        p.write_bytes(p.read_bytes()[:-3])
        with pytest.raises(FormatError):
            read_named_tensors(p)


class TestDomainTypes:
    def test_audio_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            AudioSignal(np.array([1.5]), 16000)

    def test_video_needs_rgb_frames(self):
        with pytest.raises(Exception):
            Video(np.zeros((2, 4, 4), dtype=np.uint8), 24)

    def test_video_duration(self):
        v = Video(np.zeros((48, 2, 2, 3), dtype=np.uint8), 24, 1)
        assert v.duration == pytest.approx(2.0)
