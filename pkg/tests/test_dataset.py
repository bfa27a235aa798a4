import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilstm_seizure.dataset import (
    HEADER_SIZE,
    STANDARD_TEST_CLIPS,
    STANDARD_TRAIN_CLIPS,
    ClipFormatError,
    EegClip,
    Label,
    Manifest,
    ManifestEntry,
    ManifestError,
    read_clip,
    read_manifest,
    segment_clip,
    split_dataset,
    write_clip,
    write_manifest,
)
from conftest import make_clip


class TestClipFormat:
    def test_header_is_24_bytes(self):
        assert HEADER_SIZE == 24

    def test_standard_shaped_file_size(self, tmp_path):
        clip = make_clip(np.zeros((16, 240000)))
        write_clip(clip, tmp_path / "c.eegc")
        # 24-byte header + 16 * 240000 * 4 bytes
        assert (tmp_path / "c.eegc").stat().st_size == 15_360_024

    def test_minimal_clip_bytes(self, tmp_path):
        write_clip(make_clip([[0.0]]), tmp_path / "c.eegc")
        data = (tmp_path / "c.eegc").read_bytes()
        assert data == b"EEGC" + struct.pack("<HHQf", 1, 1, 1, 400.0) + b"\0" * 4 + b"\0" * 4

    def test_layout_is_channel_major_little_endian(self, tmp_path):
        clip = make_clip([[1.0, 2.0], [3.0, 4.0]], rate=256.0)
        write_clip(clip, tmp_path / "c.eegc")
        data = (tmp_path / "c.eegc").read_bytes()
        assert data[:4] == b"EEGC"
        assert struct.unpack_from("<HHQf", data, 4) == (1, 2, 2, 256.0)
        assert data[20:24] == b"\0\0\0\0"
        assert struct.unpack_from("<4f", data, 24) == (1.0, 2.0, 3.0, 4.0)

    def test_round_trip_seeded_random(self, tmp_path, rng):
        clip = make_clip(rng.normal(size=(4, 100)), clip_id="x")
        write_clip(clip, tmp_path / "x.eegc")
        back = read_clip(tmp_path / "x.eegc", subject_id="s")
        assert back == clip
        assert back.samples.tobytes() == clip.samples.tobytes()

    def test_bad_magic(self, tmp_path):
        (tmp_path / "c.eegc").write_bytes(b"XXXX" + bytes(24))
        with pytest.raises(ClipFormatError, match="magic"):
            read_clip(tmp_path / "c.eegc")

    def test_truncated_payload(self, tmp_path):
        write_clip(make_clip(np.ones((2, 10))), tmp_path / "c.eegc")
        data = (tmp_path / "c.eegc").read_bytes()
        (tmp_path / "c.eegc").write_bytes(data[:-4])
        with pytest.raises(ClipFormatError, match="truncated"):
            read_clip(tmp_path / "c.eegc")

    def test_unsupported_version(self, tmp_path):
        write_clip(make_clip(np.ones((1, 4))), tmp_path / "c.eegc")
        data = bytearray((tmp_path / "c.eegc").read_bytes())
        data[4:6] = struct.pack("<H", 2)
        (tmp_path / "c.eegc").write_bytes(bytes(data))
        with pytest.raises(ClipFormatError, match="version"):
            read_clip(tmp_path / "c.eegc")

    def test_zero_channels_rejected(self, tmp_path):
        (tmp_path / "c.eegc").write_bytes(b"EEGC" + struct.pack("<HHQf", 1, 0, 5, 400.0) + bytes(4))
        with pytest.raises(ClipFormatError, match="zero"):
            read_clip(tmp_path / "c.eegc")

    @settings(max_examples=30, deadline=None)
    @given(
        st.integers(1, 5),
        st.integers(1, 40),
        st.floats(1.0, 5000.0, width=32),
        st.integers(0, 2**32 - 1),
    )
    def test_round_trip_property(self, tmp_path_factory, channels, n, rate, seed):
        path = tmp_path_factory.mktemp("rt") / "c.eegc"
        data = np.random.default_rng(seed).normal(scale=50, size=(channels, n))
        clip = EegClip("", "c", Label.UNKNOWN, rate, data)
        write_clip(clip, path)
        assert read_clip(path) == clip


class TestClipInvariants:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            make_clip(np.zeros((0, 10)))
        with pytest.raises(ValueError):
            make_clip(np.zeros((3, 0)))

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            make_clip(np.zeros((1, 10)), rate=0.0)

    def test_ragged_channels_rejected(self):
        with pytest.raises(ValueError):
            make_clip([[1.0, 2.0], [3.0]])

    def test_samples_read_only(self):
        clip = make_clip(np.zeros((1, 3)))
        with pytest.raises(ValueError):
            clip.samples[0, 0] = 1.0


class TestSegmentation:
    def test_standard_clip_gives_20_windows(self):
        clip = make_clip(np.zeros((16, 240000), dtype=np.float32))
        segs = segment_clip(clip, 30)
        assert len(segs) == 20
        assert all(s.samples.shape == (16, 12000) for s in segs)
        assert [s.window_index for s in segs] == list(range(20))

    def test_single_window_is_identity(self, rng):
        clip = make_clip(rng.normal(size=(3, 400)))
        (seg,) = segment_clip(clip, 1.0)
        assert np.array_equal(seg.samples, clip.samples)

    def test_trailing_samples_dropped(self):
        clip = make_clip(np.zeros((16, 241000), dtype=np.float32))
        segs = segment_clip(clip, 30)
        # floor(241000 / 12000) = 20, 1000 samples left over
        assert len(segs) == 20
        assert 241000 - 20 * 12000 == 1000

    def test_window_longer_than_clip(self):
        with pytest.raises(ValueError):
            segment_clip(make_clip(np.zeros((1, 100))), 1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(10, 500), st.integers(1, 10))
    def test_partition_reproduces_prefix(self, channels, n, win):
        data = np.arange(channels * n, dtype=np.float32).reshape(channels, n)
        clip = make_clip(data, rate=1.0)
        if win > n:
            return
        segs = segment_clip(clip, win)
        joined = np.concatenate([s.samples for s in segs], axis=1)
        assert np.array_equal(joined, data[:, : (n // win) * win])


class TestManifest:
    def test_round_trip_and_comments(self, tmp_path):
        m = Manifest(
            (ManifestEntry(Path("a/x.eegc"), Label.PREICTAL), ManifestEntry(Path("b.eegc"), Label.INTERICTAL)),
            tmp_path,
            {"subject": "dog1"},
        )
        write_manifest(m, tmp_path / "m.tsv")
        text = (tmp_path / "m.tsv").read_text()
        assert "a/x.eegc\tpreictal" in text
        back = read_manifest(tmp_path / "m.tsv")
        assert back.entries == m.entries
        assert back.metadata == {"subject": "dog1"}

    def test_rejects_unknown_label(self, tmp_path):
        (tmp_path / "m.tsv").write_text("x.eegc\tunknown\n")
        with pytest.raises(ManifestError):
            read_manifest(tmp_path / "m.tsv")

    def test_rejects_malformed_line(self, tmp_path):
        (tmp_path / "m.tsv").write_text("# header comment\nx.eegc preictal\n")
        with pytest.raises(ManifestError, match=":2"):
            read_manifest(tmp_path / "m.tsv")

    def test_load_clip_takes_label_from_manifest(self, tmp_path):
        (tmp_path / "dog").mkdir()
        write_clip(make_clip(np.ones((2, 8))), tmp_path / "dog" / "c1.eegc")
        (tmp_path / "m.tsv").write_text("dog/c1.eegc\tpreictal\n")
        clip = read_manifest(tmp_path / "m.tsv").load_clip(0)
        assert clip.label is Label.PREICTAL
        assert clip.subject_id == "dog"
        assert clip.clip_id == "c1"


class TestSplit:
    def test_standard_split_sizes(self):
        split = split_dataset(3459, STANDARD_TRAIN_CLIPS / 3459, seed=1)
        assert (len(split.train), len(split.test)) == (STANDARD_TRAIN_CLIPS, STANDARD_TEST_CLIPS)

    def test_two_clips_half(self):
        split = split_dataset(2, 0.5, seed=0)
        assert len(split.train) == 1 and len(split.test) == 1
        assert set(split.train) | set(split.test) == {0, 1}

    def test_deterministic(self):
        assert split_dataset(100, 0.7, 5) == split_dataset(100, 0.7, 5)

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_fraction_bounds(self, fraction):
        with pytest.raises(ValueError):
            split_dataset(10, fraction, 0)

    def test_empty(self):
        with pytest.raises(ValueError):
            split_dataset(0, 0.5, 0)

    @given(st.integers(1, 500), st.floats(0.01, 0.99), st.integers(0, 2**64 - 1))
    def test_partition(self, n, fraction, seed):
        split = split_dataset(n, fraction, seed)
        assert not set(split.train) & set(split.test)
        assert sorted(split.train + split.test) == list(range(n))
        assert len(split.train) == int(np.floor(fraction * n + 0.5))
