"""Clip data model, the binary clip format, manifests, windowing and splits.

Clip file layout (little-endian)::

    offset  size  field
    0       4     magic b"EEGC"
    4       2     format version (u16, currently 1)
    6       2     channel count (u16)
    8       8     samples per channel (u64)
    16      4     sampling rate in Hz (f32)
    20      4     reserved, zero
    24      ...   f32 samples, channel-major (all of channel 0, then channel 1, ...)

Labels are not stored in clip files. They come from the manifest, a UTF-8
text file with one ``relative/path<TAB>label`` line per clip.
"""

from __future__ import annotations

import enum
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .rng import permutation

MAGIC = b"EEGC"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHHQf4x")
HEADER_SIZE = HEADER.size  # 24

STANDARD_SAMPLING_RATE_HZ = 400.0
STANDARD_CHANNELS = 16
STANDARD_DURATION_S = 600.0
STANDARD_WINDOW_S = 30.0
STANDARD_SAMPLES = int(STANDARD_DURATION_S * STANDARD_SAMPLING_RATE_HZ)  # 240000
STANDARD_TRAIN_CLIPS = 2900
STANDARD_TEST_CLIPS = 559


class ClipFormatError(ValueError):
    """A clip file is malformed: bad magic, unknown version, truncated data."""


class ManifestError(ValueError):
    pass


class Label(enum.Enum):
    PREICTAL = "preictal"
    INTERICTAL = "interictal"
    UNKNOWN = "unknown"

    @property
    def target(self) -> int:
        """Class index used by the classifier: preictal is the positive class."""
        if self is Label.PREICTAL:
            return 1
        if self is Label.INTERICTAL:
            return 0
        raise ValueError("unknown label has no class index")

    @classmethod
    def parse(cls, text: str) -> "Label":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ManifestError(f"unrecognised label {text!r}") from None


@dataclass(frozen=True, eq=False)
class EegClip:
    """One multi-channel recording, ``samples`` shaped (channels, time).

    Samples and the sampling rate are held at float32, the on-disk precision,
    so a clip survives a write/read cycle unchanged.
    """

    subject_id: str
    clip_id: str
    label: Label
    sampling_rate_hz: float
    samples: np.ndarray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples)
        if samples.ndim != 2:
            raise ValueError("samples must be a (channels, time) matrix")
        if samples.shape[0] < 1 or samples.shape[1] < 1:
            raise ValueError("clip needs at least one channel and one sample")
        if not self.sampling_rate_hz > 0:
            raise ValueError("sampling_rate_hz must be positive")
        samples = np.ascontiguousarray(samples, dtype=np.float32)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sampling_rate_hz", float(np.float32(self.sampling_rate_hz)))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EegClip):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.clip_id == other.clip_id
            and self.label == other.label
            and self.sampling_rate_hz == other.sampling_rate_hz
            and self.samples.shape == other.samples.shape
            and self.samples.tobytes() == other.samples.tobytes()
        )


@dataclass(frozen=True)
class Segment:
    clip_id: str
    window_index: int
    samples: np.ndarray


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: Label


@dataclass(frozen=True)
class Manifest:
    """Ordered (clip path, label) entries plus free-form metadata.

    ``root`` is the directory relative paths are resolved against, normally
    the directory holding the manifest file.
    """

    entries: tuple[ManifestEntry, ...]
    root: Path = Path(".")
    metadata: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def resolve(self, i: int) -> Path:
        return self.root / self.entries[i].path

    def load_clip(self, i: int) -> EegClip:
        entry = self.entries[i]
        path = self.resolve(i)
        subject = entry.path.parent.name or self.metadata.get("subject", "")
        return read_clip(path, subject_id=subject, label=entry.label)

    def iter_clips(self) -> Iterator[EegClip]:
        for i in range(len(self.entries)):
            yield self.load_clip(i)

    def subset(self, indices: Sequence[int]) -> "Manifest":
        return Manifest(tuple(self.entries[i] for i in indices), self.root, dict(self.metadata))


@dataclass(frozen=True)
class SplitIndices:
    train: tuple[int, ...]
    test: tuple[int, ...]
    seed: int


def write_clip(clip: EegClip, path: str | os.PathLike) -> None:
    samples = clip.samples
    if samples.shape[0] > 0xFFFF:
        raise ValueError("channel count does not fit in u16")
    header = HEADER.pack(MAGIC, FORMAT_VERSION, samples.shape[0], samples.shape[1], clip.sampling_rate_hz)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(samples.astype("<f4", copy=False).tobytes(order="C"))


def read_clip(
    path: str | os.PathLike,
    subject_id: str = "",
    label: Label = Label.UNKNOWN,
    clip_id: str | None = None,
) -> EegClip:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
        if len(head) < 4 or head[:4] != MAGIC:
            raise ClipFormatError(f"{path}: bad magic")
        if len(head) < HEADER_SIZE:
            raise ClipFormatError(f"{path}: truncated header")
        _, version, n_channels, n_samples, rate = HEADER.unpack(head)
        if version != FORMAT_VERSION:
            raise ClipFormatError(f"{path}: unsupported format version {version}")
        if n_channels == 0 or n_samples == 0:
            raise ClipFormatError(f"{path}: zero channels or samples")
        expected = n_channels * n_samples * 4
        payload = fh.read(expected)
    if len(payload) < expected:
        raise ClipFormatError(f"{path}: truncated payload ({len(payload)} of {expected} bytes)")
    samples = np.frombuffer(payload, dtype="<f4").reshape(n_channels, n_samples)
    return EegClip(
        subject_id=subject_id,
        clip_id=clip_id if clip_id is not None else path.stem,
        label=label,
        sampling_rate_hz=float(rate),
        samples=samples.astype(np.float32),
    )


def window_length(window_seconds: float, sampling_rate_hz: float) -> int:
    if not window_seconds > 0:
        raise ValueError("window_seconds must be positive")
    return int(round(window_seconds * sampling_rate_hz))


def segment_clip(clip: EegClip, window_seconds: float = STANDARD_WINDOW_S) -> list[Segment]:
    """Cut a clip into contiguous, non-overlapping windows in temporal order.

    Trailing samples that do not fill a whole window are dropped.
    """
    length = window_length(window_seconds, clip.sampling_rate_hz)
    if length < 1 or length > clip.n_samples:
        raise ValueError(
            f"window of {length} samples does not fit a clip of {clip.n_samples} samples"
        )
    n = clip.n_samples // length
    return [
        Segment(clip.clip_id, k, clip.samples[:, k * length:(k + 1) * length])
        for k in range(n)
    ]


def read_manifest(path: str | os.PathLike) -> Manifest:
    """Parse a manifest file. ``# key=value`` comment lines become metadata."""
    path = Path(path)
    entries = []
    metadata: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep:
                    metadata[key.strip()] = value.strip()
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ManifestError(f"{path}:{lineno}: expected 'path<TAB>label'")
            label = Label.parse(parts[1])
            if label is Label.UNKNOWN:
                raise ManifestError(f"{path}:{lineno}: manifest labels must be preictal or interictal")
            entries.append(ManifestEntry(Path(parts[0]), label))
    return Manifest(tuple(entries), path.parent, metadata)


def write_manifest(manifest: Manifest, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in manifest.metadata.items():
            fh.write(f"# {key}={value}\n")
        for entry in manifest.entries:
            fh.write(f"{entry.path.as_posix()}\t{entry.label.value}\n")


def split_dataset(manifest: Manifest | int, train_fraction: float, seed: int) -> SplitIndices:
    """Shuffle clip indices with SplitMix64 and cut at round(fraction * N).

    The split is over clips, never over windows, so no clip contributes to
    both sides.
    """
    n = manifest if isinstance(manifest, int) else len(manifest)
    if n < 1:
        raise ValueError("cannot split an empty manifest")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n_train = math.floor(train_fraction * n + 0.5)
    order = permutation(n, seed)
    return SplitIndices(tuple(order[:n_train]), tuple(order[n_train:]), seed)
