"""Per-window spectral and amplitude features.

Each window of each channel yields nine numbers: the power spectral
intensity (sum of unnormalised DFT magnitudes) in eight frequency bins, and
the population standard deviation. Bins are half-open, ``lo <= f < hi``,
where DFT index ``i`` sits at frequency ``i * fs / N``. No taper is applied.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import EegClip, Label, Segment, segment_clip, STANDARD_WINDOW_S


@dataclass(frozen=True)
class FrequencyBin:
    lo_hz: float
    hi_hz: float

    def __post_init__(self) -> None:
        if not (self.lo_hz >= 0 and self.hi_hz > self.lo_hz):
            raise ValueError(f"invalid frequency bin [{self.lo_hz}, {self.hi_hz})")


DEFAULT_BINS: tuple[FrequencyBin, ...] = tuple(
    FrequencyBin(lo, hi)
    for lo, hi in [(0.1, 4), (4, 8), (8, 12), (12, 30), (30, 50), (50, 70), (70, 100), (100, 180)]
)


@dataclass(frozen=True)
class Spectrum:
    magnitudes: np.ndarray  # length N//2 + 1
    n: int
    sampling_rate_hz: float | None = None

    @property
    def bin_width_hz(self) -> float:
        if self.sampling_rate_hz is None:
            raise ValueError("spectrum has no sampling rate")
        return self.sampling_rate_hz / self.n


@dataclass(frozen=True)
class FeatureSequence:
    """Feature vectors of one clip, ``values`` shaped (windows, features)."""

    clip_id: str
    label: Label
    values: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class NormalizationStats:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, seqs: Sequence[FeatureSequence]) -> list[FeatureSequence]:
        return [
            FeatureSequence(s.clip_id, s.label, (s.values - self.mean) / self.scale) for s in seqs
        ]


def parse_bins(text: str) -> tuple[FrequencyBin, ...]:
    """Parse ``"0.1-4,4-8,..."`` into bins."""
    bins = []
    for part in text.split(","):
        lo, _, hi = part.strip().partition("-")
        bins.append(FrequencyBin(float(lo), float(hi)))
    return tuple(bins)


def format_bins(bins: Iterable[FrequencyBin]) -> str:
    return ",".join(f"{b.lo_hz:g}-{b.hi_hz:g}" for b in bins)


def magnitude_spectrum(signal, sampling_rate_hz: float | None = None) -> Spectrum:
    """One-sided magnitudes ``|sum_n s_n exp(-2 pi i k n / N)|``, k = 0..N//2."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("magnitude_spectrum needs a 1-D signal of length >= 2")
    return Spectrum(np.abs(np.fft.rfft(x)), x.size, sampling_rate_hz)


def bin_mask(bin: FrequencyBin, sampling_rate_hz: float, n: int) -> np.ndarray:
    """Boolean mask over one-sided DFT indices whose frequency falls in ``bin``."""
    if bin.hi_hz > sampling_rate_hz / 2:
        raise ValueError(
            f"bin [{bin.lo_hz}, {bin.hi_hz}) exceeds the Nyquist frequency {sampling_rate_hz / 2}"
        )
    freqs = np.arange(n // 2 + 1) * sampling_rate_hz / n
    return (freqs >= bin.lo_hz) & (freqs < bin.hi_hz)


def psi(spectrum: Spectrum, bin: FrequencyBin, sampling_rate_hz: float, n: int) -> float:
    """Power spectral intensity: sum of magnitudes inside the bin."""
    mask = bin_mask(bin, sampling_rate_hz, n)
    return float(np.sum(spectrum.magnitudes[mask]))


def stddev(signal) -> float:
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        raise ValueError("stddev of an empty signal")
    return float(np.std(x))


def _window_features(windows: np.ndarray, bins: Sequence[FrequencyBin], rate: float) -> np.ndarray:
    # windows: (..., channels, L) -> (..., channels * (len(bins) + 1))
    x = np.asarray(windows, dtype=np.float64)
    n = x.shape[-1]
    if n < 2:
        raise ValueError("windows must hold at least 2 samples")
    mags = np.abs(np.fft.rfft(x, axis=-1))
    cols = [np.sum(mags[..., bin_mask(b, rate, n)], axis=-1) for b in bins]
    cols.append(np.std(x, axis=-1))
    feats = np.stack(cols, axis=-1)  # (..., channels, bins + 1)
    return feats.reshape(*feats.shape[:-2], -1)


def extract_segment_features(
    segment: Segment,
    sampling_rate_hz: float,
    bins: Sequence[FrequencyBin] = DEFAULT_BINS,
) -> np.ndarray:
    """Channel-major vector ``[psi_0..psi_7, std]`` per channel."""
    return _window_features(segment.samples, bins, sampling_rate_hz)


def extract_clip_features(
    clip: EegClip,
    window_seconds: float = STANDARD_WINDOW_S,
    bins: Sequence[FrequencyBin] = DEFAULT_BINS,
) -> FeatureSequence:
    segments = segment_clip(clip, window_seconds)
    windows = np.stack([s.samples for s in segments])  # (T, C, L)
    values = _window_features(windows, bins, clip.sampling_rate_hz)
    return FeatureSequence(clip.clip_id, clip.label, values)


def normalize_features(
    train: Sequence[FeatureSequence],
    apply_to: Sequence[FeatureSequence] | None = None,
) -> tuple[list[FeatureSequence], NormalizationStats]:
    """Z-score every feature with mean/std pooled over the training windows.

    A feature that is constant on the training set gets scale 1, so it maps
    to zero instead of dividing by zero.
    """
    if not train:
        raise ValueError("normalize_features needs at least one training sequence")
    pooled = np.concatenate([s.values for s in train], axis=0)
    mean = pooled.mean(axis=0)
    scale = pooled.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    stats = NormalizationStats(mean, scale)
    target = train if apply_to is None else apply_to
    return stats.apply(target), stats


def feature_names(n_channels: int, n_bins: int) -> list[str]:
    names = []
    for c in range(n_channels):
        names.extend(f"ch{c}_psi{b}" for b in range(n_bins))
        names.append(f"ch{c}_std")
    return names


def write_feature_csv(
    seqs: Sequence[FeatureSequence],
    path: str | os.PathLike,
    n_bins: int = len(DEFAULT_BINS),
) -> None:
    if not seqs:
        raise ValueError("no feature sequences to write")
    width = seqs[0].values.shape[1]
    if width % (n_bins + 1):
        raise ValueError("feature width is not a multiple of bins + 1")
    header = ["clip_id", "window_index", "label"] + feature_names(width // (n_bins + 1), n_bins)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s in seqs:
            for t, row in enumerate(s.values):
                # repr round-trips float64 exactly
                w.writerow([s.clip_id, t, s.label.value] + [repr(float(v)) for v in row])


def read_feature_csv(path: str | os.PathLike) -> list[FeatureSequence]:
    """Reassemble sequences from a feature CSV, keeping first-seen clip order."""
    rows: dict[str, list[tuple[int, list[float]]]] = {}
    labels: dict[str, Label] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or header[:3] != ["clip_id", "window_index", "label"]:
            raise ValueError(f"{path}: not a feature CSV")
        for rec in r:
            clip_id = rec[0]
            rows.setdefault(clip_id, []).append((int(rec[1]), [float(v) for v in rec[3:]]))
            labels[clip_id] = Label.parse(rec[2])
    seqs = []
    for clip_id, items in rows.items():
        items.sort(key=lambda it: it[0])
        seqs.append(FeatureSequence(clip_id, labels[clip_id], np.array([v for _, v in items])))
    return seqs
