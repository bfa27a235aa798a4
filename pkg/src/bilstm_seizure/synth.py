"""Synthetic EEG-like clips with a controllable preictal signature.

Interictal clips are white Gaussian noise. Preictal clips are the same kind
of noise plus, on every channel, one sinusoid whose frequency is drawn
uniformly inside the signature band, with a random phase and a fixed
amplitude. Raising the amplitude raises the PSI of the signature band, which
is exactly what the feature extractor measures.

Each clip draws from its own numpy ``SeedSequence([seed, clip_index])``
stream, so the output does not depend on generation order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import (
    EegClip,
    Label,
    Manifest,
    ManifestEntry,
    STANDARD_CHANNELS,
    STANDARD_DURATION_S,
    STANDARD_SAMPLING_RATE_HZ,
    write_clip,
    write_manifest,
)
from .features import FrequencyBin

MANIFEST_NAME = "manifest.tsv"
CLIP_SUFFIX = ".eegc"


@dataclass(frozen=True)
class SynthConfig:
    n_preictal: int = 100
    n_interictal: int = 100
    channels: int = STANDARD_CHANNELS
    duration_s: float = STANDARD_DURATION_S
    sampling_rate_hz: float = STANDARD_SAMPLING_RATE_HZ
    noise_sigma: float = 1.0
    signature_band: FrequencyBin = field(default_factory=lambda: FrequencyBin(4.0, 8.0))
    signature_amplitude: float = 5.0
    seed: int = 0
    subject: str = "synth"

    def __post_init__(self) -> None:
        if self.n_preictal < 0 or self.n_interictal < 0:
            raise ValueError("clip counts must be non-negative")
        if self.channels < 1 or not self.duration_s > 0 or not self.sampling_rate_hz > 0:
            raise ValueError("channels, duration and sampling rate must be positive")
        if not self.noise_sigma > 0:
            raise ValueError("noise_sigma must be positive")
        if self.signature_amplitude < 0:
            raise ValueError("signature_amplitude must be non-negative")
        if self.signature_band.hi_hz > self.sampling_rate_hz / 2:
            raise ValueError("signature band exceeds the Nyquist frequency")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sampling_rate_hz))


def _plan(cfg: SynthConfig) -> list[tuple[str, Label]]:
    names = [(f"preictal_{k:04d}", Label.PREICTAL) for k in range(cfg.n_preictal)]
    names += [(f"interictal_{k:04d}", Label.INTERICTAL) for k in range(cfg.n_interictal)]
    return names


def generate_clip(cfg: SynthConfig, clip_index: int, label: Label, clip_id: str = "") -> EegClip:
    rng = np.random.default_rng([cfg.seed, clip_index])
    n = cfg.n_samples
    x = rng.standard_normal((cfg.channels, n)) * cfg.noise_sigma
    if label is Label.PREICTAL:
        band = cfg.signature_band
        freqs = rng.uniform(band.lo_hz, band.hi_hz, size=cfg.channels)
        phases = rng.uniform(0.0, 2 * np.pi, size=cfg.channels)
        t = np.arange(n) / cfg.sampling_rate_hz
        x += cfg.signature_amplitude * np.sin(2 * np.pi * freqs[:, None] * t[None, :] + phases[:, None])
    return EegClip(cfg.subject, clip_id or f"clip_{clip_index:04d}", label, cfg.sampling_rate_hz, x)


def generate(cfg: SynthConfig, out_dir: str | os.PathLike) -> Manifest:
    """Write every clip plus ``manifest.tsv`` under ``out_dir``."""
    out = Path(out_dir)
    (out / cfg.subject).mkdir(parents=True, exist_ok=True)
    entries = []
    for index, (name, label) in enumerate(_plan(cfg)):
        rel = Path(cfg.subject) / f"{name}{CLIP_SUFFIX}"
        write_clip(generate_clip(cfg, index, label, name), out / rel)
        entries.append(ManifestEntry(rel, label))
    manifest = Manifest(
        tuple(entries),
        out,
        {
            "subject": cfg.subject,
            "sampling_rate_hz": f"{cfg.sampling_rate_hz:g}",
            "seed": str(cfg.seed),
            "signature_amplitude": f"{cfg.signature_amplitude:g}",
            "noise_sigma": f"{cfg.noise_sigma:g}",
        },
    )
    write_manifest(manifest, out / MANIFEST_NAME)
    return manifest
