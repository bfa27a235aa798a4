"""End-to-end glue: run configuration, feature extraction over a manifest,
fitting (split, normalise, initialise, train) and scoring."""

from __future__ import annotations

import configparser
import dataclasses
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .dataset import Manifest, SplitIndices, split_dataset
from .features import (
    DEFAULT_BINS,
    FeatureSequence,
    NormalizationStats,
    extract_clip_features,
    format_bins,
    normalize_features,
    parse_bins,
)
from .neural import Model, ModelConfig, TrainConfig, init_model, predict, train
from .neural.optim import EpochRecord

log = logging.getLogger(__name__)

CONFIG_SECTION = "run"


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a run. Serialised as ``key = value`` lines under ``[run]``."""

    seed: int = 0
    train_fraction: float = 0.7
    window_seconds: float = 30.0
    bins: str = format_bins(DEFAULT_BINS)
    normalize: bool = True
    hidden_size: int = 32
    num_bilstm_layers: int = 2
    learning_rate: float = 1e-3
    batch_size: int = 290
    epochs: int = 50
    class_weighting: bool = False
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    manifest: str = ""
    features: str = ""
    checkpoint: str = ""

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if not self.window_seconds > 0:
            raise ValueError("window_seconds must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        parse_bins(self.bins)
        self.train_config()
        ModelConfig(hidden_size=self.hidden_size, num_bilstm_layers=self.num_bilstm_layers)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            class_weighting=self.class_weighting,
        )

    @property
    def bin_set(self):
        return parse_bins(self.bins)

    def merged(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """Copy with every non-None override applied."""
        given = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(given) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return dataclasses.replace(self, **given)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "RunConfig":
        parser = configparser.ConfigParser()
        if not parser.read(path, encoding="utf-8"):
            raise FileNotFoundError(f"cannot read config file {path}")
        if not parser.has_section(CONFIG_SECTION):
            raise ValueError(f"{path}: missing [{CONFIG_SECTION}] section")
        section = parser[CONFIG_SECTION]
        values: dict[str, Any] = {}
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for key in section:
            if key not in types:
                raise ValueError(f"{path}: unknown config key {key!r}")
            kind = types[key]
            if kind == "bool":
                values[key] = section.getboolean(key)
            elif kind == "int":
                values[key] = section.getint(key)
            elif kind == "float":
                values[key] = section.getfloat(key)
            else:
                values[key] = section.get(key)
        return cls(**values)

    def write(self, path: str | os.PathLike) -> None:
        parser = configparser.ConfigParser()
        parser[CONFIG_SECTION] = {
            f.name: _ini_value(getattr(self, f.name)) for f in dataclasses.fields(self)
        }
        with open(path, "w", encoding="utf-8") as fh:
            parser.write(fh)


def _ini_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def clip_key(manifest: Manifest, i: int) -> str:
    """Identifier for manifest entry ``i``: its relative path without suffix."""
    return manifest.entries[i].path.with_suffix("").as_posix()


def extract_manifest(
    manifest: Manifest,
    window_seconds: float = 30.0,
    bins=DEFAULT_BINS,
) -> list[FeatureSequence]:
    if len(manifest) == 0:
        raise ValueError("manifest lists no clips")
    seqs = []
    for i in range(len(manifest)):
        clip = manifest.load_clip(i)
        seq = extract_clip_features(clip, window_seconds, bins)
        seqs.append(FeatureSequence(clip_key(manifest, i), manifest.entries[i].label, seq.values))
    return seqs


@dataclass
class FitResult:
    model: Model
    norm: NormalizationStats | None
    history: list[EpochRecord]
    split: SplitIndices
    initial: Model


def fit(seqs: Sequence[FeatureSequence], run: RunConfig) -> FitResult:
    """Split clips, normalise on the training part, initialise and train."""
    split = split_dataset(len(seqs), run.train_fraction, run.seed)
    train_seqs = [seqs[i] for i in split.train]
    if not train_seqs:
        raise ValueError("the split left no training clips")
    norm = None
    if run.normalize:
        train_seqs, norm = normalize_features(train_seqs)
    T, D = train_seqs[0].values.shape
    config = ModelConfig(input_dim=D, hidden_size=run.hidden_size, num_bilstm_layers=run.num_bilstm_layers, seq_len=T)
    initial = init_model(config, run.seed)
    result = train(initial, train_seqs, run.train_config())
    return FitResult(result.model, norm, result.history, split, initial)


def score(model: Model, norm: NormalizationStats | None, seqs: Sequence[FeatureSequence]) -> np.ndarray:
    if not seqs:
        raise ValueError("nothing to score")
    width = seqs[0].values.shape[1]
    if norm is not None:
        if norm.mean.shape != (width,):
            raise ValueError(
                f"checkpoint normalisation covers {norm.mean.size} features, data has {width}"
            )
        seqs = norm.apply(seqs)
    cfg = model.config
    if seqs[0].values.shape != (cfg.seq_len, cfg.input_dim):
        raise ValueError(
            f"checkpoint expects sequences of shape ({cfg.seq_len}, {cfg.input_dim}), "
            f"data has {seqs[0].values.shape}"
        )
    return predict(model, seqs)


def labels_of(seqs: Sequence[FeatureSequence]) -> np.ndarray:
    return np.array([s.label.target for s in seqs], dtype=int)


def write_epoch_log(history: Sequence[EpochRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,mean_loss,train_auc\n")
        for rec in history:
            fh.write(f"{rec.epoch},{rec.mean_loss!r},{rec.train_auc!r}\n")


def read_epoch_log(path: str | os.PathLike) -> list[EpochRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            e, loss, a = line.strip().split(",")
            out.append(EpochRecord(int(e), float(loss), float(a)))
    return out


def write_split(seqs: Sequence[FeatureSequence], split: SplitIndices, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("clip_id,subset\n")
        for i in split.train:
            fh.write(f"{seqs[i].clip_id},train\n")
        for i in split.test:
            fh.write(f"{seqs[i].clip_id},test\n")


def read_split(path: str | os.PathLike) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if line.strip():
                clip_id, subset = line.strip().rsplit(",", 1)
                out[clip_id] = subset
    return out


def select(seqs: Sequence[FeatureSequence], split: Mapping[str, str], subset: str) -> list[FeatureSequence]:
    """Sequences assigned to ``subset`` in the split file, in split-file order."""
    by_id = {s.clip_id: s for s in seqs}
    chosen = [cid for cid, sub in split.items() if sub == subset]
    missing = [cid for cid in chosen if cid not in by_id]
    if missing:
        raise ValueError(f"{len(missing)} clips from the split file are absent from the data, e.g. {missing[0]}")
    return [by_id[cid] for cid in chosen]


def resolve(path: str, base: Path | None = None) -> Path:
    p = Path(path)
    return p if p.is_absolute() or base is None else base / p
