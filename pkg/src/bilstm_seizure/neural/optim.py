"""Adam and the mini-batch training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..evaluation import UndefinedAUCError, roc_auc
from ..rng import derive_seed, permutation
from .model import Model, loss_and_grad, predict

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 290
    epochs: int = 50
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    class_weighting: bool = False

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update. Inputs are left untouched."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and optimizer state disagree in length")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient; Adam step rejected")
    t = state.t + 1
    b1, b2 = cfg.beta1, cfg.beta2
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        new_p.append(p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(new_m, new_v, t)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_loss: float
    train_auc: float


@dataclass
class TrainResult:
    model: Model
    history: list[EpochRecord] = field(default_factory=list)


def class_weights_for(labels: np.ndarray, num_classes: int = 2) -> np.ndarray:
    """Inverse-frequency weights ``N / (K * n_k)``; absent classes get 0."""
    counts = np.bincount(labels, minlength=num_classes).astype(np.float64)
    w = np.zeros(num_classes)
    present = counts > 0
    w[present] = len(labels) / (num_classes * counts[present])
    return w


def _auc_or_nan(scores: np.ndarray, labels: np.ndarray) -> float:
    try:
        return roc_auc(scores, labels)
    except UndefinedAUCError:
        return float("nan")


def train(model: Model, train_set, cfg: TrainConfig, labels=None) -> TrainResult:
    """Mini-batch Adam on batch-averaged cross-entropy.

    ``train_set`` is a list of FeatureSequence (labels taken from them) or an
    array (N, T, D) with ``labels`` given. Each epoch reshuffles with a seed
    derived from ``cfg.seed`` and the epoch number. The recorded loss is the
    mean per-example loss seen during the epoch; the recorded AUC is computed
    on the whole training set with the parameters at the end of the epoch.
    """
    if isinstance(train_set, np.ndarray):
        X = np.asarray(train_set, dtype=np.float64)
        if labels is None:
            raise ValueError("labels are required when train_set is an array")
        y = np.asarray(labels, dtype=int)
    else:
        if not train_set:
            raise ValueError("empty training set")
        shapes = {s.values.shape for s in train_set}
        if len(shapes) != 1:
            raise ValueError(f"inconsistent sequence shapes in training set: {sorted(shapes)}")
        X = np.stack([s.values for s in train_set]).astype(np.float64)
        y = np.array([s.label.target for s in train_set]) if labels is None else np.asarray(labels, dtype=int)
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    if y.shape != (n,):
        raise ValueError("one label per training sequence is required")

    weights = class_weights_for(y, model.config.num_classes) if cfg.class_weighting else None
    params = [t.copy() for t in model.tensors()]
    state = AdamState.zeros_like(params)
    result = TrainResult(model.with_tensors(params))

    for epoch in range(1, cfg.epochs + 1):
        order = np.array(permutation(n, derive_seed(cfg.seed, epoch)), dtype=np.int64)
        total = 0.0
        for k, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            current = model.with_tensors(params)
            loss, grads, _ = loss_and_grad(current, X[idx], y[idx], weights)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss in epoch {epoch}, batch {k} (examples {idx.tolist()})")
            params, state = adam_step(params, grads.tensors(), state, cfg)
            total += loss * len(idx)
        trained = model.with_tensors(params)
        rec = EpochRecord(epoch, total / n, _auc_or_nan(predict(trained, X), y))
        log.info("epoch %d  loss %.6f  train auc %.4f", rec.epoch, rec.mean_loss, rec.train_auc)
        result.history.append(rec)
        result.model = trained
    return result
