"""Two stacked bidirectional LSTM layers, a dense layer and a softmax.

The readout feeding the dense layer is the terminal state of each direction
of the top layer: the forward state after step T and the backward state
after it has consumed step 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lstm import LstmParams, DirectionCache, direction_backward, direction_forward

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int = 144
    hidden_size: int = 32
    num_bilstm_layers: int = 2
    num_classes: int = 2
    seq_len: int = 20

    def __post_init__(self) -> None:
        for name in ("input_dim", "hidden_size", "num_bilstm_layers", "num_classes", "seq_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.input_dim, self.hidden_size, self.num_bilstm_layers, self.num_classes, self.seq_len)


@dataclass
class Model:
    """Parameters of the whole network.

    ``layers[k]`` is the (forward, backward) pair of layer k. The same class
    doubles as the container for gradients.
    """

    config: ModelConfig
    layers: list[tuple[LstmParams, LstmParams]]
    dense_W: np.ndarray   # (num_classes, 2H)
    dense_b: np.ndarray   # (num_classes,)

    @classmethod
    def zeros(cls, config: ModelConfig) -> "Model":
        H = config.hidden_size
        layers = []
        for k in range(config.num_bilstm_layers):
            d = config.input_dim if k == 0 else 2 * H
            layers.append((LstmParams.zeros(d, H), LstmParams.zeros(d, H)))
        return cls(config, layers, np.zeros((config.num_classes, 2 * H)), np.zeros(config.num_classes))

    def tensors(self) -> list[np.ndarray]:
        """All parameter arrays in checkpoint order."""
        out = []
        for fwd, bwd in self.layers:
            out.extend(fwd.tensors())
            out.extend(bwd.tensors())
        out.append(self.dense_W)
        out.append(self.dense_b)
        return out

    def with_tensors(self, tensors) -> "Model":
        """A model of the same config whose arrays are ``tensors`` (checkpoint order)."""
        tensors = list(tensors)
        layers = []
        k = 0
        for _ in self.layers:
            fwd = LstmParams.from_tensors(tensors[k:k + 12])
            bwd = LstmParams.from_tensors(tensors[k + 12:k + 24])
            layers.append((fwd, bwd))
            k += 24
        return Model(self.config, layers, tensors[k], tensors[k + 1])

    def copy(self) -> "Model":
        return self.with_tensors([t.copy() for t in self.tensors()])

    def n_params(self) -> int:
        return sum(t.size for t in self.tensors())


def xavier_init(shape, fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Glorot uniform: U(-a, a) with ``a = sqrt(6 / (fan_in + fan_out))``."""
    if fan_in <= 0 or fan_out <= 0:
        raise ValueError("fans must be positive")
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_model(config: ModelConfig, seed: int) -> Model:
    """Xavier-uniform weights (input, recurrent and dense), zero biases.

    Draws come from numpy's PCG64 stream seeded with ``seed``, in checkpoint
    tensor order.
    """
    rng = np.random.default_rng(seed)
    m = Model.zeros(config)
    H = config.hidden_size
    for fwd, bwd in m.layers:
        for p in (fwd, bwd):
            D = p.input_dim
            for name in ("W_f", "W_i", "W_o", "W_c"):
                setattr(p, name, xavier_init((H, D), D, H, rng))
            for name in ("U_f", "U_i", "U_o", "U_c"):
                setattr(p, name, xavier_init((H, H), H, H, rng))
    m.dense_W = xavier_init((config.num_classes, 2 * H), 2 * H, config.num_classes, rng)
    return m


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, label: int) -> float:
    """``-log(max(probs[label], 1e-12))``."""
    p = np.asarray(probs, dtype=np.float64)
    return float(-np.log(max(p[label], PROB_FLOOR)))


@dataclass
class ForwardCache:
    x: np.ndarray
    layer_caches: list[tuple[DirectionCache, DirectionCache]]
    readout: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


def _as_batch(model: Model, seqs) -> np.ndarray:
    if isinstance(seqs, np.ndarray):
        x = seqs
    else:
        x = np.stack([getattr(s, "values", s) for s in seqs])
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    cfg = model.config
    if x.ndim != 3 or x.shape[1:] != (cfg.seq_len, cfg.input_dim):
        raise ValueError(
            f"expected sequences of shape ({cfg.seq_len}, {cfg.input_dim}), got batch {x.shape}"
        )
    return x


def forward(model: Model, seqs) -> ForwardCache:
    """Batched forward pass keeping everything backward() needs."""
    x = _as_batch(model, seqs)
    H = model.config.hidden_size
    inp = x
    caches = []
    for fwd, bwd in model.layers:
        hf, cf = direction_forward(fwd, inp, reverse=False)
        hb, cb = direction_forward(bwd, inp, reverse=True)
        caches.append((cf, cb))
        inp = np.concatenate([hf, hb], axis=-1)
    readout = np.concatenate([inp[:, -1, :H], inp[:, 0, H:]], axis=-1)
    logits = np.einsum("bk,ck->bc", readout, model.dense_W) + model.dense_b
    return ForwardCache(x, caches, readout, logits, softmax(logits))


def model_forward(model: Model, seq) -> np.ndarray:
    """Class probabilities for one sequence (T, D)."""
    return forward(model, np.asarray(getattr(seq, "values", seq))[None]).probs[0]


def predict(model: Model, seqs) -> np.ndarray:
    """Probability of the preictal class (index 1) for each sequence."""
    return forward(model, seqs).probs[:, 1]


def batch_loss(cache: ForwardCache, labels, class_weights=None) -> float:
    y = np.asarray(labels, dtype=int)
    p = np.maximum(cache.probs[np.arange(len(y)), y], PROB_FLOOR)
    w = np.ones(len(y)) if class_weights is None else np.asarray(class_weights)[y]
    return float(np.mean(w * -np.log(p)))


def backward(model: Model, cache: ForwardCache | None, labels, class_weights=None) -> Model:
    """Gradient of the batch-mean (optionally class-weighted) cross-entropy.

    Returns a ``Model`` whose arrays hold the gradients.
    """
    if cache is None:
        raise ValueError("backward() needs the cache from a forward pass")
    y = np.atleast_1d(np.asarray(labels, dtype=int))
    B = cache.probs.shape[0]
    if y.shape != (B,):
        raise ValueError("one label per sequence is required")
    H = model.config.hidden_size
    w = np.ones(B) if class_weights is None else np.asarray(class_weights, dtype=np.float64)[y]
    onehot = np.zeros_like(cache.probs)
    onehot[np.arange(B), y] = 1.0
    dlogits = cache.probs - onehot
    # the probability floor flattens the loss, so its gradient vanishes there
    clamped = cache.probs[np.arange(B), y] < PROB_FLOOR
    dlogits[clamped] = 0.0
    dlogits *= (w / B)[:, None]

    dW_dense = dlogits.T @ cache.readout
    db_dense = dlogits.sum(axis=0)
    dreadout = dlogits @ model.dense_W

    T = cache.x.shape[1]
    dtop = np.zeros((B, T, 2 * H))
    dtop[:, -1, :H] = dreadout[:, :H]
    dtop[:, 0, H:] = dreadout[:, H:]

    grads_layers = []
    dout = dtop
    for (fwd, bwd), (cf, cb) in zip(reversed(model.layers), reversed(cache.layer_caches)):
        gf, dxf = direction_backward(fwd, cf, dout[..., :H])
        gb, dxb = direction_backward(bwd, cb, dout[..., H:])
        grads_layers.append((gf, gb))
        dout = dxf + dxb
    grads_layers.reverse()
    return Model(model.config, grads_layers, dW_dense, db_dense)


def loss_and_grad(model: Model, seqs, labels, class_weights=None) -> tuple[float, Model, np.ndarray]:
    cache = forward(model, seqs)
    return batch_loss(cache, labels, class_weights), backward(model, cache, labels, class_weights), cache.probs
