"""LSTM cell and single-direction / bidirectional layer passes.

Gate equations, with sigma the logistic function::

    f_t = sigma(W_f x_t + U_f h_{t-1} + b_f)
    i_t = sigma(W_i x_t + U_i h_{t-1} + b_i)
    o_t = sigma(W_o x_t + U_o h_{t-1} + b_o)
    g_t = tanh(W_c x_t + U_c h_{t-1} + b_c)
    C_t = f_t * C_{t-1} + i_t * g_t
    h_t = o_t * tanh(C_t)

Every pass starts from h_0 = C_0 = 0. Inputs carry a leading batch axis.
Affine maps go through ``einsum`` rather than BLAS so each example's result
is independent of how many other examples share the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GATE_NAMES = ("f", "i", "o", "c")
TENSOR_NAMES = tuple(f"W_{g}" for g in GATE_NAMES) + tuple(f"U_{g}" for g in GATE_NAMES) + tuple(
    f"b_{g}" for g in GATE_NAMES
)


def sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LstmParams:
    W_f: np.ndarray
    W_i: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    U_f: np.ndarray
    U_i: np.ndarray
    U_o: np.ndarray
    U_c: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    @classmethod
    def zeros(cls, input_dim: int, hidden: int) -> "LstmParams":
        return cls(
            *[np.zeros((hidden, input_dim)) for _ in range(4)],
            *[np.zeros((hidden, hidden)) for _ in range(4)],
            *[np.zeros(hidden) for _ in range(4)],
        )

    @property
    def input_dim(self) -> int:
        return self.W_f.shape[1]

    @property
    def hidden(self) -> int:
        return self.W_f.shape[0]

    def tensors(self) -> list[np.ndarray]:
        return [getattr(self, n) for n in TENSOR_NAMES]

    @classmethod
    def from_tensors(cls, tensors) -> "LstmParams":
        return cls(*tensors)

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gate blocks stacked in f, i, o, c order: (4H, D), (4H, H), (4H,)."""
        W = np.concatenate([self.W_f, self.W_i, self.W_o, self.W_c])
        U = np.concatenate([self.U_f, self.U_i, self.U_o, self.U_c])
        b = np.concatenate([self.b_f, self.b_i, self.b_o, self.b_c])
        return W, U, b

    def check(self) -> None:
        D, H = self.input_dim, self.hidden
        for name, t in zip(TENSOR_NAMES, self.tensors()):
            want = {"W": (H, D), "U": (H, H), "b": (H,)}[name[0]]
            if t.shape != want:
                raise ValueError(f"{name} has shape {t.shape}, expected {want}")


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden: int, batch: int | None = None) -> "CellState":
        shape = (hidden,) if batch is None else (batch, hidden)
        return cls(np.zeros(shape), np.zeros(shape))


def cell_update(f: np.ndarray, i: np.ndarray, g: np.ndarray, c_prev: np.ndarray) -> np.ndarray:
    """Memory update ``C_t = f * C_{t-1} + i * g``."""
    return f * c_prev + i * g


def _gates(z: np.ndarray, H: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    sig = sigmoid(z[..., : 3 * H])
    return sig[..., :H], sig[..., H:2 * H], sig[..., 2 * H:3 * H], np.tanh(z[..., 3 * H:])


def lstm_cell_forward(p: LstmParams, x_t: np.ndarray, prev: CellState) -> CellState:
    """One time step. ``x_t`` may be a vector (D,) or a batch (B, D)."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape[-1] != p.input_dim or prev.h.shape[-1] != p.hidden:
        raise ValueError("input or state size does not match the cell parameters")
    if not np.all(np.isfinite(x_t)):
        raise ValueError("non-finite cell input")
    W, U, b = p.stacked()
    z = np.einsum("...d,gd->...g", x_t, W) + np.einsum("...h,gh->...g", prev.h, U) + b
    f, i, o, g = _gates(z, p.hidden)
    c = cell_update(f, i, g, prev.c)
    return CellState(o * np.tanh(c), c)


@dataclass
class DirectionCache:
    x: np.ndarray        # (B, T, D) input, original time order
    h: np.ndarray        # (B, T+1, H) hidden states in processing order, h[:, 0] = 0
    c: np.ndarray        # (B, T+1, H)
    gates: np.ndarray    # (B, T, 4H) post-activation f, i, o, g in processing order
    reverse: bool


def direction_forward(p: LstmParams, x: np.ndarray, reverse: bool = False) -> tuple[np.ndarray, DirectionCache]:
    """Run one direction over a batch ``x`` of shape (B, T, D).

    Returns hidden outputs (B, T, H) aligned with the input time axis, so for
    the reverse direction ``out[:, 0]`` is the state after reading the whole
    sequence backwards.
    """
    B, T, D = x.shape
    if D != p.input_dim:
        raise ValueError(f"input dim {D} does not match parameters ({p.input_dim})")
    H = p.hidden
    W, U, b = p.stacked()
    xs = x[:, ::-1] if reverse else x
    zx = np.einsum("btd,gd->btg", xs, W) + b
    hs = np.zeros((B, T + 1, H))
    cs = np.zeros((B, T + 1, H))
    gates = np.empty((B, T, 4 * H))
    for s in range(T):
        z = zx[:, s] + np.einsum("bh,gh->bg", hs[:, s], U)
        f, i, o, g = _gates(z, H)
        cs[:, s + 1] = cell_update(f, i, g, cs[:, s])
        hs[:, s + 1] = o * np.tanh(cs[:, s + 1])
        gates[:, s] = np.concatenate([f, i, o, g], axis=-1)
    out = hs[:, 1:]
    if reverse:
        out = out[:, ::-1]
    return np.ascontiguousarray(out), DirectionCache(x, hs, cs, gates, reverse)


def direction_backward(
    p: LstmParams, cache: DirectionCache, dout: np.ndarray
) -> tuple[LstmParams, np.ndarray]:
    """Backpropagation through time for one direction.

    ``dout`` is the loss gradient w.r.t. the outputs (B, T, H) in input time
    order. Returns parameter gradients and the gradient w.r.t. ``cache.x``.
    """
    H = p.hidden
    W, U, _ = p.stacked()
    x = cache.x[:, ::-1] if cache.reverse else cache.x
    dh_ext = dout[:, ::-1] if cache.reverse else dout
    B, T, D = x.shape
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * H)
    dx = np.zeros((B, T, D))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for s in range(T - 1, -1, -1):
        gt = cache.gates[:, s]
        f, i, o, g = gt[:, :H], gt[:, H:2 * H], gt[:, 2 * H:3 * H], gt[:, 3 * H:]
        c = cache.c[:, s + 1]
        c_prev = cache.c[:, s]
        h_prev = cache.h[:, s]
        tc = np.tanh(c)
        dh = dh_ext[:, s] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [
                dc * c_prev * f * (1.0 - f),
                dc * g * i * (1.0 - i),
                dh * tc * o * (1.0 - o),
                dc * i * (1.0 - g * g),
            ],
            axis=-1,
        )
        dW += dz.T @ x[:, s]
        dU += dz.T @ h_prev
        db += dz.sum(axis=0)
        dx[:, s] = dz @ W
        dh_next = dz @ U
        dc_next = dc * f
    if cache.reverse:
        dx = dx[:, ::-1]
    grads = LstmParams(
        *np.split(dW, 4), *np.split(dU, 4), *np.split(db, 4)
    )
    return grads, np.ascontiguousarray(dx)


def bilstm_layer_forward(fwd: LstmParams, bwd: LstmParams, seq: np.ndarray) -> np.ndarray:
    """Bidirectional layer over ``seq`` of shape (T, D) or (B, T, D).

    Output at step t is ``concat(h_fwd[t], h_bwd[t])``.
    """
    x = np.asarray(seq, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.shape[1] < 1:
        raise ValueError("sequence must have at least one step")
    hf, _ = direction_forward(fwd, x, reverse=False)
    hb, _ = direction_forward(bwd, x, reverse=True)
    out = np.concatenate([hf, hb], axis=-1)
    return out[0] if single else out
