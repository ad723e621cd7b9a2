"""Minimal layer substrate with explicit backward passes.

Parameters live in a ParamSet and are passed to every call, so target
networks, checkpointing and the pure optimizer all operate on plain
ParamSet values. Activations are float32; loss reductions accumulate in
float64. Gradient correctness is pinned by finite-difference tests.
"""

import math

import numpy as np

from taskcomm import _kernels
from taskcomm.learnkit.params import ParamSet


class Linear:
    def __init__(self, name: str, n_in: int, n_out: int):
        self.name = name
        self.n_in = n_in
        self.n_out = n_out
        self.w = f"{name}.w"
        self.b = f"{name}.b"

    def init(self, ps: ParamSet, rng: np.random.Generator) -> None:
        bound = 1.0 / math.sqrt(self.n_in)
        ps.add(self.w, rng.uniform(-bound, bound, (self.n_in, self.n_out)).astype(np.float32))
        ps.add(self.b, rng.uniform(-bound, bound, (self.n_out,)).astype(np.float32))

    def forward(self, ps: ParamSet, x: np.ndarray):
        return x @ ps[self.w] + ps[self.b], x

    def backward(self, ps: ParamSet, cache, dy: np.ndarray, grads: ParamSet) -> np.ndarray:
        x = cache
        grads[self.w] += x.T @ dy
        grads[self.b] += dy.sum(axis=0)
        return dy @ ps[self.w].T


class ReLU:
    @staticmethod
    def forward(x: np.ndarray):
        mask = x > 0
        return x * mask, mask

    @staticmethod
    def backward(cache, dy: np.ndarray) -> np.ndarray:
        return dy * cache


class Conv2d:
    """Stride-s kxk convolution on NCHW float32, zero padding."""

    def __init__(self, name: str, c_in: int, c_out: int, k: int = 4, stride: int = 2, pad: int = 1):
        self.name = name
        self.c_in = c_in
        self.c_out = c_out
        self.k = k
        self.stride = stride
        self.pad = pad
        self.w = f"{name}.w"
        self.b = f"{name}.b"

    def out_hw(self, h: int, w: int):
        return ((h + 2 * self.pad - self.k) // self.stride + 1,
                (w + 2 * self.pad - self.k) // self.stride + 1)

    def init(self, ps: ParamSet, rng: np.random.Generator) -> None:
        fan_in = self.c_in * self.k * self.k
        bound = 1.0 / math.sqrt(fan_in)
        ps.add(self.w, rng.uniform(-bound, bound, (fan_in, self.c_out)).astype(np.float32))
        ps.add(self.b, rng.uniform(-bound, bound, (self.c_out,)).astype(np.float32))

    def forward(self, ps: ParamSet, x: np.ndarray):
        B, _, H, W = x.shape
        oh, ow = self.out_hw(H, W)
        cols = _kernels.im2col(x, self.k, self.stride, self.pad)
        y2 = cols @ ps[self.w] + ps[self.b]
        y = np.ascontiguousarray(y2.reshape(B, oh, ow, self.c_out).transpose(0, 3, 1, 2))
        return y, (cols, x.shape)

    def backward(self, ps: ParamSet, cache, dy: np.ndarray, grads: ParamSet) -> np.ndarray:
        cols, xshape = cache
        B, C, H, W = xshape
        dy2 = np.ascontiguousarray(dy.transpose(0, 2, 3, 1)).reshape(-1, self.c_out)
        grads[self.w] += cols.T @ dy2
        grads[self.b] += dy2.sum(axis=0)
        dcols = dy2 @ ps[self.w].T
        return _kernels.col2im(dcols, B, C, H, W, self.k, self.stride, self.pad)


class ConvTranspose2d:
    """Adjoint of Conv2d: upsamples (H,W) to ((H-1)*s - 2p + k, ...)."""

    def __init__(self, name: str, c_in: int, c_out: int, k: int = 4, stride: int = 2, pad: int = 1):
        self.name = name
        self.c_in = c_in
        self.c_out = c_out
        self.k = k
        self.stride = stride
        self.pad = pad
        self.w = f"{name}.w"
        self.b = f"{name}.b"

    def out_hw(self, h: int, w: int):
        return ((h - 1) * self.stride - 2 * self.pad + self.k,
                (w - 1) * self.stride - 2 * self.pad + self.k)

    def init(self, ps: ParamSet, rng: np.random.Generator) -> None:
        fan_in = self.c_in * self.k * self.k
        bound = 1.0 / math.sqrt(fan_in)
        ps.add(self.w, rng.uniform(-bound, bound, (self.c_in, self.c_out * self.k * self.k)).astype(np.float32))
        ps.add(self.b, rng.uniform(-bound, bound, (self.c_out,)).astype(np.float32))

    def forward(self, ps: ParamSet, x: np.ndarray):
        B, C, H, W = x.shape
        oh, ow = self.out_hw(H, W)
        x2 = np.ascontiguousarray(x.transpose(0, 2, 3, 1)).reshape(B * H * W, C)
        cols = x2 @ ps[self.w]
        y = _kernels.col2im(cols, B, self.c_out, oh, ow, self.k, self.stride, self.pad)
        y += ps[self.b].reshape(1, -1, 1, 1)
        return y, (x2, x.shape)

    def backward(self, ps: ParamSet, cache, dy: np.ndarray, grads: ParamSet) -> np.ndarray:
        x2, xshape = cache
        B, C, H, W = xshape
        dcols = _kernels.im2col(np.ascontiguousarray(dy), self.k, self.stride, self.pad)
        grads[self.w] += x2.T @ dcols
        grads[self.b] += dy.sum(axis=(0, 2, 3))
        dx2 = dcols @ ps[self.w].T
        return np.ascontiguousarray(dx2.reshape(B, H, W, C).transpose(0, 3, 1, 2))


class LSTM:
    """Single-layer LSTM, gate order (i, f, g, o), forget bias init +1."""

    def __init__(self, name: str, n_in: int, width: int):
        self.name = name
        self.n_in = n_in
        self.width = width
        self.wx = f"{name}.wx"
        self.wh = f"{name}.wh"
        self.b = f"{name}.b"

    def init(self, ps: ParamSet, rng: np.random.Generator) -> None:
        bound = 1.0 / math.sqrt(self.width)
        ps.add(self.wx, rng.uniform(-bound, bound, (self.n_in, 4 * self.width)).astype(np.float32))
        ps.add(self.wh, rng.uniform(-bound, bound, (self.width, 4 * self.width)).astype(np.float32))
        b = rng.uniform(-bound, bound, (4 * self.width,)).astype(np.float32)
        b[self.width:2 * self.width] += 1.0
        ps.add(self.b, b)

    def zero_state(self, batch: int):
        return (np.zeros((batch, self.width), dtype=np.float32),
                np.zeros((batch, self.width), dtype=np.float32))

    def step(self, ps: ParamSet, x: np.ndarray, state):
        h_prev, c_prev = state if state is not None else self.zero_state(x.shape[0])
        gates = x @ ps[self.wx] + h_prev @ ps[self.wh] + ps[self.b]
        h, c, i, f, g, o, tc = _kernels.lstm_pointwise_forward(gates, c_prev)
        cache = (x, h_prev, c_prev, i, f, g, o, tc)
        return h, (h, c), cache

    def forward_seq(self, ps: ParamSet, xs: np.ndarray):
        B, T, _ = xs.shape
        hs = np.empty((B, T, self.width), dtype=np.float32)
        state = self.zero_state(B)
        caches = []
        for t in range(T):
            h, state, cache = self.step(ps, xs[:, t], state)
            hs[:, t] = h
            caches.append(cache)
        return hs, caches

    def backward_seq(self, ps: ParamSet, caches, dhs: np.ndarray, grads: ParamSet) -> np.ndarray:
        B, T, _ = dhs.shape
        dxs = np.empty((B, T, self.n_in), dtype=np.float32)
        dh_next = np.zeros((B, self.width), dtype=np.float32)
        dc_next = np.zeros((B, self.width), dtype=np.float32)
        for t in range(T - 1, -1, -1):
            x, h_prev, c_prev, i, f, g, o, tc = caches[t]
            dh = dhs[:, t] + dh_next
            dgates, dc_next = _kernels.lstm_pointwise_backward(dh, dc_next, c_prev, i, f, g, o, tc)
            grads[self.wx] += x.T @ dgates
            grads[self.wh] += h_prev.T @ dgates
            grads[self.b] += dgates.sum(axis=0)
            dh_next = dgates @ ps[self.wh].T
            dxs[:, t] = dgates @ ps[self.wx].T
        return dxs


class RecurrentNet:
    """linear(hidden)+ReLU -> LSTM(width) -> linear head."""

    def __init__(self, input_dim: int, out_dim: int, hidden: int = 128, width: int = 128, prefix: str = "net"):
        self.input_dim = input_dim
        self.out_dim = out_dim
        self.width = width
        self.fc_in = Linear(f"{prefix}.fc_in", input_dim, hidden)
        self.lstm = LSTM(f"{prefix}.lstm", hidden, width)
        self.fc_out = Linear(f"{prefix}.fc_out", width, out_dim)

    def init_params(self, rng: np.random.Generator) -> ParamSet:
        ps = ParamSet()
        self.fc_in.init(ps, rng)
        self.lstm.init(ps, rng)
        self.fc_out.init(ps, rng)
        return ps

    def zero_state(self, batch: int = 1):
        return self.lstm.zero_state(batch)

    def step(self, ps: ParamSet, x: np.ndarray, state):
        z, _ = self.fc_in.forward(ps, x)
        z, _ = ReLU.forward(z)
        h, new_state, _ = self.lstm.step(ps, z, state)
        y, _ = self.fc_out.forward(ps, h)
        return y, new_state

    def forward_seq(self, ps: ParamSet, xs: np.ndarray):
        B, T, D = xs.shape
        flat = xs.reshape(B * T, D)
        z, c_in = self.fc_in.forward(ps, flat)
        z, c_relu = ReLU.forward(z)
        hs, c_lstm = self.lstm.forward_seq(ps, z.reshape(B, T, -1))
        y, c_out = self.fc_out.forward(ps, hs.reshape(B * T, self.width))
        ys = y.reshape(B, T, self.out_dim)
        return ys, (c_in, c_relu, c_lstm, c_out, (B, T, D))

    def backward_seq(self, ps: ParamSet, caches, dys: np.ndarray, grads: ParamSet) -> None:
        c_in, c_relu, c_lstm, c_out, (B, T, D) = caches
        dh = self.fc_out.backward(ps, c_out, dys.reshape(B * T, self.out_dim), grads)
        dz = self.lstm.backward_seq(ps, c_lstm, dh.reshape(B, T, self.width), grads)
        dz = ReLU.backward(c_relu, dz.reshape(B * T, -1))
        self.fc_in.backward(ps, c_in, dz, grads)


class MlpNet:
    """Feed-forward trunk: n_hidden 128-unit ReLU layers plus a linear head."""

    def __init__(self, input_dim: int, out_dim: int, hidden: int = 128, n_hidden: int = 2, prefix: str = "mlp"):
        self.input_dim = input_dim
        self.out_dim = out_dim
        self.layers = []
        d = input_dim
        for i in range(n_hidden):
            self.layers.append(Linear(f"{prefix}.fc{i}", d, hidden))
            d = hidden
        self.head = Linear(f"{prefix}.head", d, out_dim)

    def init_params(self, rng: np.random.Generator) -> ParamSet:
        ps = ParamSet()
        for layer in self.layers:
            layer.init(ps, rng)
        self.head.init(ps, rng)
        return ps

    def forward(self, ps: ParamSet, x: np.ndarray):
        caches = []
        z = x
        for layer in self.layers:
            z, c = layer.forward(ps, z)
            z, m = ReLU.forward(z)
            caches.append((c, m))
        y, c_head = self.head.forward(ps, z)
        return y, (caches, c_head)

    def backward(self, ps: ParamSet, caches, dy: np.ndarray, grads: ParamSet) -> np.ndarray:
        hidden_caches, c_head = caches
        dz = self.head.backward(ps, c_head, dy, grads)
        for layer, (c, m) in zip(reversed(self.layers), reversed(hidden_caches)):
            dz = ReLU.backward(m, dz)
            dz = layer.backward(ps, c, dz, grads)
        return dz


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error (float64 reduction) and its float32 gradient w.r.t. pred."""
    diff = pred - target
    loss = float(np.mean(diff.astype(np.float64) ** 2))
    grad = (np.float32(2.0 / diff.size) * diff).astype(np.float32)
    return loss, grad


def clip_gradients(grads: ParamSet, max_norm: float) -> float:
    """Scale all gradients so the global L2 norm is at most max_norm; returns the norm."""
    total = 0.0
    for _, g in grads.items():
        total += float(np.sum(g.astype(np.float64) ** 2))
    norm = math.sqrt(total)
    if norm > max_norm and norm > 0.0:
        scale = np.float32(max_norm / norm)
        for _, g in grads.items():
            g *= scale
    return norm
