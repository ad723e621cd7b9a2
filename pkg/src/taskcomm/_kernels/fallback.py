"""Pure-numpy implementations of the hot kernels.

Selected by :mod:`taskcomm._kernels` when the compiled extension is missing
or explicitly disabled. Each function here is the reference semantics; the
Cython twin in ``_core.pyx`` must agree within float rounding (and exactly
for integer outputs).
"""

import math

import numpy as np


def im2col(x, k, stride, pad):
    """Unfold (B,C,H,W) float32 into patch rows of shape (B*OH*OW, C*k*k)."""
    B, C, H, W = x.shape
    if pad:
        xp = np.zeros((B, C, H + 2 * pad, W + 2 * pad), dtype=x.dtype)
        xp[:, :, pad:pad + H, pad:pad + W] = x
    else:
        xp = x
    OH = (H + 2 * pad - k) // stride + 1
    OW = (W + 2 * pad - k) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    win = win[:, :, ::stride, ::stride, :, :]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * OH * OW, C * k * k)
    return np.ascontiguousarray(cols)


def col2im(cols, B, C, H, W, k, stride, pad):
    """Adjoint of :func:`im2col`: scatter-add patch rows back to (B,C,H,W)."""
    OH = (H + 2 * pad - k) // stride + 1
    OW = (W + 2 * pad - k) // stride + 1
    cols6 = cols.reshape(B, OH, OW, C, k, k).transpose(0, 3, 1, 2, 4, 5)
    xp = np.zeros((B, C, H + 2 * pad, W + 2 * pad), dtype=cols.dtype)
    for di in range(k):
        for dj in range(k):
            xp[:, :, di:di + OH * stride:stride, dj:dj + OW * stride:stride] += cols6[:, :, :, :, di, dj]
    if pad:
        return np.ascontiguousarray(xp[:, :, pad:pad + H, pad:pad + W])
    return xp


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_pointwise_forward(gates, c_prev):
    """Apply LSTM gate nonlinearities. gates: (B,4H) preactivations [i,f,g,o]."""
    H = gates.shape[1] // 4
    i = _sigmoid(gates[:, 0 * H:1 * H])
    f = _sigmoid(gates[:, 1 * H:2 * H])
    g = np.tanh(gates[:, 2 * H:3 * H])
    o = _sigmoid(gates[:, 3 * H:4 * H])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, i, f, g, o, tc


def lstm_pointwise_backward(dh, dc_in, c_prev, i, f, g, o, tc):
    """Backward of :func:`lstm_pointwise_forward`; returns (dgates, dc_prev)."""
    dc = dc_in + dh * o * (1.0 - tc * tc)
    dgates = np.concatenate(
        [
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            dh * tc * o * (1.0 - o),
        ],
        axis=1,
    )
    return dgates, dc * f


def adam_update(p, g, m, v, lr, beta1, beta2, eps, t):
    """Fused in-place adaptive-moment step: p -= lr * m_hat / (sqrt(v_hat) + eps)."""
    b1 = np.float32(beta1)
    b2 = np.float32(beta2)
    m *= b1
    m += np.float32(1.0 - beta1) * g
    v *= b2
    v += np.float32(1.0 - beta2) * (g * g)
    bc1 = np.float32(1.0 - beta1 ** t)
    bc2 = np.float32(1.0 - beta2 ** t)
    p -= (np.float32(lr) * (m / bc1)) / (np.sqrt(v / bc2) + np.float32(eps))


def nearest_codewords(latents, codebook):
    """Index of the squared-L2-nearest codebook row per latent; ties -> lowest index.

    Distances accumulate in float64 so both backends agree on argmin for any
    realistically separated inputs.
    """
    lat = latents.astype(np.float64, copy=False)
    cb = codebook.astype(np.float64, copy=False)
    out = np.empty(lat.shape[0], dtype=np.int64)
    chunk = 4096
    for s in range(0, lat.shape[0], chunk):
        block = lat[s:s + chunk]
        d = ((block[:, None, :] - cb[None, :, :]) ** 2).sum(axis=2)
        out[s:s + chunk] = np.argmin(d, axis=1)
    return out


def draw_line(img, r0, c0, r1, c1, thickness):
    """Midpoint-stepped segment of intensity 1.0, `thickness` px wide.

    Steps along the dominant axis; the minor coordinate is floor(x+0.5)
    rounded. Thickness extends toward +offset along the minor axis, so the
    caller passes the left/top cell of the span. Out-of-frame pixels clip.
    """
    H, W = img.shape
    dr = r1 - r0
    dc = c1 - c0
    steps = max(abs(dr), abs(dc))
    row_major = abs(dr) >= abs(dc)
    for s in range(steps + 1):
        if steps == 0:
            r, c = r0, c0
        else:
            r = r0 + int(math.floor(s * dr / steps + 0.5))
            c = c0 + int(math.floor(s * dc / steps + 0.5))
        for t in range(thickness):
            rr = r if row_major else r + t
            cc = c + t if row_major else c
            if 0 <= rr < H and 0 <= cc < W:
                img[rr, cc] = 1.0
