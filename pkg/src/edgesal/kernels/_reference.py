"""Pure-numpy reference kernels.

These are the fallback implementations selected with ``EDGESAL_BACKEND=numpy``
and the semantic ground truth the jit kernels are tested against. All arrays
are single-image, channel-last: features ``(H, W, C)``, convolution weights
``(KH, KW, Cin, Cout)``. Convolutions are stride 1 with zero "same" padding
(``pad = k // 2``, odd kernels), so spatial size is preserved.
"""

from __future__ import annotations

import numpy as np

# Offsets of a 2x2 pooling window in row-major scan order; ties in the max
# are broken toward the earliest offset, matching the jit backend.
_POOL_OFFSETS = ((0, 0), (0, 1), (1, 0), (1, 1))


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    kh, kw = w.shape[0], w.shape[1]
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((ph, ph), (pw, pw), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(0, 1))
    # win: (H, W, Cin, KH, KW) against w: (KH, KW, Cin, Cout)
    y = np.tensordot(win, w, axes=((3, 4, 2), (0, 1, 2)))
    y += b
    return np.ascontiguousarray(y)


def conv2d_input_grad(dy: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Gradient wrt input is a same-padded convolution with the spatially
    # flipped kernel and swapped in/out channels.
    w_t = np.ascontiguousarray(w[::-1, ::-1].swapaxes(2, 3))
    zero_bias = np.zeros(w_t.shape[3], dtype=dy.dtype)
    return conv2d_forward(dy, w_t, zero_bias)


def conv2d_weight_grad(
    x: np.ndarray, dy: np.ndarray, kh: int, kw: int
) -> tuple[np.ndarray, np.ndarray]:
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((ph, ph), (pw, pw), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(0, 1))
    # Contract the two spatial output axes: (H,W,Cin,KH,KW) x (H,W,Cout)
    dw = np.tensordot(win, dy, axes=((0, 1), (0, 1)))  # (Cin, KH, KW, Cout)
    dw = np.ascontiguousarray(dw.transpose(1, 2, 0, 3))
    db = dy.sum(axis=(0, 1))
    return dw, db


def maxpool2_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h, w, c = x.shape
    r = x.reshape(h // 2, 2, w // 2, 2, c).transpose(0, 2, 4, 1, 3)
    flat = r.reshape(h // 2, w // 2, c, 4)
    idx = flat.argmax(axis=3).astype(np.uint8)
    y = np.take_along_axis(flat, idx[..., None].astype(np.intp), axis=3)[..., 0]
    return np.ascontiguousarray(y), idx


def maxpool2_backward(idx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    hh, ww, c = dy.shape
    flat = np.zeros((hh, ww, c, 4), dtype=dy.dtype)
    np.put_along_axis(flat, idx[..., None].astype(np.intp), dy[..., None], axis=3)
    dx = flat.reshape(hh, ww, c, 2, 2).transpose(0, 3, 1, 4, 2)
    return np.ascontiguousarray(dx.reshape(hh * 2, ww * 2, c))


def _bilinear_axis(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Half-pixel-center sampling (constant maps stay constant); source
    # coordinates are clamped so border rows/cols extend outward.
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.intp)
    frac = src - lo
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, frac


def resize_bilinear_forward(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w, _ = x.shape
    y0, y1, ty = _bilinear_axis(h, out_h)
    x0, x1, tx = _bilinear_axis(w, out_w)
    ty = ty[:, None, None].astype(x.dtype)
    tx = tx[None, :, None].astype(x.dtype)
    top = x[y0][:, x0] * (1 - tx) + x[y0][:, x1] * tx
    bot = x[y1][:, x0] * (1 - tx) + x[y1][:, x1] * tx
    return np.ascontiguousarray(top * (1 - ty) + bot * ty)


def resize_bilinear_backward(dy: np.ndarray, in_h: int, in_w: int) -> np.ndarray:
    out_h, out_w, c = dy.shape
    y0, y1, ty = _bilinear_axis(in_h, out_h)
    x0, x1, tx = _bilinear_axis(in_w, out_w)
    ty = ty[:, None, None].astype(dy.dtype)
    tx = tx[None, :, None].astype(dy.dtype)
    dx = np.zeros((in_h, in_w, c), dtype=dy.dtype)
    yy0 = y0[:, None]
    yy1 = y1[:, None]
    np.add.at(dx, (yy0, x0[None, :]), dy * (1 - ty) * (1 - tx))
    np.add.at(dx, (yy0, x1[None, :]), dy * (1 - ty) * tx)
    np.add.at(dx, (yy1, x0[None, :]), dy * ty * (1 - tx))
    np.add.at(dx, (yy1, x1[None, :]), dy * ty * tx)
    return dx
