"""Numba-compiled kernels.

Same contracts as ``_reference``; explicit loops with a fixed accumulation
order so results are reproducible run to run. ``fastmath`` stays off on
purpose: reassociation would break the bit-level determinism the training
harness promises. Kernels are compiled lazily per input dtype (float32 for
training, float64 for gradient checks) and cached on disk.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def conv2d_forward(x, w, b):
    h, wd, cin = x.shape
    kh, kw, _, cout = w.shape
    ph, pw = kh // 2, kw // 2
    y = np.empty((h, wd, cout), dtype=x.dtype)
    acc = np.empty(cout, dtype=x.dtype)
    for oy in range(h):
        for ox in range(wd):
            acc[:] = b
            for ky in range(kh):
                iy = oy + ky - ph
                if iy < 0 or iy >= h:
                    continue
                for kx in range(kw):
                    ix = ox + kx - pw
                    if ix < 0 or ix >= wd:
                        continue
                    for ci in range(cin):
                        v = x[iy, ix, ci]
                        for co in range(cout):
                            acc[co] += v * w[ky, kx, ci, co]
            y[oy, ox, :] = acc
    return y


@njit(**_JIT)
def conv2d_input_grad(dy, w):
    h, wd, cout = dy.shape
    kh, kw, cin, _ = w.shape
    ph, pw = kh // 2, kw // 2
    # transpose once so the innermost accumulation runs over contiguous ci
    wt = np.empty((kh, kw, cout, cin), dtype=w.dtype)
    for ky in range(kh):
        for kx in range(kw):
            for ci in range(cin):
                for co in range(cout):
                    wt[ky, kx, co, ci] = w[ky, kx, ci, co]
    dx = np.empty((h, wd, cin), dtype=dy.dtype)
    acc = np.empty(cin, dtype=dy.dtype)
    for iy in range(h):
        for ix in range(wd):
            acc[:] = 0.0
            for ky in range(kh):
                oy = iy - ky + ph
                if oy < 0 or oy >= h:
                    continue
                for kx in range(kw):
                    ox = ix - kx + pw
                    if ox < 0 or ox >= wd:
                        continue
                    for co in range(cout):
                        g = dy[oy, ox, co]
                        for ci in range(cin):
                            acc[ci] += g * wt[ky, kx, co, ci]
            dx[iy, ix, :] = acc
    return dx


@njit(**_JIT)
def conv2d_weight_grad(x, dy, kh, kw):
    h, wd, cin = x.shape
    cout = dy.shape[2]
    ph, pw = kh // 2, kw // 2
    dw = np.zeros((kh, kw, cin, cout), dtype=x.dtype)
    db = np.zeros(cout, dtype=x.dtype)
    for oy in range(h):
        for ox in range(wd):
            for co in range(cout):
                db[co] += dy[oy, ox, co]
    for ky in range(kh):
        for kx in range(kw):
            for oy in range(h):
                iy = oy + ky - ph
                if iy < 0 or iy >= h:
                    continue
                for ox in range(wd):
                    ix = ox + kx - pw
                    if ix < 0 or ix >= wd:
                        continue
                    for ci in range(cin):
                        v = x[iy, ix, ci]
                        for co in range(cout):
                            dw[ky, kx, ci, co] += v * dy[oy, ox, co]
    return dw, db


@njit(**_JIT)
def maxpool2_forward(x):
    h, wd, c = x.shape
    hh, ww = h // 2, wd // 2
    y = np.empty((hh, ww, c), dtype=x.dtype)
    idx = np.empty((hh, ww, c), dtype=np.uint8)
    for oy in range(hh):
        for ox in range(ww):
            for ch in range(c):
                best = x[2 * oy, 2 * ox, ch]
                k = 0
                # scan order (0,0),(0,1),(1,0),(1,1); first max wins
                if x[2 * oy, 2 * ox + 1, ch] > best:
                    best = x[2 * oy, 2 * ox + 1, ch]
                    k = 1
                if x[2 * oy + 1, 2 * ox, ch] > best:
                    best = x[2 * oy + 1, 2 * ox, ch]
                    k = 2
                if x[2 * oy + 1, 2 * ox + 1, ch] > best:
                    best = x[2 * oy + 1, 2 * ox + 1, ch]
                    k = 3
                y[oy, ox, ch] = best
                idx[oy, ox, ch] = k
    return y, idx


@njit(**_JIT)
def maxpool2_backward(idx, dy):
    hh, ww, c = dy.shape
    dx = np.zeros((hh * 2, ww * 2, c), dtype=dy.dtype)
    for oy in range(hh):
        for ox in range(ww):
            for ch in range(c):
                k = idx[oy, ox, ch]
                dx[2 * oy + k // 2, 2 * ox + k % 2, ch] = dy[oy, ox, ch]
    return dx


@njit(**_JIT)
def resize_bilinear_forward(x, out_h, out_w):
    h, wd, c = x.shape
    y = np.empty((out_h, out_w, c), dtype=x.dtype)
    sy = h / out_h
    sx = wd / out_w
    for oy in range(out_h):
        fy = (oy + 0.5) * sy - 0.5
        if fy < 0.0:
            fy = 0.0
        if fy > h - 1.0:
            fy = h - 1.0
        y0 = int(np.floor(fy))
        ty = fy - y0
        y1 = min(y0 + 1, h - 1)
        for ox in range(out_w):
            fx = (ox + 0.5) * sx - 0.5
            if fx < 0.0:
                fx = 0.0
            if fx > wd - 1.0:
                fx = wd - 1.0
            x0 = int(np.floor(fx))
            tx = fx - x0
            x1 = min(x0 + 1, wd - 1)
            for ch in range(c):
                top = x[y0, x0, ch] * (1.0 - tx) + x[y0, x1, ch] * tx
                bot = x[y1, x0, ch] * (1.0 - tx) + x[y1, x1, ch] * tx
                y[oy, ox, ch] = top * (1.0 - ty) + bot * ty
    return y


@njit(**_JIT)
def resize_bilinear_backward(dy, in_h, in_w):
    out_h, out_w, c = dy.shape
    dx = np.zeros((in_h, in_w, c), dtype=dy.dtype)
    sy = in_h / out_h
    sx = in_w / out_w
    for oy in range(out_h):
        fy = (oy + 0.5) * sy - 0.5
        if fy < 0.0:
            fy = 0.0
        if fy > in_h - 1.0:
            fy = in_h - 1.0
        y0 = int(np.floor(fy))
        ty = fy - y0
        y1 = min(y0 + 1, in_h - 1)
        for ox in range(out_w):
            fx = (ox + 0.5) * sx - 0.5
            if fx < 0.0:
                fx = 0.0
            if fx > in_w - 1.0:
                fx = in_w - 1.0
            x0 = int(np.floor(fx))
            tx = fx - x0
            x1 = min(x0 + 1, in_w - 1)
            for ch in range(c):
                g = dy[oy, ox, ch]
                dx[y0, x0, ch] += g * (1.0 - ty) * (1.0 - tx)
                dx[y0, x1, ch] += g * (1.0 - ty) * tx
                dx[y1, x0, ch] += g * ty * (1.0 - tx)
                dx[y1, x1, ch] += g * ty * tx
    return dx
