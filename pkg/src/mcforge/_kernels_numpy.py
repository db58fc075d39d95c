"""Pure-numpy fallback implementations of the hot inner loops.

Same contracts as `_kernels_numba`; convolutions go through im2col + BLAS,
spectrum evaluation through chunked matrix products.
"""

import math

import numpy as np

_DFT_CHUNK = 4096


def _im2col(x):
    # (Cin, H, W) -> (Cin*9, H*W) with columns ordered (ci, di, dj)
    cin, h, w = x.shape
    xp = np.zeros((cin, h + 2, w + 2))
    xp[:, 1:h + 1, 1:w + 1] = x
    cols = np.empty((cin, 9, h * w))
    idx = 0
    for di in range(3):
        for dj in range(3):
            cols[:, idx, :] = xp[:, di:di + h, dj:dj + w].reshape(cin, h * w)
            idx += 1
    return cols.reshape(cin * 9, h * w)


def conv2d_forward(x, k, b):
    cout = k.shape[0]
    _, h, w = x.shape
    y = k.reshape(cout, -1) @ _im2col(x)
    return y.reshape(cout, h, w) + b[:, None, None]


def conv2d_backward_input(gy, k):
    cout, h, w = gy.shape
    cin = k.shape[1]
    cols = k.reshape(cout, -1).T @ gy.reshape(cout, h * w)  # (Cin*9, H*W)
    cols = cols.reshape(cin, 9, h, w)
    gp = np.zeros((cin, h + 2, w + 2))
    idx = 0
    for di in range(3):
        for dj in range(3):
            gp[:, di:di + h, dj:dj + w] += cols[:, idx]
            idx += 1
    return gp[:, 1:h + 1, 1:w + 1]


def conv2d_backward_params(gy, x):
    cout, h, w = gy.shape
    cin = x.shape[0]
    gk = gy.reshape(cout, h * w) @ _im2col(x).T
    return gk.reshape(cout, cin, 3, 3), gy.sum(axis=(1, 2))


def dft_eval(img, kx, ky):
    h, w = img.shape
    yy = np.arange(h) - h // 2
    xx = np.arange(w) - w // 2
    cimg = img.astype(np.complex128)
    out = np.empty(kx.shape[0], dtype=np.complex128)
    for lo in range(0, kx.shape[0], _DFT_CHUNK):
        hi = min(lo + _DFT_CHUNK, kx.shape[0])
        ey = np.exp(-2j * np.pi * np.outer(ky[lo:hi], yy))
        ex = np.exp(-2j * np.pi * np.outer(kx[lo:hi], xx))
        out[lo:hi] = np.einsum("mw,mw->m", ey @ cimg, ex)
    return out


def grid_interp(grid, u, v, support, lut):
    nh, nw = grid.shape
    lut_scale = (lut.shape[0] - 1) / support
    ihalf = int(math.floor(support))
    offs = np.arange(-ihalf, ihalf + 1)
    iu = np.floor(u).astype(np.int64)
    iv = np.floor(v).astype(np.int64)
    rows = iu[:, None] + offs[None, :]
    cols = iv[:, None] + offs[None, :]
    du = np.abs(u[:, None] - rows)
    dv = np.abs(v[:, None] - cols)
    wr = np.interp(np.minimum(du, support) * lut_scale, np.arange(lut.shape[0], dtype=float), lut)
    wc = np.interp(np.minimum(dv, support) * lut_scale, np.arange(lut.shape[0], dtype=float), lut)
    wr = wr * (du <= support)
    wc = wc * (dv <= support)
    g = grid[rows[:, :, None] % nh, cols[:, None, :] % nw]
    return np.einsum("ma,mb,mab->m", wr, wc, g)
