"""Numba implementations of the hot inner loops.

Mirrors `_kernels_numpy` exactly; see `backend` for selection. All prange
loops write disjoint output slices and reduce in a fixed order, so results
do not depend on the thread count.
"""

import math

import numpy as np
from numba import njit, prange


@njit(parallel=True, fastmath=True, cache=True)
def conv2d_forward(x, k, b):
    cin, h, w = x.shape
    cout = k.shape[0]
    xp = np.zeros((cin, h + 2, w + 2))
    xp[:, 1:h + 1, 1:w + 1] = x
    y = np.empty((cout, h, w))
    for co in prange(cout):
        for i in range(h):
            row = np.full(w, b[co])
            for ci in range(cin):
                k00 = k[co, ci, 0, 0]
                k01 = k[co, ci, 0, 1]
                k02 = k[co, ci, 0, 2]
                k10 = k[co, ci, 1, 0]
                k11 = k[co, ci, 1, 1]
                k12 = k[co, ci, 1, 2]
                k20 = k[co, ci, 2, 0]
                k21 = k[co, ci, 2, 1]
                k22 = k[co, ci, 2, 2]
                r0 = xp[ci, i]
                r1 = xp[ci, i + 1]
                r2 = xp[ci, i + 2]
                for j in range(w):
                    row[j] += (k00 * r0[j] + k01 * r0[j + 1] + k02 * r0[j + 2]
                               + k10 * r1[j] + k11 * r1[j + 1] + k12 * r1[j + 2]
                               + k20 * r2[j] + k21 * r2[j + 1] + k22 * r2[j + 2])
            y[co, i] = row
    return y


@njit(parallel=True, fastmath=True, cache=True)
def conv2d_backward_input(gy, k):
    cout, h, w = gy.shape
    cin = k.shape[1]
    gp = np.zeros((cout, h + 2, w + 2))
    gp[:, 1:h + 1, 1:w + 1] = gy
    gx = np.empty((cin, h, w))
    for ci in prange(cin):
        for p in range(h):
            row = np.zeros(w)
            for co in range(cout):
                for di in range(3):
                    gr = gp[co, p + 2 - di]
                    k0 = k[co, ci, di, 0]
                    k1 = k[co, ci, di, 1]
                    k2 = k[co, ci, di, 2]
                    row += k0 * gr[2:w + 2] + k1 * gr[1:w + 1] + k2 * gr[0:w]
            gx[ci, p] = row
    return gx


@njit(parallel=True, fastmath=True, cache=True)
def conv2d_backward_params(gy, x):
    cout, h, w = gy.shape
    cin = x.shape[0]
    xp = np.zeros((cin, h + 2, w + 2))
    xp[:, 1:h + 1, 1:w + 1] = x
    gk = np.empty((cout, cin, 3, 3))
    gb = np.empty(cout)
    for co in prange(cout):
        s = 0.0
        for i in range(h):
            for j in range(w):
                s += gy[co, i, j]
        gb[co] = s
        for ci in range(cin):
            for di in range(3):
                a0 = 0.0
                a1 = 0.0
                a2 = 0.0
                for i in range(h):
                    gr = gy[co, i]
                    xr = xp[ci, i + di]
                    for j in range(w):
                        g = gr[j]
                        a0 += g * xr[j]
                        a1 += g * xr[j + 1]
                        a2 += g * xr[j + 2]
                gk[co, ci, di, 0] = a0
                gk[co, ci, di, 1] = a1
                gk[co, ci, di, 2] = a2
    return gk, gb


@njit(parallel=True, cache=True)
def dft_eval(img, kx, ky):
    # raw centered sums; the caller applies the 1/sqrt(H*W) scaling
    h, w = img.shape
    yc = h // 2
    xc = w // 2
    m = kx.shape[0]
    out = np.empty(m, dtype=np.complex128)
    for p in prange(m):
        ex = np.empty(w, dtype=np.complex128)
        for x in range(w):
            ph = -2.0 * math.pi * kx[p] * (x - xc)
            ex[x] = complex(math.cos(ph), math.sin(ph))
        acc = 0.0 + 0.0j
        for y in range(h):
            rowacc = 0.0 + 0.0j
            for x in range(w):
                rowacc += img[y, x] * ex[x]
            ph = -2.0 * math.pi * ky[p] * (y - yc)
            acc += complex(math.cos(ph), math.sin(ph)) * rowacc
        out[p] = acc
    return out


@njit(parallel=True, cache=True)
def grid_interp(grid, u, v, support, lut):
    # Kaiser-Bessel gather from an oversampled k-space grid with periodic
    # wrap; kernel values come from `lut`, sampled uniformly on [0, support].
    nh, nw = grid.shape
    m = u.shape[0]
    lut_scale = (lut.shape[0] - 1) / support
    ihalf = int(math.floor(support))
    out = np.empty(m, dtype=np.complex128)
    for p in prange(m):
        iu = int(math.floor(u[p]))
        iv = int(math.floor(v[p]))
        acc = 0.0 + 0.0j
        for a in range(-ihalf, ihalf + 1):
            r = iu + a
            du = abs(u[p] - r)
            if du > support:
                continue
            t = du * lut_scale
            ti = int(t)
            wr = lut[ti] + (lut[ti + 1] - lut[ti]) * (t - ti) if ti + 1 < lut.shape[0] else lut[ti]
            rw = r % nh
            rowacc = 0.0 + 0.0j
            for c in range(-ihalf, ihalf + 1):
                s = iv + c
                dv = abs(v[p] - s)
                if dv > support:
                    continue
                t2 = dv * lut_scale
                ti2 = int(t2)
                wc = lut[ti2] + (lut[ti2 + 1] - lut[ti2]) * (t2 - ti2) if ti2 + 1 < lut.shape[0] else lut[ti2]
                rowacc += wc * grid[rw, s % nw]
            acc += wr * rowacc
        out[p] = acc
    return out
