"""Gridrec-like direct Fourier backprojection.

Each (already filtered) projection row is zero-padded and Fourier transformed,
its samples are spread onto a Cartesian frequency grid with bilinear weights,
and a 2D inverse FFT brings the result back to image space.  The bilinear
spreading multiplies the image by ``sinc^2``; that factor is divided out
after the central crop.  No ramp or density weighting is applied here: the
filter supplied by the caller plays that role.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import sparse

from .raster import Geometry


def _nextpow2(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


@lru_cache(maxsize=4)
def _plan(g: Geometry, grid_pad: int):
    L = grid_pad * _nextpow2(g.n_det)  # radial FFT length == Cartesian grid size
    freqs = np.fft.fftfreq(L)  # cycles per pixel
    theta = g.angle_array
    ku = (freqs[None, :] * np.cos(theta)[:, None]).ravel() * L  # grid units
    kv = (freqs[None, :] * np.sin(theta)[:, None]).ravel() * L
    iu, iv = np.floor(ku).astype(np.int64), np.floor(kv).astype(np.int64)
    fu, fv = ku - iu, kv - iv
    cols = np.arange(ku.size)
    rows, data, cc = [], [], []
    for du, wu in ((0, 1 - fu), (1, fu)):
        for dv, wv in ((0, 1 - fv), (1, fv)):
            rows.append(((iv + dv) % L) * L + (iu + du) % L)
            data.append(wu * wv)
            cc.append(cols)
    quad = (1.0 / L) * (np.pi / g.n_angles)
    spread = sparse.csr_matrix(
        (np.concatenate(data) * quad, (np.concatenate(rows), np.concatenate(cc))),
        shape=(L * L, ku.size))
    # phase of detector centre so that FFT samples refer to t = 0
    c_det = (g.n_det - 1) / 2.0
    det_phase = np.exp(2j * np.pi * freqs * c_det)
    # image pixel (i, j) sits at x = n_j + off, y = m_i - off with integer n, m
    n = g.vol_size
    off = n // 2 - (n - 1) / 2.0
    fu_grid = np.fft.fftfreq(L)
    img_phase = np.exp(2j * np.pi * off * (fu_grid[None, :] - fu_grid[:, None]))
    idx = np.arange(n)
    row_idx = (n // 2 - idx) % L
    col_idx = (idx - n // 2) % L
    xs = idx - (n - 1) / 2.0
    apod = np.sinc(xs / L) ** 2
    deapod = 1.0 / (apod[:, None] * apod[None, :])
    return L, spread, det_phase, img_phase, row_idx, col_idx, deapod


def fourier_backproject(g: Geometry, sino: np.ndarray, *, grid_pad: int = 2) -> np.ndarray:
    """Backproject filtered rows through the Fourier domain; returns ``(N, N)``."""
    L, spread, det_phase, img_phase, row_idx, col_idx, deapod = _plan(g, grid_pad)
    rows = np.zeros((g.n_angles, L))
    rows[:, :g.n_det] = sino
    spec = np.fft.fft(rows, axis=1) * det_phase[None, :]
    grid = (spread @ spec.ravel()).reshape(L, L) * img_phase
    full = np.fft.ifft2(grid) * (L * L)
    img = full[np.ix_(row_idx, col_idx)].real
    return img * deapod
