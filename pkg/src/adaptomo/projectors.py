"""Sparse projection matrices for the real-space kernels.

Every kernel is a footprint: the weight linking image pixel ``p`` to detector
bin ``k`` at angle ``theta`` depends only on ``delta = t_k - s_p`` with
``s_p = x_p cos(theta) + y_p sin(theta)`` and on ``a = max(|cos|, |sin|)``,
``b = min(|cos|, |sin|)``.  Weights are in pixel units (pixel size 1).

strip
    area of the unit pixel inside the unit-width strip around the ray.
line
    length of the ray inside the pixel (trapezoidal footprint).
joseph
    linear interpolation along the major axis, ``tri(delta / a) / a``.
pixel
    pixel centre projected on the detector and interpolated linearly
    between the two nearest bins, ``tri(delta)``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import InvalidArgumentError
from .raster import Geometry

KERNELS = ("strip", "line", "joseph", "pixel")

_EPS = 1e-12


def _trapezoid_cdf(u, a, b):
    # Fraction of a unit pixel with projected coordinate <= u (|cos|, |sin| = a >= b).
    lo, hi = (a - b) / 2.0, (a + b) / 2.0
    if b < _EPS:
        return np.clip((u + a / 2.0) / a, 0.0, 1.0)
    out = np.where(u <= -hi, 0.0, 1.0)
    ramp_lo = (u > -hi) & (u < -lo)
    out = np.where(ramp_lo, (u + hi) ** 2 / (2 * a * b), out)
    mid = (u >= -lo) & (u <= lo)
    out = np.where(mid, (u + a / 2.0) / a, out)
    ramp_hi = (u > lo) & (u < hi)
    out = np.where(ramp_hi, 1.0 - (hi - u) ** 2 / (2 * a * b), out)
    return out


def _weights(kind, delta, a, b):
    if kind == "strip":
        return _trapezoid_cdf(delta + 0.5, a, b) - _trapezoid_cdf(delta - 0.5, a, b)
    if kind == "line":
        ad = np.abs(delta)
        if b < _EPS:
            w = np.where(ad < a / 2.0, 1.0 / a, 0.0)
            return np.where(np.abs(ad - a / 2.0) <= 1e-9, 0.5 / a, w)
        lo, hi = (a - b) / 2.0, (a + b) / 2.0
        return np.where(ad <= lo, 1.0 / a, np.maximum(hi - ad, 0.0) / (a * b))
    if kind == "joseph":
        return np.maximum(1.0 - np.abs(delta) / a, 0.0) / a
    if kind == "pixel":
        return np.maximum(1.0 - np.abs(delta), 0.0)
    raise InvalidArgumentError(f"unknown kernel {kind!r}")


def _half_support(kind, a, b):
    return {"strip": (a + b) / 2.0 + 0.5, "line": (a + b) / 2.0,
            "joseph": a, "pixel": 1.0}[kind]


@lru_cache(maxsize=6)
def system_matrix(kind: str, g: Geometry) -> sparse.csr_matrix:
    """Matrix of shape ``(n_angles * n_det, N * N)`` with unit-pixel weights.

    Rows are ordered angle-major, columns follow the row-major image layout.
    Matrices are cached per ``(kind, geometry)``.
    """
    if kind not in KERNELS:
        raise InvalidArgumentError(f"unknown kernel {kind!r}; expected one of {KERNELS}")
    x, y = g.pixel_centers()
    x, y = x.ravel(), y.ravel()
    npix = x.size
    center = (g.n_det - 1) / 2.0
    pix = np.arange(npix, dtype=np.int32)
    blocks = []
    for theta in g.angles:
        c, s = np.cos(theta), np.sin(theta)
        a, b = max(abs(c), abs(s)), min(abs(c), abs(s))
        kc = x * c + y * s + center  # continuous bin coordinate of each pixel
        r = _half_support(kind, a, b)
        k0 = np.floor(kc - r).astype(np.int32)
        rows, cols, data = [], [], []
        for o in range(int(np.ceil(2 * r)) + 2):
            k = k0 + o
            valid = (k >= 0) & (k < g.n_det)
            w = _weights(kind, k[valid] - kc[valid], a, b)
            nz = w > 0
            rows.append(k[valid][nz])
            cols.append(pix[valid][nz])
            data.append(w[nz])
        blk = sparse.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(g.n_det, npix))
        blk.sum_duplicates()
        blocks.append(blk)
    return sparse.vstack(blocks, format="csr")


def project(kind: str, g: Geometry, image: np.ndarray) -> np.ndarray:
    """Apply the kernel's projection matrix to an ``(N, N)`` array."""
    return (system_matrix(kind, g) @ image.ravel()).reshape(g.n_angles, g.n_det)


def backproject_raw(kind: str, g: Geometry, sino: np.ndarray) -> np.ndarray:
    """Apply the transpose of the kernel's matrix (no angular weight)."""
    n = g.vol_size
    return (system_matrix(kind, g).T @ sino.ravel()).reshape(n, n)


def clear_cache():
    system_matrix.cache_clear()
