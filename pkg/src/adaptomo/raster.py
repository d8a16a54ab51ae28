"""Parallel-beam geometry, raster containers and their on-disk format.

Conventions used by every kernel in the package:

* detector pixel ``k`` is centred at ``t_k = (k - (n_det - 1) / 2) * det_spacing``;
* image pixel ``(i, j)`` is centred at ``x = j - (n - 1) / 2``, ``y = (n - 1) / 2 - i``
  (in units of the pixel size, which equals the detector spacing);
* a ray ``(theta, t)`` is the line ``x cos(theta) + y sin(theta) = t``.

Rasters are written as raw little-endian float32 (``<name>.f32``) with a JSON
sidecar (``<name>.json``).  All arithmetic happens in float64.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import FormatError, InvalidArgumentError

__all__ = [
    "Geometry",
    "Sinogram",
    "ImageGrid",
    "make_geometry",
    "write_raster",
    "read_raster",
]


@dataclass(frozen=True)
class Geometry:
    """Parallel-beam acquisition geometry.

    Parameters
    ----------
    n_angles : int
        Number of projection angles.
    n_det : int
        Number of detector pixels.
    angles : tuple of float
        Projection angles in radians, strictly increasing in ``[0, pi)``.
    vol_size : int
        Side of the square reconstruction grid.
    det_spacing : float, optional
        Detector pixel size; the image pixel size is the same.
    """

    n_angles: int
    n_det: int
    angles: tuple
    vol_size: int
    det_spacing: float = 1.0

    def __post_init__(self):
        for name in ("n_angles", "n_det", "vol_size"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "angles", angles)
        if len(angles) != self.n_angles:
            raise InvalidArgumentError(
                f"expected {self.n_angles} angles, got {len(angles)}")
        if not all(math.isfinite(a) and 0.0 <= a < math.pi for a in angles):
            raise InvalidArgumentError("angles must lie in [0, pi)")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise InvalidArgumentError("angles must be strictly increasing")
        if not (math.isfinite(self.det_spacing) and self.det_spacing > 0):
            raise InvalidArgumentError("det_spacing must be positive")
        object.__setattr__(self, "det_spacing", float(self.det_spacing))
        if self.n_det < self.vol_size:
            raise InvalidArgumentError(
                f"n_det ({self.n_det}) must be >= vol_size ({self.vol_size})")

    @property
    def n_proj(self) -> int:
        return self.n_angles * self.n_det

    @property
    def angle_array(self) -> np.ndarray:
        return np.asarray(self.angles, dtype=np.float64)

    def det_positions(self) -> np.ndarray:
        """Detector pixel centres ``t_k`` in length units."""
        k = np.arange(self.n_det, dtype=np.float64)
        return (k - (self.n_det - 1) / 2.0) * self.det_spacing

    def pixel_centers(self):
        """Return ``(x, y)`` coordinate grids of shape ``(N, N)`` in pixel units."""
        n = self.vol_size
        c = (n - 1) / 2.0
        idx = np.arange(n, dtype=np.float64)
        x, y = np.meshgrid(idx - c, c - idx)
        return x, y

    def subsample(self, m: int) -> "Geometry":
        """Keep every ``m``-th angle starting at index 0."""
        if m < 1:
            raise InvalidArgumentError("subsampling interval must be >= 1")
        angles = self.angles[::m]
        return Geometry(len(angles), self.n_det, angles, self.vol_size, self.det_spacing)


def make_geometry(n_angles: int, n_det: int, vol_size: int, det_spacing: float = 1.0) -> Geometry:
    """Geometry with uniform angles ``i * pi / n_angles``."""
    if n_angles is None or int(n_angles) < 1:
        raise InvalidArgumentError(f"n_angles must be >= 1, got {n_angles!r}")
    angles = tuple(i * math.pi / n_angles for i in range(int(n_angles)))
    return Geometry(int(n_angles), n_det, angles, vol_size, det_spacing)


def _frozen(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if shape is not None and arr.shape != shape:
        raise InvalidArgumentError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("raster values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Projection data, one row per angle."""

    geometry: Geometry
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = self.geometry
        object.__setattr__(self, "values", _frozen(self.values, (g.n_angles, g.n_det)))

    @property
    def shape(self):
        return self.values.shape

    def with_values(self, values) -> "Sinogram":
        return Sinogram(self.geometry, values)

    def subsample(self, m: int) -> "Sinogram":
        return Sinogram(self.geometry.subsample(m), self.values[::m])


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """Square image raster."""

    n: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError("image size must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "values", _frozen(self.values, (self.n, self.n)))

    @classmethod
    def from_array(cls, values) -> "ImageGrid":
        values = np.asarray(values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidArgumentError(f"image must be square, got shape {values.shape}")
        return cls(values.shape[0], values)


Raster = Union[Sinogram, ImageGrid]


def _paths(path) -> tuple:
    path = Path(path)
    if path.suffix in (".f32", ".json"):
        path = path.with_suffix("")
    return path.with_name(path.name + ".f32"), path.with_name(path.name + ".json")


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_raster(path, obj: Raster) -> None:
    """Write ``obj`` to ``<path>.f32`` and ``<path>.json``.

    Values are stored as float32, so the round trip is bit-exact only for
    rasters whose values are float32-representable.
    """
    data_path, meta_path = _paths(path)
    if not data_path.parent.is_dir():
        raise FileNotFoundError(f"directory does not exist: {data_path.parent}")
    values = np.ascontiguousarray(obj.values, dtype="<f4")
    rows, cols = values.shape
    if isinstance(obj, Sinogram):
        g = obj.geometry
        meta = {
            "kind": "sinogram",
            "rows": rows,
            "cols": cols,
            "angles": [format(a, ".17g") for a in g.angles],
            "vol_size": g.vol_size,
            "det_spacing": format(g.det_spacing, ".17g"),
        }
    elif isinstance(obj, ImageGrid):
        meta = {"kind": "image", "rows": rows, "cols": cols}
    else:
        raise InvalidArgumentError(f"cannot write object of type {type(obj).__name__}")
    _atomic_write(data_path, values.tobytes())
    _atomic_write(meta_path, (json.dumps(meta, indent=1) + "\n").encode())


def read_raster(path) -> Raster:
    """Read a raster written by :func:`write_raster`."""
    data_path, meta_path = _paths(path)
    try:
        meta = json.loads(meta_path.read_text())
        rows, cols, kind = int(meta["rows"]), int(meta["cols"]), meta["kind"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{meta_path}: malformed sidecar ({exc})") from exc
    raw = data_path.read_bytes()
    if len(raw) != 4 * rows * cols:
        raise FormatError(
            f"{data_path}: {len(raw)} bytes does not match {rows}x{cols} float32 raster")
    values = np.frombuffer(raw, dtype="<f4").reshape(rows, cols).astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise FormatError(f"{data_path}: non-finite values")
    try:
        if kind == "image":
            if rows != cols:
                raise FormatError(f"{meta_path}: image must be square")
            return ImageGrid(rows, values)
        if kind == "sinogram":
            angles = [float(a) for a in meta["angles"]]
            if len(angles) != rows:
                raise FormatError(f"{meta_path}: {len(angles)} angles for {rows} rows")
            g = Geometry(rows, cols, tuple(angles), int(meta.get("vol_size", cols)),
                         float(meta.get("det_spacing", 1.0)))
            return Sinogram(g, values)
    except InvalidArgumentError as exc:
        raise FormatError(f"{meta_path}: {exc}") from exc
    raise FormatError(f"{meta_path}: unknown kind {kind!r}")
