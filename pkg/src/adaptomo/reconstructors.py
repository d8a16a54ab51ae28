"""Forward projector, five black-box reconstruction implementations, and SIRT.

The five implementations share one contract: they receive an already
filtered sinogram and return an image.  Four backproject in real space with
different kernels; ``fouriergrid`` backprojects through the Fourier domain.
All of them apply the angular quadrature weight ``pi / n_angles``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import gridding, projectors
from .errors import InvalidArgumentError
from .raster import Geometry, ImageGrid, Sinogram

__all__ = [
    "KernelKind",
    "ReconConventions",
    "Reconstructor",
    "forward_project",
    "backproject",
    "reconstruct",
    "fbp",
    "sirt",
    "IMPLEMENTATIONS",
]


class KernelKind(enum.Enum):
    STRIP = "strip"
    LINE = "line"
    JOSEPH = "joseph"
    PIXEL = "pixel"
    FOURIERGRID = "fouriergrid"

    @classmethod
    def parse(cls, name) -> "KernelKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise InvalidArgumentError(
                f"unknown implementation {name!r}; expected one of "
                f"{[k.value for k in cls]}") from None


IMPLEMENTATIONS = tuple(k.value for k in KernelKind)


@dataclass(frozen=True)
class ReconConventions:
    """Implementation conventions.

    ``zero_dc`` makes the implementation's filtering step force the
    zero-frequency filter response to 0; ``grid_pad`` is the oversampling of
    the Fourier grid.  Both only affect ``fouriergrid``.
    """

    zero_dc: bool = True
    grid_pad: int = 2

    def __post_init__(self):
        if self.grid_pad not in (1, 2):
            raise InvalidArgumentError("grid_pad must be 1 or 2")


@dataclass(frozen=True)
class Reconstructor:
    """A reconstruction implementation bound to a geometry."""

    kind: KernelKind
    geometry: Geometry
    conventions: ReconConventions = field(default_factory=ReconConventions)

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind.parse(self.kind))

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def forces_zero_dc(self) -> bool:
        return self.kind is KernelKind.FOURIERGRID and self.conventions.zero_dc

    def __call__(self, q: Sinogram) -> ImageGrid:
        return reconstruct(self, q)


def _check_geometry(q: Sinogram, g: Geometry):
    if q.geometry != g:
        raise InvalidArgumentError("sinogram geometry does not match reconstructor geometry")


def forward_project(x: ImageGrid, g: Geometry) -> Sinogram:
    """Strip-kernel projection: area of each pixel inside each detector strip."""
    if x.n != g.vol_size:
        raise InvalidArgumentError(f"image size {x.n} != geometry vol_size {g.vol_size}")
    return Sinogram(g, projectors.project("strip", g, x.values) * g.det_spacing)


def backproject(kind, q: Sinogram) -> ImageGrid:
    """Real-space backprojection with the named kernel, scaled by ``pi / n_angles``."""
    kind = KernelKind.parse(kind)
    if kind is KernelKind.FOURIERGRID:
        raise InvalidArgumentError("fouriergrid is not a real-space backprojector")
    g = q.geometry
    img = projectors.backproject_raw(kind.value, g, q.values) * (np.pi / g.n_angles)
    return ImageGrid(g.vol_size, img)


def reconstruct(rec: Reconstructor, q_filtered: Sinogram) -> ImageGrid:
    """Run implementation ``rec`` on an already filtered sinogram."""
    _check_geometry(q_filtered, rec.geometry)
    if rec.kind is KernelKind.FOURIERGRID:
        img = gridding.fourier_backproject(
            rec.geometry, q_filtered.values, grid_pad=rec.conventions.grid_pad)
        return ImageGrid(rec.geometry.vol_size, img)
    return backproject(rec.kind, q_filtered)


def fbp(rec: Reconstructor, p: Sinogram, h) -> ImageGrid:
    """Filtered backprojection: ``reconstruct(rec, apply_filter(p, h))``.

    The filtering step follows the implementation's DC convention.
    """
    from .filterbank import apply_filter

    if rec.forces_zero_dc and not h.zero_dc:
        h = h.with_zero_dc()
    return reconstruct(rec, apply_filter(p, h))


def sirt(p: Sinogram, g: Geometry, iterations: int, *, callback=None) -> ImageGrid:
    """SIRT with the strip projector.

    ``x <- x + C W^T R (p - W x)`` with ``R``, ``C`` the inverse row and
    column sums of ``W``; empty rows or columns get weight 0.  ``callback``,
    if given, is called with ``(k, x)`` after every iteration.
    """
    if iterations < 1:
        raise InvalidArgumentError("iterations must be >= 1")
    _check_geometry(p, g)
    W = projectors.system_matrix("strip", g)
    Wt = W.T
    row = np.asarray(W.sum(axis=1)).ravel()
    col = np.asarray(W.sum(axis=0)).ravel()
    R = np.divide(1.0, row, out=np.zeros_like(row), where=row > 0)
    C = np.divide(1.0, col, out=np.zeros_like(col), where=col > 0)
    b = p.values.ravel() / g.det_spacing
    x = np.zeros(W.shape[1])
    for k in range(iterations):
        x += C * (Wt @ (R * (b - W @ x)))
        if callback is not None:
            callback(k + 1, x.reshape(g.vol_size, g.vol_size))
    return ImageGrid(g.vol_size, x.reshape(g.vol_size, g.vol_size))
