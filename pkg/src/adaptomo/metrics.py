"""Reconstruction quality and variability metrics.

Variability across implementations is measured per pixel with the population
standard deviation; accuracy against a ground truth uses RMSE and squared
bias; segmentation quality uses Otsu thresholding followed by F1 and Jaccard.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError
from .raster import ImageGrid

__all__ = [
    "ReconSet",
    "Histogram",
    "pixelwise_std",
    "mean_std",
    "rmse",
    "squared_bias",
    "otsu_threshold",
    "segment",
    "f1_jaccard",
    "std_histogram",
    "OTSU_BINS",
]

OTSU_BINS = 256


@dataclass(frozen=True, eq=False)
class ReconSet:
    """Reconstructions of the same data by different implementations."""

    members: tuple = field(default_factory=tuple)  # ((label, ImageGrid), ...)

    def __post_init__(self):
        members = tuple((str(lbl), img) for lbl, img in self.members)
        sizes = {img.n for _, img in members}
        if len(sizes) > 1:
            raise InvalidArgumentError(f"members have different sizes {sorted(sizes)}")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_dict(cls, images: dict) -> "ReconSet":
        return cls(tuple(images.items()))

    def __len__(self):
        return len(self.members)

    @property
    def labels(self) -> list[str]:
        return [lbl for lbl, _ in self.members]

    def stack(self) -> np.ndarray:
        """Member images as an ``(N_I, N, N)`` array."""
        return np.stack([img.values for _, img in self.members])


@dataclass(frozen=True, eq=False)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def mode_bin(self) -> int:
        """Index of the most populated bin (lowest index on ties)."""
        return int(np.argmax(self.counts))

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def _same_size(a: ImageGrid, b: ImageGrid):
    if a.n != b.n:
        raise InvalidArgumentError(f"image sizes differ: {a.n} vs {b.n}")


def pixelwise_std(s: ReconSet) -> ImageGrid:
    """Per-pixel population standard deviation (divisor ``N_I``) across the set."""
    if len(s) < 2:
        raise InvalidArgumentError("pixelwise_std needs at least two members")
    v = s.stack()
    d = v - v[0]  # centring on a member keeps identical members exactly at 0
    return ImageGrid(s.members[0][1].n, np.sqrt(np.mean((d - d.mean(axis=0)) ** 2, axis=0)))


def mean_std(sigma: ImageGrid) -> float:
    return float(np.mean(sigma.values))


def rmse(r: ImageGrid, gt: ImageGrid) -> float:
    _same_size(r, gt)
    return float(np.sqrt(np.mean((r.values - gt.values) ** 2)))


def squared_bias(s: ReconSet, gt: ImageGrid) -> tuple[ImageGrid, float]:
    """Map ``(mean_I r_I - gt)^2`` and its mean over the slice.

    A singleton set is accepted here so that ``rmse(r, gt)**2`` can be
    compared with ``squared_bias({r}, gt)``.
    """
    if len(s) < 1:
        raise InvalidArgumentError("empty reconstruction set")
    _same_size(s.members[0][1], gt)
    m = (s.stack().mean(axis=0) - gt.values) ** 2
    return ImageGrid(gt.n, m), float(m.mean())


def otsu_threshold(r: ImageGrid, n_bins: int = OTSU_BINS) -> float:
    """Otsu threshold over a ``n_bins`` histogram spanning ``[min, max]``.

    Returns the centre of the bin ``k`` that maximises the between-class
    variance when bins ``0..k`` form the lower class.  Ties go to the lower
    bin.  Pixels strictly above the threshold are foreground.
    """
    v = r.values.ravel()
    lo, hi = float(v.min()), float(v.max())
    if not hi > lo:
        raise DegenerateInputError("Otsu threshold of a constant image is undefined")
    counts, edges = np.histogram(v, bins=n_bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    p = counts / counts.sum()
    w0 = np.cumsum(p)
    mu = np.cumsum(p * centers)
    w1 = 1.0 - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu[-1] * w0 - mu) ** 2 / (w0 * w1)
    between = np.where((w0 > 0) & (w1 > 1e-15), between, -np.inf)
    return float(centers[int(np.argmax(between))])


def segment(r: ImageGrid, threshold: float | None = None) -> ImageGrid:
    """Binary image ``r > threshold`` (Otsu by default)."""
    t = otsu_threshold(r) if threshold is None else threshold
    return ImageGrid(r.n, (r.values > t).astype(np.float64))


def _as_bool(img: ImageGrid, name: str) -> np.ndarray:
    v = img.values
    if not np.all((v == 0) | (v == 1)):
        raise InvalidArgumentError(f"{name} must be {{0,1}}-valued")
    return v.astype(bool)


def f1_jaccard(seg: ImageGrid, gt: ImageGrid) -> tuple[float, float]:
    """F1 score and Jaccard index of a binary segmentation.

    Two empty sets score 1 on both.
    """
    _same_size(seg, gt)
    a, b = _as_bool(seg, "seg"), _as_bool(gt, "gt")
    tp = int(np.count_nonzero(a & b))
    fp = int(np.count_nonzero(a & ~b))
    fn = int(np.count_nonzero(~a & b))
    union = tp + fp + fn
    if union == 0:
        return 1.0, 1.0
    return tp / (tp + 0.5 * (fp + fn)), tp / union


def std_histogram(sigma: ImageGrid, n_bins: int = 100) -> Histogram:
    """Histogram with uniform bins over ``[0, max(sigma)]``; the last bin is closed."""
    if n_bins < 1:
        raise InvalidArgumentError("n_bins must be >= 1")
    v = sigma.values.ravel()
    top = float(v.max()) if v.size else 0.0
    if not top > 0:
        top = 1.0  # all-zero map: any positive range puts everything in bin 0
    counts, edges = np.histogram(v, bins=n_bins, range=(0.0, top))
    return Histogram(edges, counts.astype(np.int64))
