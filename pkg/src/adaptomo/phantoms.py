"""Foam phantoms with analytic projections, simple test images and data corruption.

Foam coordinates are normalised: the reconstruction half-width is 1.  A
foam is a unit-density cylinder with non-overlapping spherical voids; a slice
at height ``z`` is a disc with circular holes, whose line integrals are
computed in closed form.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .errors import InvalidArgumentError, OutOfRangeError, PackingError
from .raster import Geometry, ImageGrid, Sinogram

__all__ = [
    "FoamSpec",
    "FoamPhantom",
    "Slice2D",
    "generate_foam",
    "slice_phantom",
    "analytic_sinogram",
    "rasterize_slice",
    "single_pixel_phantom",
    "add_poisson_noise",
    "add_zingers",
    "save_foam",
    "load_foam",
    "MAX_PACKING_ATTEMPTS",
]

MAX_PACKING_ATTEMPTS = 10_000_000


@dataclass(frozen=True)
class FoamSpec:
    """Parameters of a foam phantom (lengths in units of the half-width)."""

    n_spheres: int = 1000
    cylinder_radius: float = 0.95
    r_min: float = 0.005
    r_max: float = 0.08
    z_extent: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_spheres < 0:
            raise InvalidArgumentError("n_spheres must be >= 0")
        if not 0 < self.cylinder_radius <= 1:
            raise InvalidArgumentError("cylinder_radius must lie in (0, 1]")
        if not 0 < self.r_min <= self.r_max < self.cylinder_radius:
            raise InvalidArgumentError("need 0 < r_min <= r_max < cylinder_radius")
        if not self.z_extent > self.r_max:
            raise InvalidArgumentError("z_extent must exceed r_max")
        if not 0 <= self.seed < 2**64:
            raise InvalidArgumentError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class FoamPhantom:
    spec: FoamSpec
    spheres: np.ndarray = field(repr=False)  # (n, 4): cx, cy, cz, r

    def __len__(self):
        return len(self.spheres)


@dataclass(frozen=True, eq=False)
class Slice2D:
    disc_radius: float
    holes: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)), repr=False)


def generate_foam(spec: FoamSpec) -> FoamPhantom:
    """Place ``spec.n_spheres`` non-overlapping spheres by seeded rejection sampling.

    Candidates are drawn in batches from ``numpy.random.default_rng(spec.seed)``
    and accepted in draw order, so the result depends only on the spec.
    """
    rng = np.random.default_rng(spec.seed)
    R, Z = spec.cylinder_radius, spec.z_extent
    placed = np.empty((spec.n_spheres, 4))
    n = attempts = 0
    batch = 4096
    while n < spec.n_spheres:
        r = rng.uniform(spec.r_min, spec.r_max, batch)
        cxy = rng.uniform(-1.0, 1.0, (batch, 2)) * (R - r)[:, None]
        cz = rng.uniform(-1.0, 1.0, batch) * (Z - r)
        inside = (np.hypot(cxy[:, 0], cxy[:, 1]) + r < R) & (np.abs(cz) + r < Z)
        for b in range(batch):
            attempts += 1
            if attempts > MAX_PACKING_ATTEMPTS:
                raise PackingError(
                    f"placed {n} of {spec.n_spheres} spheres in {MAX_PACKING_ATTEMPTS} attempts")
            if not inside[b]:
                continue
            cand = (cxy[b, 0], cxy[b, 1], cz[b], r[b])
            if n:
                d2 = ((placed[:n, 0] - cand[0]) ** 2 + (placed[:n, 1] - cand[1]) ** 2
                      + (placed[:n, 2] - cand[2]) ** 2)
                if np.any(d2 < (placed[:n, 3] + cand[3]) ** 2):
                    continue
            placed[n] = cand
            n += 1
            if n == spec.n_spheres:
                break
    placed.flags.writeable = False
    return FoamPhantom(spec, placed)


def slice_phantom(foam: FoamPhantom, z: float) -> Slice2D:
    """Cross-section of the foam at height ``z``."""
    if not abs(z) < foam.spec.z_extent:
        raise OutOfRangeError(f"|z| must be < {foam.spec.z_extent}, got {z}")
    s = foam.spheres
    dz = z - s[:, 2]
    cut = np.abs(dz) < s[:, 3]
    holes = np.column_stack([s[cut, 0], s[cut, 1], np.sqrt(s[cut, 3] ** 2 - dz[cut] ** 2)])
    return Slice2D(foam.spec.cylinder_radius, holes)


def _chords(t, cx, cy, r, cos_t, sin_t):
    # chord lengths of lines x cos + y sin = t through circles; t (m,), circles (h,)
    d = t[:, None] - (cx * cos_t + cy * sin_t)[None, :]
    return 2.0 * np.sqrt(np.maximum(r[None, :] ** 2 - d ** 2, 0.0))


def analytic_sinogram(slc: Slice2D, g: Geometry, supersampling: int = 4) -> Sinogram:
    """Exact line integrals of a slice, averaged over sub-rays within each detector pixel.

    Sub-ray ``j`` of ``n`` sits at offset ``((j + 0.5) / n - 0.5) * det_spacing``
    from the pixel centre.
    """
    n = int(supersampling)
    if n < 1:
        raise InvalidArgumentError("supersampling must be >= 1")
    scale = g.vol_size * g.det_spacing / 2.0  # normalised -> length units
    offsets = ((np.arange(n) + 0.5) / n - 0.5) * g.det_spacing
    t = (g.det_positions()[:, None] + offsets[None, :]).ravel() / scale
    holes = np.asarray(slc.holes, dtype=np.float64).reshape(-1, 3)
    disc = np.array([[0.0, 0.0, slc.disc_radius]])
    out = np.empty((g.n_angles, g.n_det))
    for a, theta in enumerate(g.angles):
        c, s = np.cos(theta), np.sin(theta)
        line = _chords(t, disc[:, 0], disc[:, 1], disc[:, 2], c, s)[:, 0]
        if len(holes):
            line = line - _chords(t, holes[:, 0], holes[:, 1], holes[:, 2], c, s).sum(axis=1)
        out[a] = line.reshape(g.n_det, n).mean(axis=1) * scale
    return Sinogram(g, out)


def rasterize_slice(slc: Slice2D, n: int, subpixel: int = 8) -> ImageGrid:
    """Area fraction of material per pixel, by ``subpixel**2`` midpoint samples."""
    if n < 1 or subpixel < 1:
        raise InvalidArgumentError("n and subpixel must be >= 1")
    m = n * subpixel
    half = n / 2.0
    coords = ((np.arange(m) + 0.5) / subpixel - half) / half  # normalised
    xs, ys = coords, -coords  # fine column -> x, fine row -> y
    fine = (xs[None, :] ** 2 + ys[:, None] ** 2) < slc.disc_radius ** 2
    step = 1.0 / (subpixel * half)
    for cx, cy, r in np.asarray(slc.holes).reshape(-1, 3):
        c0 = max(int(np.floor((cx - r - xs[0]) / step)), 0)
        c1 = min(int(np.ceil((cx + r - xs[0]) / step)) + 1, m)
        r0 = max(int(np.floor((ys[0] - (cy + r)) / step)), 0)
        r1 = min(int(np.ceil((ys[0] - (cy - r)) / step)) + 1, m)
        if c0 >= c1 or r0 >= r1:
            continue
        inside = ((xs[None, c0:c1] - cx) ** 2 + (ys[r0:r1, None] - cy) ** 2) < r * r
        fine[r0:r1, c0:c1] &= ~inside
    img = fine.reshape(n, subpixel, n, subpixel).mean(axis=(1, 3))
    return ImageGrid(n, img)


def single_pixel_phantom(n: int) -> ImageGrid:
    """Zero image of odd size ``n`` with a single unit pixel at the centre."""
    if n < 1 or n % 2 == 0:
        raise InvalidArgumentError(f"single-pixel phantom needs odd n, got {n}")
    img = np.zeros((n, n))
    img[n // 2, n // 2] = 1.0
    return ImageGrid(n, img)


_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    # SplitMix64 finaliser (Steele, Lea & Flood 2014); uint64 arithmetic wraps.
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def pixel_uniforms(seed: int, shape) -> np.ndarray:
    """Uniform variates in (0, 1), one per pixel, keyed by ``(seed, row, col)``.

    Each value is a SplitMix64 hash of the key, so it does not depend on the
    order in which pixels are visited.
    """
    rows, cols = shape
    r = np.arange(rows, dtype=np.uint64)[:, None]
    c = np.arange(cols, dtype=np.uint64)[None, :]
    with np.errstate(over="ignore"):
        h = _splitmix64(np.full((1, 1), seed, dtype=np.uint64))
        h = _splitmix64(h ^ r)
        h = _splitmix64(h ^ c)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def add_poisson_noise(p: Sinogram, flux: float, seed: int, scale: float | None = None) -> Sinogram:
    """Simulate photon counting noise.

    Counts ``k ~ Poisson(flux * exp(-p / scale))`` are clamped to at least 1
    and converted back as ``-ln(k / flux) * scale``.  ``scale`` defaults to 1;
    pass ``p.values.max()`` to normalise the thickest ray to unit attenuation.
    """
    if not flux > 0:
        raise InvalidArgumentError("flux must be positive")
    if np.any(p.values < 0):
        raise InvalidArgumentError("sinogram values must be non-negative for Poisson noise")
    scale = 1.0 if scale is None or scale <= 0 else float(scale)
    lam = flux * np.exp(-p.values / scale)
    u = pixel_uniforms(seed, p.shape)
    k = np.maximum(stats.poisson.ppf(u, lam), 1.0)
    return p.with_values(-np.log(k / flux) * scale)


def add_zingers(p: Sinogram, fraction: float, amplitude_factor: float, seed: int) -> Sinogram:
    """Set ``floor(fraction * N_p)`` distinct random pixels to ``amplitude_factor * max(p)``."""
    if not 0.0 <= fraction <= 1.0:
        raise InvalidArgumentError("fraction must lie in [0, 1]")
    values = np.array(p.values)
    count = int(np.floor(fraction * values.size))
    if count == 0:
        return p
    rng = np.random.default_rng(seed)
    idx = rng.choice(values.size, size=count, replace=False)
    values.flat[idx] = amplitude_factor * p.values.max()
    return p.with_values(values)


def save_foam(path, foam: FoamPhantom) -> None:
    doc = {
        "spec": asdict(foam.spec),
        "spheres": [{"cx": float(cx), "cy": float(cy), "cz": float(cz), "r": float(r)}
                    for cx, cy, cz, r in foam.spheres],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_foam(path) -> FoamPhantom:
    with open(path) as fh:
        doc = json.load(fh)
    spheres = np.array([[s["cx"], s["cy"], s["cz"], s["r"]] for s in doc["spheres"]],
                       dtype=np.float64).reshape(-1, 4)
    return FoamPhantom(FoamSpec(**doc["spec"]), spheres)
