"""Detector-space filters, sinogram filtering, and implementation-adapted filters.

A :class:`FilterSpec` is an even real-space filter stored in one of two ways:

``expbin``
    coefficients of exponentially binned, piecewise-constant symmetric
    indicators covering offsets ``0 .. n_det // 2`` from the detector centre;
``dense``
    the real half-spectrum itself, sampled at ``k / pad`` for
    ``k = 0 .. pad / 2`` (``pad = 2 * nextpow2(n_det)``).

Filtering zero-pads each projection row to ``pad`` samples, multiplies its
FFT by the half-spectrum and crops back to ``n_det``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import FormatError, InvalidArgumentError, NumericalError
from .raster import ImageGrid, Sinogram
from .reconstructors import Reconstructor, forward_project, reconstruct

__all__ = [
    "BasisSet",
    "FilterSpec",
    "expbin_basis",
    "default_n_l",
    "filter_pad",
    "standard_filter",
    "ramlak_kernel",
    "apply_filter",
    "filter_real_space",
    "filter_matrix",
    "projection_residual",
    "compute_adapted_filter",
    "compute_reference_filter",
    "write_filter",
    "read_filter",
]

RCOND = 1e-10


def filter_pad(n_det: int) -> int:
    """Padded row length: twice the next power of two, so that no wrap-around occurs."""
    return 2 * (1 << max(int(n_det) - 1, 0).bit_length())


def default_n_l(n_det: int) -> int:
    return max(2, n_det // 16)


@dataclass(frozen=True)
class BasisSet:
    """Exponential bins over detector offsets ``0 .. n_det // 2``.

    ``bins`` holds ``(start_offset, width)`` pairs; each basis vector is the
    indicator of a bin and its mirror image.
    """

    n_det: int
    n_l: int
    bins: tuple

    @property
    def n_b(self) -> int:
        return len(self.bins)

    def offset_index(self) -> np.ndarray:
        """Bin index of every offset ``0 .. n_det // 2``."""
        idx = np.empty(self.n_det // 2 + 1, dtype=np.int64)
        for j, (start, width) in enumerate(self.bins):
            idx[start:start + width] = j
        return idx

    def kernel(self, coeffs) -> np.ndarray:
        """One-sided real-space kernel ``h(0 .. n_det // 2)`` for the given coefficients."""
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (self.n_b,):
            raise InvalidArgumentError(f"expected {self.n_b} coefficients, got {coeffs.shape}")
        return coeffs[self.offset_index()]

    def vector(self, j: int, zero_dc: bool = False) -> "FilterSpec":
        c = np.zeros(self.n_b)
        c[j] = 1.0
        return FilterSpec(self.n_det, "expbin", c, n_l=self.n_l, zero_dc=zero_dc)


@lru_cache(maxsize=64)
def expbin_basis(n_det: int, n_l: int) -> BasisSet:
    """Exponentially binned basis: ``n_l`` unit bins, then widths ``1, 2, 4, ...``.

    Bin ``i`` has width 1 for ``i < n_l`` and ``2 ** (i - n_l)`` otherwise; the
    last bin is truncated at offset ``n_det // 2``.
    """
    if not (isinstance(n_det, (int, np.integer)) and n_det >= 2):
        raise InvalidArgumentError("n_det must be an integer >= 2")
    if not (isinstance(n_l, (int, np.integer)) and 1 <= n_l <= n_det / 2):
        raise InvalidArgumentError(f"n_l must lie in [1, n_det / 2], got {n_l}")
    last = n_det // 2
    bins, start, i = [], 0, 0
    while start <= last:
        width = 1 if i < n_l else 2 ** (i - n_l)
        width = min(width, last + 1 - start)
        bins.append((start, width))
        start += width
        i += 1
    return BasisSet(int(n_det), int(n_l), tuple(bins))


@dataclass(frozen=True, eq=False)
class FilterSpec:
    """Even, angle-independent detector filter.

    Parameters
    ----------
    n_det : int
        Detector length the filter applies to.
    basis : {"expbin", "dense"}
        Meaning of ``coeffs`` (see module docstring).
    coeffs : array_like
        ``n_b`` bin values, or ``pad // 2 + 1`` spectrum samples.
    n_l : int, optional
        Number of unit bins; required for ``expbin``.
    zero_dc : bool
        Force the zero-frequency response to 0 when filtering.
    provenance : dict
        Free-form metadata written to filter files.
    """

    n_det: int
    basis: str
    coeffs: np.ndarray = field(repr=False)
    n_l: int | None = None
    zero_dc: bool = False
    provenance: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.basis not in ("expbin", "dense"):
            raise InvalidArgumentError(f"unknown basis type {self.basis!r}")
        coeffs = np.array(self.coeffs, dtype=np.float64)
        if self.basis == "expbin":
            n_b = expbin_basis(self.n_det, self.n_l).n_b
        else:
            n_b = self.pad // 2 + 1
        if coeffs.shape != (n_b,):
            raise InvalidArgumentError(
                f"{self.basis} filter for n_det={self.n_det} needs {n_b} coefficients, "
                f"got shape {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise InvalidArgumentError("filter coefficients must be finite")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def pad(self) -> int:
        return filter_pad(self.n_det)

    @property
    def basis_set(self) -> BasisSet | None:
        return expbin_basis(self.n_det, self.n_l) if self.basis == "expbin" else None

    @property
    def fourier(self) -> np.ndarray:
        """Real half-spectrum at frequencies ``k / pad``, ``k = 0 .. pad / 2``."""
        if self.basis == "dense":
            spec = np.array(self.coeffs)
        else:
            h = self.basis_set.kernel(self.coeffs)
            full = np.zeros(self.pad)
            full[:h.size] = h
            full[self.pad - h.size + 1:] = h[:0:-1]
            spec = np.fft.rfft(full).real
        if self.zero_dc:
            spec[0] = 0.0
        return spec

    def real_space(self) -> np.ndarray:
        """Circular real-space kernel of length ``pad`` (offset 0 at index 0)."""
        return np.fft.irfft(self.fourier, n=self.pad)

    def with_zero_dc(self, zero_dc: bool = True) -> "FilterSpec":
        return FilterSpec(self.n_det, self.basis, self.coeffs, n_l=self.n_l, zero_dc=zero_dc,
                          provenance=dict(self.provenance))

    def to_dense(self) -> "FilterSpec":
        return FilterSpec(self.n_det, "dense", self.fourier, zero_dc=self.zero_dc,
                          provenance=dict(self.provenance))

    def _combine(self, other, a, b):
        if not isinstance(other, FilterSpec) or other.n_det != self.n_det:
            return NotImplemented
        if (self.basis == other.basis == "expbin" and self.n_l == other.n_l
                and self.zero_dc == other.zero_dc):
            return FilterSpec(self.n_det, "expbin", a * self.coeffs + b * other.coeffs,
                              n_l=self.n_l, zero_dc=self.zero_dc)
        return FilterSpec(self.n_det, "dense", a * self.fourier + b * other.fourier)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, alpha):
        if not np.isscalar(alpha):
            return NotImplemented
        return FilterSpec(self.n_det, self.basis, float(alpha) * self.coeffs, n_l=self.n_l,
                          zero_dc=self.zero_dc)

    __rmul__ = __mul__


def standard_filter(name: str, n_det: int) -> FilterSpec:
    """Ram-Lak (``|w|``) or Shepp-Logan (``|w| sinc(w)``) as a dense spectrum.

    ``w`` is in cycles per detector pixel, so the Nyquist frequency is 1/2 and
    the Shepp-Logan window ``sinc(w / (2 * 1/2))`` equals ``2/pi`` there.
    """
    if n_det < 2:
        raise InvalidArgumentError("n_det must be >= 2")
    pad = filter_pad(n_det)
    w = np.arange(pad // 2 + 1) / pad
    key = name.lower().replace("_", "-")
    if key in ("ram-lak", "ramlak", "ramp"):
        spec = np.abs(w)
    elif key in ("shepp-logan", "shepplogan"):
        spec = np.abs(w) * np.sinc(w)
    else:
        raise InvalidArgumentError(f"unknown standard filter {name!r}")
    return FilterSpec(n_det, "dense", spec, provenance={"standard": key})


def ramlak_kernel(n_taps: int) -> np.ndarray:
    """Closed-form band-limited ramp kernel ``h(0 .. n_taps - 1)`` for unit spacing."""
    n = np.arange(n_taps)
    h = np.zeros(n_taps)
    h[0] = 0.25
    odd = n % 2 == 1
    h[odd] = -1.0 / (np.pi ** 2 * n[odd] ** 2)
    return h


def _check(p: Sinogram, h: FilterSpec):
    if h.n_det != p.geometry.n_det:
        raise InvalidArgumentError(
            f"filter is for n_det={h.n_det}, sinogram has n_det={p.geometry.n_det}")


def apply_filter(p: Sinogram, h: FilterSpec) -> Sinogram:
    """Filter every projection row in the Fourier domain (zero-padded to ``h.pad``)."""
    _check(p, h)
    n = p.geometry.n_det
    rows = np.fft.rfft(p.values, n=h.pad, axis=1) * h.fourier[None, :]
    out = np.fft.irfft(rows, n=h.pad, axis=1)[:, :n]
    return p.with_values(out / p.geometry.det_spacing)


def filter_real_space(p: Sinogram, kernel) -> Sinogram:
    """Direct linear convolution of each row with an even kernel ``h(0 .. K-1)``."""
    kernel = np.asarray(kernel, dtype=np.float64)
    full = np.concatenate([kernel[:0:-1], kernel])
    K = kernel.size
    out = np.empty_like(p.values)
    for a, row in enumerate(p.values):
        out[a] = np.convolve(row, full)[K - 1:K - 1 + row.size]
    return p.with_values(out / p.geometry.det_spacing)


def filter_matrix(p: Sinogram, rec: Reconstructor, basis: BasisSet) -> np.ndarray:
    """Columns ``flatten(W reconstruct(apply_filter(p, b_j)))`` for every basis vector.

    Basis filters follow the implementation's DC convention.
    """
    dc = rec.forces_zero_dc
    return np.column_stack([
        forward_project(reconstruct(rec, apply_filter(p, basis.vector(j, dc))),
                        rec.geometry).values.ravel()
        for j in range(basis.n_b)
    ])


def projection_residual(p: Sinogram, rec: Reconstructor, h: FilterSpec) -> float:
    """``||p - W fbp(rec, p, h)||_2``, the quantity an adapted filter minimises."""
    from .reconstructors import fbp

    return float(np.linalg.norm(p.values - forward_project(fbp(rec, p, h), rec.geometry).values))


def _lstsq(F: np.ndarray, target: np.ndarray, ridge: float) -> np.ndarray:
    bad = ~np.all(np.isfinite(F), axis=0)
    if np.any(bad):
        raise NumericalError(f"non-finite values in column(s) {np.flatnonzero(bad).tolist()}")
    if ridge < 0:
        raise InvalidArgumentError("ridge must be non-negative")
    if ridge > 0:
        F = np.vstack([F, math.sqrt(ridge) * np.eye(F.shape[1])])
        target = np.concatenate([target, np.zeros(F.shape[1])])
    c, *_ = np.linalg.lstsq(F, target, rcond=RCOND)
    return c


def compute_adapted_filter(p: Sinogram, rec: Reconstructor, basis: BasisSet,
                           ridge: float = 0.0) -> FilterSpec:
    """Minimum-residual filter for implementation ``rec``.

    Solves ``min_c ||p - F c||^2 + ridge ||c||^2`` where column ``j`` of ``F`` is
    the strip forward projection of ``rec`` applied to ``p`` filtered with
    basis vector ``j``.  The implementation is only ever called through
    :func:`reconstruct`.
    """
    _check_basis(p, rec, basis)
    F = filter_matrix(p, rec, basis)
    c = _lstsq(F, p.values.ravel(), ridge)
    return FilterSpec(basis.n_det, "expbin", c, n_l=basis.n_l,
                      zero_dc=rec.forces_zero_dc,
                      provenance={"implementation": rec.name,
                                  "n_angles": rec.geometry.n_angles, "mode": "sinogram"})


def compute_reference_filter(p: Sinogram, rec: Reconstructor, r_ref: ImageGrid,
                             basis: BasisSet, ridge: float = 0.0) -> FilterSpec:
    """Filter bringing ``rec``'s reconstruction closest to ``r_ref`` in the l2 sense."""
    _check_basis(p, rec, basis)
    if r_ref.n != rec.geometry.vol_size:
        raise InvalidArgumentError("reference image size does not match geometry")
    dc = rec.forces_zero_dc
    cols = np.column_stack([
        reconstruct(rec, apply_filter(p, basis.vector(j, dc))).values.ravel()
        for j in range(basis.n_b)
    ])
    c = _lstsq(cols, r_ref.values.ravel(), ridge)
    return FilterSpec(basis.n_det, "expbin", c, n_l=basis.n_l, zero_dc=dc,
                      provenance={"implementation": rec.name,
                                  "n_angles": rec.geometry.n_angles, "mode": "reference"})


def _check_basis(p: Sinogram, rec: Reconstructor, basis: BasisSet):
    if p.geometry != rec.geometry:
        raise InvalidArgumentError("sinogram geometry does not match reconstructor geometry")
    if basis.n_det != p.geometry.n_det:
        raise InvalidArgumentError("basis n_det does not match sinogram")


def write_filter(path, h: FilterSpec) -> None:
    doc = {
        "n_det": h.n_det,
        "basis": {"type": h.basis, **({"n_l": h.n_l} if h.basis == "expbin" else {})},
        "coeffs": [format(float(c), ".17g") for c in h.coeffs],
        "zero_dc": bool(h.zero_dc),
        "provenance": dict(h.provenance),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_filter(path) -> FilterSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    try:
        n_det = doc["n_det"]
        basis = doc["basis"]
        kind = basis["type"]
        coeffs = [float(c) for c in doc["coeffs"]]
        zero_dc = doc.get("zero_dc", False)
        n_l = basis.get("n_l")
        if not isinstance(n_det, int) or not isinstance(zero_dc, bool):
            raise TypeError("n_det must be an integer and zero_dc a boolean")
        if kind == "expbin" and not (isinstance(n_l, int) and 1 <= n_l <= n_det / 2):
            raise ValueError(f"n_l={n_l!r} out of range for n_det={n_det}")
        return FilterSpec(n_det, kind, coeffs, n_l=n_l if kind == "expbin" else None,
                          zero_dc=zero_dc, provenance=doc.get("provenance") or {})
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
