"""Experiment recipes shared by the command line and the demo scripts.

Each recipe takes in-memory objects and returns plain results; writing files
is left to the caller.  Everything is deterministic given the inputs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError, NumericalError
from .filterbank import (BasisSet, FilterSpec, compute_adapted_filter, compute_reference_filter,
                         expbin_basis, projection_residual, standard_filter)
from .metrics import (Histogram, ReconSet, f1_jaccard, mean_std, otsu_threshold, pixelwise_std,
                      rmse, segment, squared_bias, std_histogram)
from .phantoms import Slice2D, add_poisson_noise, add_zingers, analytic_sinogram, rasterize_slice
from .raster import Geometry, ImageGrid, Sinogram, make_geometry
from .reconstructors import IMPLEMENTATIONS, ReconConventions, Reconstructor, fbp, sirt

__all__ = [
    "FAMILIES",
    "FamilyResult",
    "SetSummary",
    "simulate_slice",
    "binary_truth",
    "family_filter",
    "run_family",
    "summarize",
    "reference_image",
    "compare",
    "angle_sweep",
    "flux_sweep",
    "transfer",
    "reference_transfer",
    "zinger_demo",
]

FAMILIES = ("ram-lak", "shepp-logan", "adapted")


def simulate_slice(slc: Slice2D, g: Geometry, *, supersampling: int = 4,
                   noise: tuple | None = None, zingers: tuple | None = None,
                   gt_subpixel: int = 8) -> tuple[Sinogram, ImageGrid]:
    """Analytic sinogram of a slice with optional corruption, plus its raster.

    ``noise`` is ``(flux, seed)``; the line integrals are normalised by their
    maximum before attenuation so that the flux sets the noise level
    independently of the image size.  ``zingers`` is
    ``(fraction, amplitude_factor, seed)`` and is applied after the noise.
    """
    p = analytic_sinogram(slc, g, supersampling)
    if noise is not None:
        flux, seed = noise
        p = add_poisson_noise(p, flux, seed, scale=float(p.values.max()))
    if zingers is not None:
        fraction, amplitude, seed = zingers
        p = add_zingers(p, fraction, amplitude, seed)
    return p, rasterize_slice(slc, g.vol_size, gt_subpixel)


def binary_truth(gt: ImageGrid) -> ImageGrid:
    """Material mask: pixels more than half covered."""
    return ImageGrid(gt.n, (gt.values > 0.5).astype(np.float64))


def family_filter(family: str, p: Sinogram, rec: Reconstructor, basis: BasisSet,
                  reference: ImageGrid | None = None) -> FilterSpec:
    if family in ("ram-lak", "shepp-logan"):
        return standard_filter(family, p.geometry.n_det)
    if family == "adapted":
        return compute_adapted_filter(p, rec, basis)
    if family.startswith("reference"):
        if reference is None:
            raise InvalidArgumentError(f"filter family {family!r} needs a reference image")
        return compute_reference_filter(p, rec, reference, basis)
    raise InvalidArgumentError(f"unknown filter family {family!r}")


@dataclass
class FamilyResult:
    family: str
    images: dict  # implementation -> ImageGrid
    filters: dict  # implementation -> FilterSpec
    residuals: dict  # implementation -> ||p - W r||

    @property
    def recon_set(self) -> ReconSet:
        return ReconSet.from_dict(self.images)


def run_family(p: Sinogram, family: str, implementations=IMPLEMENTATIONS, *,
               basis: BasisSet | None = None, conventions: ReconConventions | None = None,
               reference: ImageGrid | None = None, filters: dict | None = None,
               jobs: int = 1) -> FamilyResult:
    """Reconstruct ``p`` with every implementation using one filter family.

    ``filters`` may supply precomputed filters per implementation (used to
    apply a filter computed on another slice).
    """
    g = p.geometry
    basis = basis or expbin_basis(g.n_det, max(2, g.n_det // 16))
    conventions = conventions or ReconConventions()

    def job(name):
        rec = Reconstructor(name, g, conventions)
        h = filters[name] if filters else family_filter(family, p, rec, basis, reference)
        return name, fbp(rec, p, h), h, projection_residual(p, rec, h)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            out = list(pool.map(job, implementations))
    else:
        out = [job(name) for name in implementations]
    return FamilyResult(family, {n: r for n, r, _, _ in out}, {n: h for n, _, h, _ in out},
                        {n: res for n, _, _, res in out})


@dataclass
class SetSummary:
    family: str
    sigma: ImageGrid
    mean_std: float
    histogram: Histogram
    member_metrics: dict = field(default_factory=dict)  # implementation -> {metric: value}
    set_metrics: dict = field(default_factory=dict)


def summarize(fr: FamilyResult, gt: ImageGrid | None = None, *, n_bins: int = 100,
              hist_max: float | None = None) -> SetSummary:
    """Variability of a family, and accuracy and segmentation metrics if ``gt`` is given."""
    sigma = pixelwise_std(fr.recon_set)
    if hist_max is None:
        hist = std_histogram(sigma, n_bins)
    else:
        counts, edges = np.histogram(np.minimum(sigma.values, hist_max), bins=n_bins,
                                     range=(0.0, hist_max))
        hist = Histogram(edges, counts.astype(np.int64))
    members = {}
    mask = binary_truth(gt) if gt is not None else None
    for name, img in fr.images.items():
        m = {"residual": fr.residuals[name]} if name in fr.residuals else {}
        if gt is not None:
            m["rmse"] = rmse(img, gt)
            try:
                t = otsu_threshold(img)
            except DegenerateInputError:
                t = float("nan")
            else:
                m["f1"], m["jaccard"] = f1_jaccard(segment(img, t), mask)
            m["otsu"] = t
        members[name] = m
    set_metrics = {"mean_std": mean_std(sigma), "max_std": float(sigma.values.max())}
    if gt is not None:
        set_metrics["squared_bias"] = squared_bias(fr.recon_set, gt)[1]
        set_metrics["mean_rmse"] = float(np.mean([m["rmse"] for m in members.values()]))
    return SetSummary(fr.family, sigma, set_metrics["mean_std"], hist, members, set_metrics)


def reference_image(p: Sinogram, label: str) -> ImageGrid:
    """Reconstruction named by ``"<implementation>[+<standard filter>]"`` (default Shepp-Logan)."""
    impl, _, fam = label.partition("+")
    return fbp(Reconstructor(impl, p.geometry), p, standard_filter(fam or "shepp-logan",
                                                                   p.geometry.n_det))


def compare(p: Sinogram, implementations=IMPLEMENTATIONS, gt: ImageGrid | None = None, *,
            families=FAMILIES, basis: BasisSet | None = None,
            conventions: ReconConventions | None = None, jobs: int = 1) -> dict:
    """Run every family on ``p``; returns ``{family: (FamilyResult, SetSummary)}``.

    Families are ``ram-lak``, ``shepp-logan``, ``adapted`` or
    ``reference:<label>`` (see :func:`reference_image`); for the latter each
    member also gets an ``rmse_r`` against the reference.  Histograms of all
    families share the same bins so their modes are comparable.
    """
    if len(implementations) < 2:
        raise InvalidArgumentError("compare needs at least two implementations")
    results, refs = {}, {}
    for f in families:
        ref = None
        if f.startswith("reference:"):
            ref = refs[f] = reference_image(p, f.split(":", 1)[1])
        results[f] = run_family(p, f, implementations, basis=basis, conventions=conventions,
                                reference=ref, jobs=jobs)
    top = max(float(pixelwise_std(r.recon_set).values.max()) for r in results.values())
    out = {}
    for f, r in results.items():
        s = summarize(r, gt, hist_max=top if top > 0 else None)
        if f in refs:
            for name, img in r.images.items():
                s.member_metrics[name]["rmse_r"] = rmse(img, refs[f])
        out[f] = (r, s)
    if "adapted" in out and "shepp-logan" in out:
        for name in implementations:
            a = out["adapted"][0].residuals[name]
            b = out["shepp-logan"][0].residuals[name]
            # Shepp-Logan is only approximately in the span of the basis
            if a > b * (1 + 1e-6) + 1e-9:
                raise NumericalError(f"{name}: adapted residual {a:.6g} exceeds Shepp-Logan {b:.6g}")
    return out


def angle_sweep(slc: Slice2D, n: int, angle_counts, implementations=IMPLEMENTATIONS, *,
                n_det: int | None = None, n_l: int = 16, supersampling: int = 4) -> list[dict]:
    """Noise-free sweep over the number of angles; one dict of set metrics per family and count."""
    rows = []
    n_det = n_det or n
    for n_angles in angle_counts:
        g = make_geometry(n_angles, n_det, n)
        p, gt = simulate_slice(slc, g, supersampling=supersampling)
        res = compare(p, implementations, gt, basis=expbin_basis(n_det, n_l))
        for fam, (_, s) in res.items():
            rows.append({"n_angles": n_angles, "flux": None, "family": fam, **s.set_metrics})
    return rows


def flux_sweep(slc: Slice2D, n: int, n_angles: int, fluxes, seed: int,
               implementations=IMPLEMENTATIONS, *, n_det: int | None = None, n_l: int = 16,
               supersampling: int = 4) -> list[dict]:
    """Noisy sweep over the photon flux at a fixed number of angles."""
    rows = []
    n_det = n_det or n
    g = make_geometry(n_angles, n_det, n)
    for flux in fluxes:
        p, gt = simulate_slice(slc, g, supersampling=supersampling, noise=(flux, seed))
        res = compare(p, implementations, gt, basis=expbin_basis(n_det, n_l))
        for fam, (_, s) in res.items():
            rows.append({"n_angles": n_angles, "flux": flux, "family": fam, **s.set_metrics})
    return rows


def transfer(slices, g: Geometry, implementations=IMPLEMENTATIONS, *,
             central: int | None = None, n_l: int = 16, supersampling: int = 4) -> dict:
    """Apply the central slice's adapted filters to every slice.

    Returns per-pixel standard deviations, concatenated over slices, for the
    slice-specific filters, the central-slice filters and Shepp-Logan.
    """
    slices = list(slices)
    if len(slices) < 3:
        raise InvalidArgumentError("transfer needs at least three slices")
    central = len(slices) // 2 if central is None else central
    basis = expbin_basis(g.n_det, n_l)
    sinos = [analytic_sinogram(s, g, supersampling) for s in slices]
    central_filters = run_family(sinos[central], "adapted", implementations,
                                 basis=basis).filters
    out = {"slice_specific": [], "central": [], "shepp-logan": [], "slice": []}
    for i, p in enumerate(sinos):
        own = run_family(p, "adapted", implementations, basis=basis)
        cen = run_family(p, "central", implementations, filters=central_filters)
        sl = run_family(p, "shepp-logan", implementations)
        for key, fr in (("slice_specific", own), ("central", cen), ("shepp-logan", sl)):
            out[key].append(pixelwise_std(fr.recon_set).values.ravel())
        out["slice"].append(np.full(g.vol_size ** 2, i))
    return {k: np.concatenate(v) for k, v in out.items()}


def reference_transfer(p_train: Sinogram, p_test: Sinogram, implementations, *,
                       reference_impl: str = "strip", reference_family: str = "shepp-logan",
                       n_l: int = 16) -> dict:
    """Match implementations to a reference reconstruction, then reuse the filters.

    Filters are fitted on ``p_train`` so that each implementation reproduces
    the reference implementation's reconstruction, and are then applied
    unchanged to ``p_test``.  Returns ``{impl: {split: (rmse_before, rmse_after)}}``
    where the error is measured against the reference reconstruction.
    """
    g = p_train.geometry
    basis = expbin_basis(g.n_det, n_l)
    std = standard_filter(reference_family, g.n_det)
    ref_rec = Reconstructor(reference_impl, g)
    refs = {"train": fbp(ref_rec, p_train, std), "test": fbp(ref_rec, p_test, std)}
    out = {}
    for name in implementations:
        rec = Reconstructor(name, g)
        h = compute_reference_filter(p_train, rec, refs["train"], basis)
        out[name] = {split: (rmse(fbp(rec, p, std), refs[split]), rmse(fbp(rec, p, h), refs[split]))
                     for split, p in (("train", p_train), ("test", p_test))}
    return out


def zinger_demo(p: Sinogram, gt: ImageGrid, *, sirt_iterations: int = 800,
                n_l: int = 16) -> dict:
    """Strip reconstructions of (zinger-corrupted) data and their segmentations.

    Returns ``{method: {"image", "segmentation", "otsu", "f1", "jaccard"}}`` for
    ``shepp-logan``, ``adapted`` and ``sirt``.
    """
    g = p.geometry
    rec = Reconstructor("strip", g)
    images = {
        "shepp-logan": fbp(rec, p, standard_filter("shepp-logan", g.n_det)),
        "adapted": fbp(rec, p, compute_adapted_filter(p, rec, expbin_basis(g.n_det, n_l))),
        "sirt": sirt(p, g, sirt_iterations),
    }
    mask = binary_truth(gt)
    out = {}
    for name, img in images.items():
        t = otsu_threshold(img)
        seg = segment(img, t)
        f1, j = f1_jaccard(seg, mask)
        out[name] = {"image": img, "segmentation": seg, "otsu": t, "f1": f1, "jaccard": j}
    return out
