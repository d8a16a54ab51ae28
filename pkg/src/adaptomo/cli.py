"""Command line interface: ``adaptomo <command> [options]``.

Commands
--------
simulate        analytic sinograms and ground-truth rasters for every slice
compute-filter  adapted (or reference-matched) filter for one implementation
reconstruct     filtered backprojection of one sinogram with one implementation
compare         all implementations x filter families, with variability metrics
transfer        reuse of the central slice's filters on the other slices
zinger-demo     strip FBP and SIRT on zinger-corrupted data

Exit status is 0 on success, 2 for configuration or argument errors, 3 for
numerical failures and 4 for I/O or file-format errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ExperimentConfig, load_config
from .errors import (ConfigError, FormatError, InvalidArgumentError, NumericalError,
                     PackingError)
from .filterbank import (compute_adapted_filter, compute_reference_filter, default_n_l,
                         expbin_basis, projection_residual, read_filter, standard_filter,
                         write_filter)
from .metrics import rmse
from .outputs import OutputDir
from .phantoms import (add_poisson_noise, add_zingers, generate_foam, save_foam,
                       single_pixel_phantom, slice_phantom)
from .raster import ImageGrid, Sinogram, make_geometry, read_raster
from .reconstructors import IMPLEMENTATIONS, Reconstructor, fbp, forward_project

log = logging.getLogger("adaptomo")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


# ----------------------------------------------------------------------------- helpers

def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out(args, cfg: ExperimentConfig | None = None) -> Path:
    return Path(args.out or (cfg.outputs if cfg else "out"))


def _zfmt(z: float) -> str:
    return format(z, "g")


def _slices(cfg: ExperimentConfig):
    """Yield ``(index, z, sinogram, ground_truth, slice_or_None)`` for the configured slices."""
    g = make_geometry(cfg.n_angles, cfg.n_det, cfg.vol_size, cfg.det_spacing)
    if cfg.is_foam:
        foam = generate_foam(cfg.phantom)
        for i, z in enumerate(cfg.slice_z):
            slc = slice_phantom(foam, z)
            p, gt = ex.simulate_slice(slc, g, supersampling=cfg.supersampling,
                                      noise=cfg.noise, zingers=cfg.zingers)
            if cfg.angle_subsample:
                p = p.subsample(cfg.angle_subsample)
            yield i, z, p, gt, slc
    else:
        gt = single_pixel_phantom(cfg.vol_size)
        p = forward_project(gt, g)
        if cfg.noise is not None:
            p = add_poisson_noise(p, cfg.noise[0], cfg.noise[1], scale=float(p.values.max()))
        if cfg.zingers is not None:
            p = add_zingers(p, *cfg.zingers)
        if cfg.angle_subsample:
            p = p.subsample(cfg.angle_subsample)
        for i, z in enumerate(cfg.slice_z[:1]):
            yield i, z, p, gt, None


def _read_sinogram(path) -> Sinogram:
    obj = read_raster(path)
    if not isinstance(obj, Sinogram):
        raise InvalidArgumentError(f"{path} is not a sinogram raster")
    return obj


def _read_image(path) -> ImageGrid:
    obj = read_raster(path)
    if not isinstance(obj, ImageGrid):
        raise InvalidArgumentError(f"{path} is not an image raster")
    return obj


def _resolve_filter(spec: str, n_det: int):
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return read_filter(path)
    return standard_filter(spec, n_det)


# ----------------------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    cfg = _config(args)
    if not cfg.slice_z:
        log.warning("slice_z is empty; nothing to simulate")
        return EXIT_OK
    out = OutputDir(_out(args, cfg))
    if cfg.is_foam:
        save_foam(out.path("phantom.json"), generate_foam(cfg.phantom))
        out.file(out.path("phantom.json"), "phantom")
    for i, z, p, gt, _ in _slices(cfg):
        stem = f"slice{i:03d}"
        out.raster(f"{stem}_sinogram", p)
        out.raster(f"{stem}_gt", gt, kind="ground-truth")
        out.preview(f"{stem}_gt", gt.values)
        out.preview(f"{stem}_sinogram", p.values)
        log.info("slice %d (z=%s): sinogram %s", i, _zfmt(z), p.shape)
    out.finish()
    return EXIT_OK


def cmd_compute_filter(args) -> int:
    cfg = _config(args)
    if not args.impl:
        raise ConfigError("--impl is required", "--impl")
    if not args.sinogram:
        raise ConfigError("--sinogram is required", "--sinogram")
    mode = args.mode or ("reference" if args.reference else "sinogram")
    if mode == "reference" and not args.reference:
        raise ConfigError("reference mode needs a reference reconstruction", "--reference")
    p = _read_sinogram(args.sinogram)
    g = p.geometry
    n_l = cfg.n_l if args.config else default_n_l(g.n_det)
    basis = expbin_basis(g.n_det, max(1, min(n_l, g.n_det // 2)))
    rec = Reconstructor(args.impl, g)
    out = OutputDir(_out(args, cfg))
    std = {name: standard_filter(name, g.n_det) for name in ("ram-lak", "shepp-logan")}
    if mode == "reference":
        ref = _read_image(args.reference)
        h = compute_reference_filter(p, rec, ref, basis)
        before = {n: rmse(fbp(rec, p, f), ref) for n, f in std.items()}
        after = rmse(fbp(rec, p, h), ref)
        metric = "rmse_r"
    else:
        h = compute_adapted_filter(p, rec, basis)
        before = {n: projection_residual(p, rec, f) for n, f in std.items()}
        after = projection_residual(p, rec, h)
        metric = "residual"
        if after > before["shepp-logan"] * (1 + 1e-6) + 1e-9:
            log.warning("adapted residual %.6g exceeds Shepp-Logan residual %.6g",
                        after, before["shepp-logan"])
    for name, v in before.items():
        print(f"{metric} before ({name}): {v:.6g}")
        out.metric("compute-filter", "", rec.name, name, metric, v)
    print(f"{metric} after (adapted): {after:.6g}")
    out.metric("compute-filter", "", rec.name, "adapted", metric, after)
    path = out.path(f"filter_{rec.name}.json")
    write_filter(path, h)
    out.file(path, "filter")
    out.finish()
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    if not args.impl:
        raise ConfigError("--impl is required", "--impl")
    if not args.sinogram:
        raise ConfigError("--sinogram is required", "--sinogram")
    if not args.filter:
        raise ConfigError("--filter is required", "--filter")
    p = _read_sinogram(args.sinogram)
    h = _resolve_filter(args.filter, p.geometry.n_det)
    rec = Reconstructor(args.impl, p.geometry)
    img = fbp(rec, p, h)
    out = OutputDir(_out(args))
    out.raster(f"recon_{rec.name}", img)
    out.preview(f"recon_{rec.name}", img.values)
    out.finish()
    return EXIT_OK


def _hist_rows(hist):
    return [(repr(float(lo)), repr(float(hi)), int(c))
            for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts)]


def cmd_compare(args) -> int:
    cfg = _config(args)
    if len(cfg.implementations) < 2:
        raise ConfigError("compare needs at least two implementations", "implementations")
    out = OutputDir(_out(args, cfg))
    first_slice = None
    for i, z, p, gt, slc in _slices(cfg):
        if first_slice is None:
            first_slice = slc
        zs, stem = _zfmt(z), f"slice{i:03d}"
        res = ex.compare(p, cfg.implementations, gt, families=cfg.filters,
                         basis=expbin_basis(p.geometry.n_det, cfg.n_l), jobs=args.jobs)
        for fam, (fr, s) in res.items():
            tag = fam.replace(":", "-").replace("+", "-")
            for name, img in fr.images.items():
                out.raster(f"{stem}_{tag}_{name}", img)
                if name != "strip" and "strip" in fr.images:
                    diff = np.abs(img.values - fr.images["strip"].values)
                    out.raster(f"{stem}_{tag}_absdiff_{name}", ImageGrid(img.n, diff), "absdiff")
                    out.preview(f"{stem}_{tag}_absdiff_{name}", diff)
                for metric, v in s.member_metrics[name].items():
                    out.metric("compare", zs, name, fam, metric, v)
            out.raster(f"{stem}_{tag}_std", s.sigma, "std-map")
            out.preview(f"{stem}_{tag}_std", s.sigma.values)
            out.table(f"{stem}_{tag}_std_hist.csv", ("bin_lo", "bin_hi", "count"),
                      _hist_rows(s.histogram), kind="histogram")
            for metric, v in s.set_metrics.items():
                out.metric("compare", zs, "*", fam, metric, v)
            out.metric("compare", zs, "*", fam, "std_hist_mode_bin", s.histogram.mode_bin)
        if "strip" not in cfg.implementations:
            log.warning("no strip member; absolute-difference maps skipped")
    if first_slice is not None and (cfg.sweep_angles or cfg.sweep_fluxes):
        kw = dict(n_det=cfg.n_det, n_l=cfg.n_l, supersampling=cfg.supersampling)
        rows = ex.angle_sweep(first_slice, cfg.vol_size, cfg.sweep_angles,
                              cfg.implementations, **kw)
        if cfg.sweep_fluxes:
            seed = cfg.noise[1] if cfg.noise else 0
            rows += ex.flux_sweep(first_slice, cfg.vol_size, cfg.n_angles, cfg.sweep_fluxes,
                                  seed, cfg.implementations, **kw)
        z0 = _zfmt(cfg.slice_z[0])
        for r in rows:
            exp = (f"sweep-angles/n_angles={r['n_angles']}" if r["flux"] is None
                   else f"sweep-flux/flux={r['flux']:g}/n_angles={r['n_angles']}")
            for metric in ("mean_std", "max_std", "squared_bias", "mean_rmse"):
                out.metric(exp, z0, "*", r["family"], metric, r[metric])
    out.finish()
    return EXIT_OK


def cmd_transfer(args) -> int:
    cfg = _config(args)
    if not cfg.is_foam:
        raise ConfigError("transfer needs a foam phantom", "phantom")
    if len(cfg.slice_z) < 3:
        raise ConfigError("transfer needs at least three slices", "slice_z")
    foam = generate_foam(cfg.phantom)
    g = make_geometry(cfg.n_angles, cfg.n_det, cfg.vol_size, cfg.det_spacing)
    central = int(np.argmin(np.abs(cfg.slice_z)))
    res = ex.transfer([slice_phantom(foam, z) for z in cfg.slice_z], g, cfg.implementations,
                      central=central, n_l=cfg.n_l, supersampling=cfg.supersampling)
    out = OutputDir(_out(args, cfg))
    x, y, s = res["slice_specific"], res["central"], res["shepp-logan"]
    npix = cfg.vol_size ** 2
    table = np.column_stack([res["slice"], np.tile(np.arange(npix), len(cfg.slice_z)), x, y, s])
    path = out.path("transfer_sigma.csv")
    np.savetxt(path, table, fmt=["%d", "%d", "%.9g", "%.9g", "%.9g"], delimiter=",",
               header="slice,pixel,sigma_slice_specific,sigma_central,sigma_shepp_logan",
               comments="")
    out.file(path, "scatter")
    slope, intercept = np.polyfit(x, y, 1)
    zc = _zfmt(cfg.slice_z[central])
    out.metric("transfer", zc, "*", "central", "slope", slope)
    out.metric("transfer", zc, "*", "central", "intercept", intercept)
    out.metric("transfer", zc, "*", "central", "max_std", max(x.max(), y.max()))
    out.metric("transfer", zc, "*", "shepp-logan", "fraction_ge_slice_specific",
               float(np.mean(s >= x)))
    print(f"central vs slice-specific: slope {slope:.4f}, intercept {intercept:.3g}")
    out.finish()
    return EXIT_OK


def cmd_zinger_demo(args) -> int:
    cfg = _config(args)
    if not cfg.is_foam:
        raise ConfigError("zinger-demo needs a foam phantom", "phantom")
    if cfg.zingers is None:
        from dataclasses import replace
        cfg = replace(cfg, zingers=(1e-3, 10.0, 0))
    out = OutputDir(_out(args, cfg))
    for i, z, p, gt, _ in _slices(cfg):
        zs, stem = _zfmt(z), f"slice{i:03d}"
        res = ex.zinger_demo(p, gt, sirt_iterations=cfg.sirt_iterations, n_l=cfg.n_l)
        out.raster(f"{stem}_gt", gt, kind="ground-truth")
        for name, r in res.items():
            out.raster(f"{stem}_{name}", r["image"])
            out.preview(f"{stem}_{name}", r["image"].values)
            out.raster(f"{stem}_{name}_seg", r["segmentation"], "segmentation")
            out.preview(f"{stem}_{name}_seg", r["segmentation"].values)
            for metric in ("otsu", "f1", "jaccard"):
                out.metric("zinger-demo", zs, "strip" if name != "sirt" else "sirt",
                           name if name != "sirt" else f"sirt-{cfg.sirt_iterations}",
                           metric, r[metric])
            print(f"slice {zs} {name}: otsu {r['otsu']:.4f} f1 {r['f1']:.4f} "
                  f"jaccard {r['jaccard']:.4f}")
    out.finish()
    return EXIT_OK


# ----------------------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptomo", description="Implementation-adapted filters for filtered backprojection.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", metavar="PATH", help="experiment JSON document")
        sp.add_argument("--out", metavar="DIR", help="output directory (default: config 'outputs')")
        sp.add_argument("--seed", type=int, metavar="U64", help="override every seed in the config")
        sp.add_argument("--jobs", type=int, default=1, metavar="N", help="worker threads")
        sp.set_defaults(func=func)
        return sp

    add("simulate", cmd_simulate, "simulate sinograms and ground truth")
    sp = add("compute-filter", cmd_compute_filter, "compute an implementation-adapted filter")
    sp.add_argument("--impl", choices=IMPLEMENTATIONS)
    sp.add_argument("--sinogram", metavar="PATH")
    sp.add_argument("--reference", metavar="PATH", help="reference reconstruction raster")
    sp.add_argument("--mode", choices=("sinogram", "reference"), default=None,
                    help="optimisation target (default: reference if --reference is given)")
    sp = add("reconstruct", cmd_reconstruct, "filtered backprojection")
    sp.add_argument("--impl", choices=IMPLEMENTATIONS)
    sp.add_argument("--sinogram", metavar="PATH")
    sp.add_argument("--filter", metavar="NAME|PATH", help="ram-lak, shepp-logan or a filter JSON")
    add("compare", cmd_compare, "compare implementations across filter families")
    add("transfer", cmd_transfer, "apply the central slice filter to all slices")
    add("zinger-demo", cmd_zinger_demo, "zinger corruption failure mode")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except FormatError as exc:
        log.error("format error: %s", exc)
        return EXIT_IO
    except InvalidArgumentError as exc:
        log.error("invalid argument: %s", exc)
        return EXIT_CONFIG
    except (NumericalError, PackingError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical error: %s", exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
