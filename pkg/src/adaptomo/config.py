"""Experiment configuration: one JSON document, validated with field paths.

Example::

    {
      "phantom": {"type": "foam", "n_spheres": 1000, "seed": 7},
      "geometry": {"n_angles": 32, "n_det": 256, "vol_size": 256},
      "noise": {"flux": 10000, "seed": 1},
      "zingers": null,
      "implementations": ["strip", "line", "joseph", "pixel", "fouriergrid"],
      "filters": ["ram-lak", "shepp-logan", "adapted"],
      "basis": {"n_l": 16},
      "slice_z": [0.0],
      "angle_subsample": null,
      "outputs": "out"
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, InvalidArgumentError
from .phantoms import FoamSpec
from .reconstructors import IMPLEMENTATIONS

__all__ = ["ExperimentConfig", "load_config", "parse_config", "DEFAULT_FLUXES", "DEFAULT_ANGLES"]

DEFAULT_ANGLES = (16, 32, 64, 128, 256)
DEFAULT_FLUXES = (1e3, 1e4, 1e5, 1e6)
_STANDARD = ("ram-lak", "shepp-logan")


@dataclass(frozen=True)
class ExperimentConfig:
    phantom: FoamSpec | str = field(default_factory=FoamSpec)  # or "single-pixel"
    n_angles: int = 32
    n_det: int = 256
    vol_size: int = 256
    det_spacing: float = 1.0
    noise: tuple | None = None  # (flux, seed)
    zingers: tuple | None = None  # (fraction, amplitude_factor, seed)
    implementations: tuple = IMPLEMENTATIONS
    filters: tuple = ("ram-lak", "shepp-logan", "adapted")
    n_l: int = 16
    slice_z: tuple = (0.0,)
    angle_subsample: int | None = None
    supersampling: int = 4
    sirt_iterations: int = 800
    sweep_angles: tuple = ()
    sweep_fluxes: tuple = ()
    outputs: str = "out"

    @property
    def is_foam(self) -> bool:
        return isinstance(self.phantom, FoamSpec)

    def reference_labels(self) -> list[str]:
        return [f.split(":", 1)[1] for f in self.filters if f.startswith("reference:")]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Replace every seed by one derived from ``seed``."""
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "--seed")
        s_phantom, s_noise, s_zinger = (
            int(v) for v in np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64))
        cfg = self
        if self.is_foam:
            cfg = replace(cfg, phantom=replace(self.phantom, seed=s_phantom))
        if self.noise is not None:
            cfg = replace(cfg, noise=(self.noise[0], s_noise))
        if self.zingers is not None:
            cfg = replace(cfg, zingers=(*self.zingers[:2], s_zinger))
        return cfg


def _get(doc: dict, key: str, kind, path: str, default=None, required=False):
    if key not in doc or doc[key] is None:
        if required:
            raise ConfigError(f"missing field {key!r}", f"{path}.{key}".lstrip("."))
        return default
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not None and (not isinstance(value, kind) or isinstance(value, bool) and kind is not bool):
        raise ConfigError(f"field {key!r} must be {getattr(kind, '__name__', kind)}",
                          f"{path}.{key}".lstrip("."))
    return value


def _phantom(doc, path) -> FoamSpec | str:
    if doc is None:
        return FoamSpec()
    if doc == "single-pixel" or (isinstance(doc, dict) and doc.get("type") == "single-pixel"):
        return "single-pixel"
    if not isinstance(doc, dict) or doc.get("type", "foam") != "foam":
        raise ConfigError("phantom must be 'single-pixel' or an object with type 'foam'", path)
    known = {f.name for f in fields(FoamSpec)}
    extra = set(doc) - known - {"type"}
    if extra:
        raise ConfigError(f"unknown phantom field(s) {sorted(extra)}", path)
    try:
        return FoamSpec(**{k: v for k, v in doc.items() if k in known})
    except (TypeError, InvalidArgumentError) as exc:
        raise ConfigError(str(exc), path) from None


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a decoded JSON document and build an :class:`ExperimentConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", "")
    kw = {"phantom": _phantom(doc.get("phantom"), "phantom")}

    geo = _get(doc, "geometry", dict, "", {})
    for key in ("n_angles", "n_det", "vol_size"):
        v = _get(geo, key, int, "geometry", getattr(ExperimentConfig, key))
        if v < 1:
            raise ConfigError(f"{key} must be positive", f"geometry.{key}")
        kw[key] = v
    kw["det_spacing"] = _get(geo, "det_spacing", float, "geometry", 1.0)
    if not kw["det_spacing"] > 0:
        raise ConfigError("det_spacing must be positive", "geometry.det_spacing")
    if kw["n_det"] < kw["vol_size"]:
        raise ConfigError("n_det must be >= vol_size", "geometry.n_det")
    if kw["phantom"] == "single-pixel" and kw["vol_size"] % 2 == 0:
        raise ConfigError("single-pixel phantom needs an odd vol_size", "geometry.vol_size")

    noise = _get(doc, "noise", dict, "")
    if noise is not None:
        flux = _get(noise, "flux", float, "noise", required=True)
        if not flux > 0:
            raise ConfigError("flux must be positive", "noise.flux")
        kw["noise"] = (flux, _get(noise, "seed", int, "noise", 0))
    zing = _get(doc, "zingers", dict, "")
    if zing is not None:
        frac = _get(zing, "fraction", float, "zingers", 1e-3)
        amp = _get(zing, "amplitude_factor", float, "zingers", 10.0)
        if not 0 <= frac <= 1:
            raise ConfigError("fraction must lie in [0, 1]", "zingers.fraction")
        if not amp > 1:
            raise ConfigError("amplitude_factor must exceed 1", "zingers.amplitude_factor")
        kw["zingers"] = (frac, amp, _get(zing, "seed", int, "zingers", 0))

    impls = _get(doc, "implementations", list, "", list(IMPLEMENTATIONS))
    if not impls:
        raise ConfigError("at least one implementation is required", "implementations")
    for i, name in enumerate(impls):
        if name not in IMPLEMENTATIONS:
            raise ConfigError(f"unknown implementation {name!r}", f"implementations[{i}]")
    kw["implementations"] = tuple(impls)

    filters = _get(doc, "filters", list, "", ["ram-lak", "shepp-logan", "adapted"])
    if not filters:
        raise ConfigError("at least one filter is required", "filters")
    for i, name in enumerate(filters):
        if not isinstance(name, str):
            raise ConfigError("filter names must be strings", f"filters[{i}]")
        if name in _STANDARD or name == "adapted":
            continue
        if name.startswith("reference:"):
            impl, _, fam = name.split(":", 1)[1].partition("+")
            if impl not in IMPLEMENTATIONS or (fam and fam not in _STANDARD):
                raise ConfigError(f"reference label {name!r} does not resolve; expected "
                                  "'reference:<implementation>[+<standard filter>]'",
                                  f"filters[{i}]")
            continue
        raise ConfigError(f"unknown filter {name!r}", f"filters[{i}]")
    kw["filters"] = tuple(filters)

    basis = _get(doc, "basis", dict, "", {})
    kw["n_l"] = _get(basis, "n_l", int, "basis", max(2, kw["n_det"] // 16))
    if not 1 <= kw["n_l"] <= kw["n_det"] / 2:
        raise ConfigError("n_l must lie in [1, n_det / 2]", "basis.n_l")

    zs = _get(doc, "slice_z", list, "", [0.0])
    for i, z in enumerate(zs):
        if isinstance(z, bool) or not isinstance(z, (int, float)):
            raise ConfigError("slice positions must be numbers", f"slice_z[{i}]")
        if kw["phantom"] != "single-pixel" and not abs(z) < kw["phantom"].z_extent:
            raise ConfigError(f"|z| must be < {kw['phantom'].z_extent}", f"slice_z[{i}]")
    kw["slice_z"] = tuple(float(z) for z in zs)

    m = _get(doc, "angle_subsample", int, "")
    if m is not None and m < 1:
        raise ConfigError("angle_subsample must be >= 1", "angle_subsample")
    kw["angle_subsample"] = m
    kw["supersampling"] = _get(doc, "supersampling", int, "", 4)
    if kw["supersampling"] < 1:
        raise ConfigError("supersampling must be >= 1", "supersampling")
    kw["sirt_iterations"] = _get(doc, "sirt_iterations", int, "", 800)
    if kw["sirt_iterations"] < 1:
        raise ConfigError("sirt_iterations must be >= 1", "sirt_iterations")

    sweep = _get(doc, "sweep", dict, "", {})
    kw["sweep_angles"] = tuple(_get(sweep, "n_angles", list, "sweep", []))
    kw["sweep_fluxes"] = tuple(float(f) for f in _get(sweep, "flux", list, "sweep", []))
    for i, a in enumerate(kw["sweep_angles"]):
        if isinstance(a, bool) or not isinstance(a, int) or a < 1:
            raise ConfigError("angle counts must be positive integers", f"sweep.n_angles[{i}]")
    for i, f in enumerate(kw["sweep_fluxes"]):
        if not f > 0:
            raise ConfigError("fluxes must be positive", f"sweep.flux[{i}]")

    kw["outputs"] = _get(doc, "outputs", str, "", "out")
    known = {"phantom", "geometry", "noise", "zingers", "implementations", "filters", "basis",
             "slice_z", "angle_subsample", "supersampling", "sirt_iterations", "sweep", "outputs"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown field(s) {sorted(extra)}", sorted(extra)[0])
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(path)) from None
    return parse_config(doc)
