"""Output writers: PGM previews, metric CSV rows and the hashed manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .raster import ImageGrid, Sinogram, write_raster

__all__ = ["OutputDir", "write_pgm", "read_pgm", "CSV_COLUMNS"]

CSV_COLUMNS = ("experiment", "slice", "implementation", "filter_family", "metric", "value")


def _atomic_bytes(path: Path, data: bytes):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_pgm(path, values: np.ndarray) -> dict:
    """Binary 16-bit PGM with global min-max scaling; returns the scaling record.

    A constant image maps to 0.  Pixel ``v`` is stored as
    ``round((v - min) / (max - min) * 65535)``.
    """
    path = Path(path)
    v = np.asarray(values, dtype=np.float64)
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo
    scaled = np.zeros(v.shape) if span == 0 else (v - lo) / span * 65535.0
    pix = np.rint(scaled).astype(">u2")
    header = f"P5\n{v.shape[1]} {v.shape[0]}\n65535\n".encode("ascii")
    _atomic_bytes(path, header + pix.tobytes())
    scaling = {"min": repr(lo), "max": repr(hi), "maxval": 65535,
               "mapping": "value = min + pixel / maxval * (max - min)"}
    _atomic_bytes(path.with_suffix(".pgm.json"), json.dumps(scaling, indent=1).encode())
    return scaling


def read_pgm(path) -> np.ndarray:
    """Read a binary 16-bit PGM written by :func:`write_pgm`."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) < 4:
        raise ValueError("not a binary PGM")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2", count=w * h).reshape(h, w).astype(np.uint16)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class OutputDir:
    """Collects files written by one command and emits ``manifest.json`` at the end."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._entries: dict[str, str] = {}
        self.rows: list[tuple] = []

    def path(self, name: str) -> Path:
        return self.root / name

    def _add(self, path: Path, kind: str):
        self._entries[str(path.relative_to(self.root))] = kind

    def raster(self, name: str, obj: Sinogram | ImageGrid, kind: str | None = None) -> Path:
        p = self.path(name + ".f32")
        write_raster(p, obj)
        kind = kind or ("sinogram" if isinstance(obj, Sinogram) else "image")
        self._add(p, kind)
        self._add(p.with_suffix(".json"), kind + "-sidecar")
        return p

    def preview(self, name: str, values: np.ndarray) -> Path:
        p = self.path(name + ".pgm")
        write_pgm(p, values)
        self._add(p, "preview")
        self._add(p.with_suffix(".pgm.json"), "preview-scaling")
        return p

    def json(self, name: str, doc, kind: str) -> Path:
        p = self.path(name)
        _atomic_bytes(p, (json.dumps(doc, indent=1) + "\n").encode())
        self._add(p, kind)
        return p

    def file(self, p: Path, kind: str):
        """Register a file written by another routine."""
        self._add(Path(p), kind)

    def table(self, name: str, header, rows, kind: str = "table") -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        p = self.path(name)
        _atomic_bytes(p, buf.getvalue().encode())
        self._add(p, kind)
        return p

    def metric(self, experiment, slice_, implementation, family, metric, value):
        self.rows.append((experiment, slice_, implementation, family, metric, value))

    def finish(self, metrics_name: str = "metrics.csv") -> Path:
        """Write the metric CSV (if any rows) and the manifest; returns the manifest path."""
        if self.rows:
            rows = [(e, s, i, f, m, repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                    for e, s, i, f, m, v in self.rows]
            self.table(metrics_name, CSV_COLUMNS, rows, kind="metrics")
        manifest = [{"path": rel, "sha256": _sha256(self.root / rel), "kind": kind}
                    for rel, kind in sorted(self._entries.items())]
        p = self.path("manifest.json")
        _atomic_bytes(p, (json.dumps(manifest, indent=1) + "\n").encode())
        return p
