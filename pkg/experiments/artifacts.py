"""Result files of a run: CSV tables, JSON reports, .npy arrays with JSON sidecars.

Numbers are written with full precision and dicts with sorted keys, so a config and seed
always reproduce the same bytes.
"""

import csv
import json
import logging
import platform
from importlib import metadata
from pathlib import Path

import numpy as np

import kinetics

logger = logging.getLogger(__name__)

PACKAGES = ("Django", "numpy", "scipy")


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    return value


def canonical_json(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    if isinstance(value, (np.integer, np.bool_)):
        return str(value.item())
    return str(value)


def package_versions():
    versions = {}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


class ArtifactWriter:
    """Writes the files of one run into ``root`` and remembers their names."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []

    def _path(self, name):
        self.files.append(name)
        return self.root / name

    def csv(self, name, rows, columns=None):
        rows = list(rows)
        columns = list(columns or (rows[0].keys() if rows else []))
        with self._path(name).open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row.get(column, "")) for column in columns])
        logger.debug("wrote %d rows to %s", len(rows), name)

    def columns(self, name, columns):
        """CSV from equal-length arrays keyed by column name."""
        keys = list(columns)
        arrays = [np.asarray(columns[k]) for k in keys]
        rows = [dict(zip(keys, values)) for values in zip(*arrays)]
        self.csv(name, rows, keys)

    def json(self, name, obj):
        self._path(name).write_text(canonical_json(obj), encoding="utf-8")

    def array(self, name, array, **meta):
        """``name``.npy and ``name``.json describing dtype, shape and ``meta``."""
        array = np.ascontiguousarray(array)
        np.save(self._path(f"{name}.npy"), array, allow_pickle=False)
        sidecar = {"dtype": str(array.dtype), "shape": list(array.shape), **meta}
        self.json(f"{name}.json", sidecar)

    def manifest(self, config, status):
        manifest = {
            "config": config.as_dict(),
            "seed": config.seed,
            "status": status,
            "version": kinetics.__version__,
            "python": platform.python_version(),
            "packages": package_versions(),
            "files": sorted(self.files),
        }
        self.root.joinpath("manifest.json").write_text(canonical_json(manifest), encoding="utf-8")
        return manifest

    def summary(self, name, checks, passed):
        summary = {"experiment": name, "passed": passed, "checks": checks}
        self.json("summary.json", summary)
        return summary
