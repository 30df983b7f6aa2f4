"""ODL dataset container: a directory with a JSON manifest and raw binaries.

Layout:

    manifest.json         format_version, name, seed, grids, splits, dtype,
                          endianness, PRNG record, provenance
    train_inputs.bin      raw little-endian IEEE-754 float64, sample-major,
    train_outputs.bin     grid-point-minor, no header
    test_inputs.bin
    test_outputs.bin

Grids are stored in the manifest as explicit point arrays (JSON floats
round-trip exactly, so a save/load cycle is bit-exact). Loading verifies byte
counts against the declared shapes and rejects unknown format versions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DatasetFormatError

FORMAT_VERSION = 1

_SPLIT_FILES = {
    "train_inputs": ("train_inputs.bin", "train", "input"),
    "train_outputs": ("train_outputs.bin", "train", "output"),
    "test_inputs": ("test_inputs.bin", "test", "input"),
    "test_outputs": ("test_outputs.bin", "test", "output"),
}


@dataclass
class Dataset:
    """Paired sampled input/output functions with a train/test split."""

    name: str
    input_grid: np.ndarray    # (n, d_in)
    output_grid: np.ndarray   # (m, d_out)
    train_inputs: np.ndarray  # (N_train, n)
    train_outputs: np.ndarray # (N_train, m)
    test_inputs: np.ndarray   # (N_test, n)
    test_outputs: np.ndarray  # (N_test, m)
    seed: int = 0
    provenance: str = ""
    prng: str = field(default_factory=lambda: f"numpy.random PCG64 via default_rng/SeedSequence (numpy {np.__version__})")

    def __post_init__(self) -> None:
        for attr in ("input_grid", "output_grid"):
            g = np.asarray(getattr(self, attr), dtype=float)
            if g.ndim == 1:
                g = g[:, None]
            setattr(self, attr, g)
        for attr in ("train_inputs", "train_outputs", "test_inputs", "test_outputs"):
            setattr(self, attr, np.atleast_2d(np.asarray(getattr(self, attr), dtype=float)))
        n, m = self.input_grid.shape[0], self.output_grid.shape[0]
        if self.train_inputs.shape[1] != n or self.test_inputs.shape[1] != n:
            raise ValueError("input sample columns must match the input grid size")
        if self.train_outputs.shape[1] != m or self.test_outputs.shape[1] != m:
            raise ValueError("output sample columns must match the output grid size")
        if self.train_inputs.shape[0] != self.train_outputs.shape[0]:
            raise ValueError("train split row counts differ")
        if self.test_inputs.shape[0] != self.test_outputs.shape[0]:
            raise ValueError("test split row counts differ")
        for attr in ("train_inputs", "train_outputs", "test_inputs", "test_outputs"):
            if not np.isfinite(getattr(self, attr)).all():
                raise ValueError(f"{attr} contains non-finite values")

    @property
    def n_train(self) -> int:
        return self.train_inputs.shape[0]

    @property
    def n_test(self) -> int:
        return self.test_inputs.shape[0]


def _grid_to_json(grid: np.ndarray) -> dict:
    return {"kind": "points", "shape": list(grid.shape), "points": grid.tolist()}


def _grid_from_json(entry: dict) -> np.ndarray:
    if entry.get("kind") != "points":
        raise DatasetFormatError(f"unsupported grid kind {entry.get('kind')!r}")
    grid = np.asarray(entry["points"], dtype=float)
    if list(grid.shape) != list(entry["shape"]):
        raise DatasetFormatError(
            f"grid shape {list(grid.shape)} does not match declared {entry['shape']}"
        )
    return grid


def save_dataset(ds: Dataset, directory) -> None:
    """Write the dataset directory; round-tripping through load is bit-exact."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for attr, (fname, _, _) in _SPLIT_FILES.items():
        arr = np.ascontiguousarray(getattr(ds, attr), dtype="<f8")
        (directory / fname).write_bytes(arr.tobytes())
    manifest = {
        "format_version": FORMAT_VERSION,
        "name": ds.name,
        "seed": int(ds.seed),
        "prng": ds.prng,
        "grids": {
            "input": _grid_to_json(ds.input_grid),
            "output": _grid_to_json(ds.output_grid),
        },
        "splits": {"train": ds.n_train, "test": ds.n_test},
        "dtype": "f64",
        "endianness": "little",
        "provenance": ds.provenance,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_dataset(directory) -> Dataset:
    """Read a dataset directory, verifying format version and byte counts."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise DatasetFormatError(f"{directory} has no manifest.json")
    manifest = json.loads(manifest_path.read_text())
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise DatasetFormatError(
            f"unsupported format_version {version!r}; this build reads {FORMAT_VERSION}"
        )
    if manifest.get("dtype") != "f64" or manifest.get("endianness") != "little":
        raise DatasetFormatError("container must be little-endian float64")
    input_grid = _grid_from_json(manifest["grids"]["input"])
    output_grid = _grid_from_json(manifest["grids"]["output"])
    sizes = {"input": input_grid.shape[0], "output": output_grid.shape[0]}
    splits = manifest["splits"]
    arrays = {}
    for attr, (fname, split, side) in _SPLIT_FILES.items():
        rows, cols = int(splits[split]), sizes[side]
        path = directory / fname
        if not path.is_file():
            raise DatasetFormatError(f"missing {fname}")
        data = path.read_bytes()
        expected = rows * cols * 8
        if len(data) != expected:
            raise DatasetFormatError(
                f"{fname}: expected {expected} bytes ({rows}x{cols} float64), found {len(data)}"
            )
        arrays[attr] = np.frombuffer(data, dtype="<f8").reshape(rows, cols).copy()
    ds = Dataset(
        name=manifest["name"],
        input_grid=input_grid,
        output_grid=output_grid,
        seed=manifest.get("seed", 0),
        provenance=manifest.get("provenance", ""),
        **arrays,
    )
    ds.prng = manifest.get("prng", ds.prng)
    return ds


def manifest_sha256(directory) -> str:
    """Hash of the manifest file, used to make report rows self-describing."""
    import hashlib

    return hashlib.sha256((Path(directory) / "manifest.json").read_bytes()).hexdigest()
