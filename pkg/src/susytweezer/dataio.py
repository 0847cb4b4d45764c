"""File formats: CSV with unit headers, JSON, and binary grid dumps.

CSV files carry a single ``#`` header line naming each column with its
unit. Binary dumps are row-major little-endian float64 preceded by one
JSON header line (shape, spacing, layout); complex fields interleave
(re, im).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grids import SpatialGrid, WaveFunction


def write_csv(path, columns: list[str], rows) -> None:
    """Write rows with a '# col1,col2,...' unit-annotated header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("# " + ",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing '#' header line")
        columns = [c.strip() for c in header[1:].split(",")]
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return columns, data


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with Path(path).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def write_field(path, array: np.ndarray, grid: SpatialGrid, kind: str) -> None:
    """Binary grid dump: one JSON header line, then raw little-endian
    float64. Complex fields are stored interleaved (re, im), real fields
    as-is; both row-major."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if kind == "wavefunction":
        if not np.iscomplexobj(array):
            raise ValueError("wavefunction dumps need a complex array")
        flat = np.empty(array.size * 2, dtype="<f8")
        flat[0::2] = array.real.ravel(order="C")
        flat[1::2] = array.imag.ravel(order="C")
        layout = "interleaved_re_im"
    elif kind == "density":
        flat = np.ascontiguousarray(array, dtype="<f8").ravel(order="C")
        layout = "real"
    else:
        raise ValueError(f"unknown dump kind {kind!r}")
    header = {
        "kind": kind,
        "layout": layout,
        "dtype": "<f8",
        "shape": list(array.shape),
        "spacing": list(grid.dx),
        "extents": list(grid.extents),
        "centers": list(grid.centers),
    }
    with path.open("wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(flat.tobytes())


def read_field(path) -> tuple[dict, np.ndarray]:
    path = Path(path)
    with path.open("rb") as fh:
        header = json.loads(fh.readline().decode())
        raw = np.frombuffer(fh.read(), dtype="<f8")
    shape = tuple(header["shape"])
    if header["layout"] == "interleaved_re_im":
        arr = (raw[0::2] + 1j * raw[1::2]).reshape(shape)
    else:
        arr = raw.reshape(shape)
    return header, arr


def dump_wavefunction(path, w: WaveFunction) -> None:
    write_field(path, w.psi, w.grid, kind="wavefunction")


def dump_density(path, w: WaveFunction) -> None:
    write_field(path, np.abs(w.psi) ** 2, w.grid, kind="density")
