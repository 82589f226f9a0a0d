"""Writers and readers for ``diag.csv``, raw snapshots and legacy VTK."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .diagnostics import FIELDS, DiagRecord
from .grid import StateSnapshot

MAGIC = "FLXS1"
HEADER_BYTES = 64


def _fmt(x) -> str:
    # repr round-trips exactly, so equal runs give byte-identical files
    return str(x) if isinstance(x, int) else repr(float(x))


def write_diag_csv(records, path, meta: dict | None = None) -> None:
    meta = dict(meta or {})
    head = " ".join(f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in meta.items())
    with open(path, "w", newline="") as fh:
        fh.write(f"# fluxlim diag v1 {head} columns: {','.join(FIELDS)}\n".replace("  ", " "))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELDS)
        for r in records:
            w.writerow([_fmt(v) for v in r.row()])


def read_diag_csv(path) -> tuple[list[DiagRecord], dict]:
    """Returns ``(records, meta)``; ``meta`` holds the ``key=value`` pairs of the comment line."""
    meta = {}
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        try:
                            meta[k] = float(v)
                        except ValueError:
                            meta[k] = v
            elif line.strip():
                body.append(line)
    reader = csv.DictReader(body)
    missing = set(FIELDS[:21]) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    return [DiagRecord.from_row(row) for row in reader], meta


# -- snapshots -----------------------------------------------------------------

def write_array(path, name: str, values: np.ndarray, t: float) -> None:
    """Raw little-endian float64 array behind a 64-byte ASCII header."""
    values = np.ascontiguousarray(values, dtype="<f8")
    dims = list(values.shape) + [1] * (3 - values.ndim)
    header = f"{MAGIC} {values.ndim} {dims[0]} {dims[1]} {dims[2]} {name} {t!r}"
    if len(header) > HEADER_BYTES - 1:
        raise ValueError("snapshot header too long")
    with open(path, "wb") as fh:
        fh.write(header.ljust(HEADER_BYTES - 1).encode("ascii") + b"\n")
        fh.write(values.tobytes())


def read_array(path) -> tuple[str, np.ndarray, float]:
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens = raw[:HEADER_BYTES].decode("ascii").split()
    if not tokens or tokens[0] != MAGIC:
        raise ValueError(f"{path}: not a fluxlim snapshot")
    ndim = int(tokens[1])
    shape = tuple(int(x) for x in tokens[2 : 2 + ndim])
    name, t = tokens[5], float(tokens[6])
    values = np.frombuffer(raw[HEADER_BYTES:], dtype="<f8").reshape(shape).copy()
    return name, values, t


def write_snapshot(state: StateSnapshot, directory, index: int, fmt: str = "raw") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt in ("raw", "both"):
        for name in ("n", "c", "m", "p"):
            p = directory / f"{name}_{index:05d}.bin"
            write_array(p, name, getattr(state, name).values, state.t)
            paths.append(p)
        for a, comp in enumerate(state.u.components):
            p = directory / f"u{a}_{index:05d}.bin"
            write_array(p, f"u{a}", comp, state.t)
            paths.append(p)
    if fmt in ("vtk", "both"):
        p = directory / f"state_{index:05d}.vtk"
        write_vtk(state, p)
        paths.append(p)
    return paths


def _cell_velocity(state: StateSnapshot) -> np.ndarray:
    grid = state.grid
    out = np.zeros(grid.shape + (3,))
    for a, comp in enumerate(state.u.components):
        if grid.periodic[a]:
            out[..., a] = 0.5 * (comp + np.roll(comp, -1, axis=a))
        else:
            lo = [slice(None)] * grid.dim
            hi = [slice(None)] * grid.dim
            lo[a], hi[a] = slice(0, -1), slice(1, None)
            out[..., a] = 0.5 * (comp[tuple(lo)] + comp[tuple(hi)])
    return out


def write_vtk(state: StateSnapshot, path) -> None:
    """Legacy ASCII VTK, cell data on structured points (x fastest)."""
    grid = state.grid
    cells = list(grid.cells) + [1] * (3 - grid.dim)
    h = list(grid.spacing) + [1.0] * (3 - grid.dim)
    order = tuple(reversed(range(grid.dim)))
    lines = [
        "# vtk DataFile Version 3.0",
        f"fluxlim t={state.t!r}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {cells[0] + 1} {cells[1] + 1} {cells[2] + 1}",
        "ORIGIN 0 0 0",
        f"SPACING {h[0]!r} {h[1]!r} {h[2]!r}",
        f"CELL_DATA {grid.size}",
    ]
    for name in ("n", "c", "m", "p"):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(repr(float(v)) for v in getattr(state, name).values.transpose(order).ravel())
    vel = _cell_velocity(state).transpose(order + (grid.dim,))
    lines.append("VECTORS u double")
    lines.extend(" ".join(repr(float(x)) for x in v) for v in vel.reshape(-1, 3))
    Path(path).write_text("\n".join(lines) + "\n")
