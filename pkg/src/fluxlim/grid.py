"""Structured box grids, cell/face field containers and reductions.

Scalars live at cell centres, velocity components on the faces normal to
their axis (MAC staggering).  A face array for axis ``a`` has ``N_a + 1``
entries along ``a`` on a walled axis (entries ``0`` and ``N_a`` sit on the
wall) and ``N_a`` entries on a periodic axis.

Values are stored as C-ordered ``ndarray`` of shape ``grid.shape``;
``values.ravel()`` is the flat row-major layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import NonFiniteError

TOL_POS = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned box ``[0, L_0] x ... x [0, L_{d-1}]`` split into ``N_i`` cells per axis."""

    cells: tuple[int, ...]
    lengths: tuple[float, ...] = None
    periodic: tuple[bool, ...] = None

    def __post_init__(self):
        cells = tuple(int(n) for n in self.cells)
        dim = len(cells)
        if dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
        lengths = self.lengths if self.lengths is not None else (1.0,) * dim
        lengths = tuple(float(x) for x in lengths)
        periodic = self.periodic if self.periodic is not None else (False,) * dim
        periodic = tuple(bool(p) for p in periodic)
        if len(lengths) != dim or len(periodic) != dim:
            raise ValueError("cells, lengths and periodic must have one entry per axis")
        if any(n < 4 for n in cells):
            raise ValueError(f"need at least 4 cells per axis, got {cells}")
        if any(not np.isfinite(x) or x <= 0 for x in lengths):
            raise ValueError(f"lengths must be positive, got {lengths}")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "periodic", periodic)

    @classmethod
    def uniform(cls, dim: int, n: int, length: float = 1.0) -> "GridSpec":
        return cls((n,) * dim, (length,) * dim)

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.cells))

    h = spacing

    @property
    def inv_h(self) -> tuple[float, ...]:
        return tuple(n / L for L, n in zip(self.lengths, self.cells))

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def walled(self) -> bool:
        return not any(self.periodic)

    def face_shape(self, axis: int) -> tuple[int, ...]:
        shape = list(self.cells)
        if not self.periodic[axis]:
            shape[axis] += 1
        return tuple(shape)

    def centers(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def faces(self, axis: int) -> np.ndarray:
        n = self.cells[axis] + (0 if self.periodic[axis] else 1)
        return np.arange(n) * self.spacing[axis]

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Cell-centre coordinate arrays, each of shape ``self.shape``."""
        return np.meshgrid(*(self.centers(a) for a in range(self.dim)), indexing="ij")

    def face_mesh(self, axis: int) -> tuple[np.ndarray, ...]:
        coords = [self.centers(b) for b in range(self.dim)]
        coords[axis] = self.faces(axis)
        return np.meshgrid(*coords, indexing="ij")

    def to_dict(self) -> dict:
        out = {"cells": list(self.cells), "lengths": list(self.lengths)}
        if any(self.periodic):
            out["periodic"] = list(self.periodic)
        return out


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("non-finite field")


@dataclass
class ScalarField:
    grid: GridSpec
    values: np.ndarray
    bc: str = "neumann-zero-flux"

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.size != self.grid.size:
            raise ValueError(f"field has {values.size} values, grid has {self.grid.size} cells")
        self.values = values.reshape(self.grid.shape)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "ScalarField":
        return cls(grid, np.broadcast_to(func(*grid.mesh()), grid.shape))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.bc)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values + other.values, self.bc)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values - other.values, self.bc)

    def __mul__(self, k: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * k, self.bc)

    __rmul__ = __mul__


@dataclass
class FaceField:
    """Per-axis face-centred arrays; the base of :class:`VectorField` and
    :class:`~fluxlim.operators.FaceFlux`."""

    grid: GridSpec
    components: list = field(default=None)

    def __post_init__(self):
        if self.components is None:
            self.components = [np.zeros(self.grid.face_shape(a)) for a in range(self.grid.dim)]
        comps = []
        for a, comp in enumerate(self.components):
            comp = np.ascontiguousarray(comp, dtype=float)
            if comp.shape != self.grid.face_shape(a):
                raise ValueError(
                    f"component {a} has shape {comp.shape}, expected {self.grid.face_shape(a)}"
                )
            comps.append(comp)
        if len(comps) != self.grid.dim:
            raise ValueError("need one component per axis")
        self.components = comps

    def __getitem__(self, axis: int) -> np.ndarray:
        return self.components[axis]

    def copy(self):
        return type(self)(self.grid, [c.copy() for c in self.components])

    def boundary_normal_max(self) -> float:
        """Largest ``|value|`` on wall faces (0 for a valid no-flux / no-slip field)."""
        out = 0.0
        for a, comp in enumerate(self.components):
            if self.grid.periodic[a]:
                continue
            ends = np.take(comp, [0, -1], axis=a)
            out = max(out, float(np.max(np.abs(ends))))
        return out

    def linf(self) -> float:
        return max(float(np.max(np.abs(c))) for c in self.components)

    def l2(self) -> float:
        """``sqrt(sum_faces |u|^2 * cell_volume)``, summed over components."""
        sq = sum(_sum(c * c) for c in self.components)
        return float(np.sqrt(sq * self.grid.cell_volume))


class VectorField(FaceField):
    """No-slip velocity: wall-normal face values are identically zero."""

    bc = "dirichlet-zero"

    def enforce_no_slip(self) -> "VectorField":
        for a, comp in enumerate(self.components):
            if not self.grid.periodic[a]:
                idx = [slice(None)] * self.grid.dim
                idx[a] = 0
                comp[tuple(idx)] = 0.0
                idx[a] = -1
                comp[tuple(idx)] = 0.0
        return self


@dataclass
class StateSnapshot:
    n: ScalarField
    c: ScalarField
    m: ScalarField
    u: VectorField
    p: ScalarField
    t: float = 0.0

    @property
    def grid(self) -> GridSpec:
        return self.n.grid

    def validate(self, tol_pos: float = TOL_POS) -> None:
        grid = self.grid
        for name in ("c", "m", "p"):
            if getattr(self, name).grid != grid:
                raise ValueError(f"field {name} lives on a different grid")
        if self.u.grid != grid:
            raise ValueError("velocity lives on a different grid")
        if self.t < 0:
            raise ValueError("negative time")
        for name in ("n", "c", "m"):
            vals = getattr(self, name).values
            _check_finite(vals)
            lo = float(vals.min())
            if lo < -tol_pos:
                from .errors import PositivityError

                idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
                raise PositivityError(f"positivity violated: {name}[{idx}] = {lo:.3e}")
        for comp in self.u.components:
            _check_finite(comp)

    def copy(self) -> "StateSnapshot":
        return StateSnapshot(
            self.n.copy(), self.c.copy(), self.m.copy(), self.u.copy(), self.p.copy(), self.t
        )


def _sum(values: np.ndarray) -> float:
    # np.add.reduce on a contiguous 1-D buffer is pairwise summation, so the
    # result does not depend on how the caller traverses the grid
    return float(np.add.reduce(np.ascontiguousarray(values).ravel()))


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


def integrate(f: ScalarField, grid: GridSpec | None = None) -> float:
    """Midpoint-rule integral ``(prod h_i) * sum(values)``."""
    vals = _values(f)
    _check_finite(vals)
    grid = grid or f.grid
    return grid.cell_volume * _sum(vals)


def lp_norm(f: ScalarField, p: float, grid: GridSpec | None = None) -> float:
    vals = _values(f)
    if not (p >= 1):
        raise ValueError("invalid exponent")
    _check_finite(vals)
    if np.isinf(p):
        return float(np.max(np.abs(vals))) if vals.size else 0.0
    grid = grid or f.grid
    a = np.abs(vals)
    scale = float(a.max())
    if scale == 0.0:
        return 0.0
    # factor out the max so large p does not overflow
    return scale * (grid.cell_volume * _sum((a / scale) ** p)) ** (1.0 / p)


def grad_linf(f: ScalarField, grid: GridSpec | None = None) -> float:
    """Max over faces of ``|difference| / h``; wall faces contribute 0."""
    from ._kernels import numpy_kernels as K

    vals = _values(f)
    _check_finite(vals)
    grid = grid or f.grid
    return max(
        (float(np.max(np.abs(g))) for g in K.grad(vals, grid.inv_h, grid.periodic)), default=0.0
    )


def as_grid(cells: Sequence[int] | GridSpec, lengths=None) -> GridSpec:
    if isinstance(cells, GridSpec):
        return cells
    return GridSpec(tuple(cells), lengths)
