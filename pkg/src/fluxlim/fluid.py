"""Time-dependent Stokes flow on the MAC grid by incremental projection.

``u_t = Lap u + grad P + (n + m) grad Phi``, ``div u = 0``, ``u = 0`` on walls.
A step builds a tentative velocity (explicit or backward-Euler viscous
update) that already carries the previous pressure gradient, then removes
the remaining gradient part with a Neumann solve for the pressure
increment.  Carrying the old pressure makes a gradient-type force produce
exactly ``u = 0`` at steady state instead of an O(dt) spurious flow.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels as K
from .errors import CFLError, SolverError
from .grid import GridSpec, ScalarField, VectorField
from .linalg import ShiftedLaplacian, SolveReport, require_converged

TOL_PROJ = 1e-8


@dataclass(frozen=True)
class Potential:
    """Affine gravitational potential ``Phi(x) = g . x`` (``kind='zero'`` means ``g = 0``)."""

    kind: str = "zero"
    g: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("zero", "linear"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        g = tuple(float(x) for x in self.g)
        if any(not np.isfinite(x) for x in g):
            raise ValueError("potential gradient must be finite")
        object.__setattr__(self, "g", g)

    def gradient(self, dim: int) -> tuple[float, ...]:
        if self.kind == "zero":
            return (0.0,) * dim
        if len(self.g) != dim:
            raise ValueError(f"potential has {len(self.g)} components, grid has dim {dim}")
        return self.g

    def is_zero(self) -> bool:
        return self.kind == "zero" or not any(self.g)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "g": list(self.g)}


def buoyancy_force(n: ScalarField, m: ScalarField, phi: Potential) -> VectorField:
    """``(n + m)`` averaged to faces times the face-normal component of ``grad Phi``."""
    grid = n.grid
    g = phi.gradient(grid.dim)
    rho = n.values + m.values
    comps = []
    for a in range(grid.dim):
        if g[a] == 0.0:
            comps.append(np.zeros(grid.face_shape(a)))
        else:
            comps.append(K.numpy_kernels.face_average(rho, a, grid.periodic[a]) * g[a])
    return VectorField(grid, comps).enforce_no_slip()


@lru_cache(maxsize=16)
def pressure_operator(grid: GridSpec) -> ShiftedLaplacian:
    kinds = ["periodic" if p else "neumann" for p in grid.periodic]
    return ShiftedLaplacian(kinds, grid.cells, grid.spacing)


@lru_cache(maxsize=16)
def velocity_operator(grid: GridSpec, axis: int) -> ShiftedLaplacian:
    kinds = []
    for b, p in enumerate(grid.periodic):
        if p:
            kinds.append("periodic")
        else:
            kinds.append("dirichlet_face" if b == axis else "dirichlet_cell")
    return ShiftedLaplacian(kinds, grid.cells, grid.spacing)


def _interior(grid: GridSpec, axis: int) -> tuple:
    idx = [slice(None)] * grid.dim
    if not grid.periodic[axis]:
        idx[axis] = slice(1, -1)
    return tuple(idx)


def poisson_solve_neumann(rhs: ScalarField, tol: float = 1e-12, precond: str = "none", x0=None):
    """Mean-zero ``phi`` with ``Lap phi = rhs`` (the mean of ``rhs`` is removed first).

    Raises :class:`SolverError` ("poisson diverged") past the iteration cap.
    """
    grid = rhs.grid
    op = pressure_operator(grid)
    b = rhs.values - rhs.values.mean()
    # Lap phi = b  <=>  (-Lap) phi = -b, which is the SPD form CG needs
    x, report = op.solve(-b, 0.0, 1.0, x0=None if x0 is None else np.asarray(x0), tol=tol, precond=precond)
    require_converged(report, "poisson")
    return ScalarField(grid, x - x.mean()), report


def div_mac(u: VectorField) -> ScalarField:
    return ScalarField(u.grid, K.div(u.components, u.grid))


def grad_mac(p: ScalarField) -> VectorField:
    return VectorField(p.grid, K.grad(p.values, p.grid))


def viscous_dt(grid: GridSpec) -> float:
    """Explicit viscous limit ``1 / (4 sum 1/h_i^2)`` (``h^2/(4 dim)`` on cubes)."""
    return 1.0 / (4.0 * sum(ih * ih for ih in grid.inv_h))


def project(u_star: VectorField, dt: float, tol: float = 1e-12, precond: str = "none", x0=None):
    """Remove the gradient part of ``u_star``; returns ``(u, phi, report)`` with ``u = u_star - dt grad phi``."""
    rhs = div_mac(u_star)
    rhs.values /= dt
    phi, report = poisson_solve_neumann(rhs, tol, precond, x0)
    g = K.grad(phi.values, u_star.grid)
    u = VectorField(u_star.grid, [us - dt * ga for us, ga in zip(u_star.components, g)])
    return u.enforce_no_slip(), phi, report


@dataclass
class StokesReport:
    poisson: SolveReport
    viscous: list
    div_inf: float


def stokes_step(
    u: VectorField,
    force: VectorField,
    dt: float,
    tol: float = 1e-12,
    implicit: bool = False,
    precond: str = "none",
    tol_proj: float = TOL_PROJ,
    p_prev: ScalarField | None = None,
    report: list | None = None,
):
    """Advance Stokes flow by ``dt``; returns ``(u_new, P)``.

    ``implicit=False`` is the explicit viscous update, which requires
    ``dt <= viscous_dt(grid)``; ``implicit=True`` uses backward Euler.
    ``P = p_prev - phi`` where ``phi`` is the pressure increment, so
    ``u_new = u + dt (Lap u_star + f + grad P)``; ``P`` has mean zero.
    In 1-D the only admissible velocity is ``u = 0``.
    """
    grid = u.grid
    if grid.dim == 1:
        return VectorField(grid), ScalarField.zeros(grid)
    if dt <= 0:
        raise ValueError("dt must be positive")
    viscous = []
    if p_prev is not None:
        gp = K.grad(p_prev.values, grid)
        force = VectorField(grid, [fa + ga for fa, ga in zip(force.components, gp)]).enforce_no_slip()
    if not implicit:
        if dt > viscous_dt(grid) * (1.0 + 1e-12):
            raise CFLError(f"viscous CFL: dt={dt:.3e} exceeds {viscous_dt(grid):.3e}")
        comps = [
            ua + dt * (K.mac_laplacian(ua, a, grid) + fa)
            for a, (ua, fa) in enumerate(zip(u.components, force.components))
        ]
    else:
        comps = []
        for a, (ua, fa) in enumerate(zip(u.components, force.components)):
            inner = _interior(grid, a)
            b = ua[inner] + dt * fa[inner]
            x, rep = velocity_operator(grid, a).solve(b, 1.0, dt, x0=ua[inner], tol=tol, precond=precond)
            require_converged(rep, "viscous solve")
            viscous.append(rep)
            new = np.zeros(grid.face_shape(a))
            new[inner] = x
            comps.append(new)
    u_star = VectorField(grid, comps).enforce_no_slip()
    u_new, phi, prep = project(u_star, dt, tol, precond)
    div_inf = float(np.max(np.abs(div_mac(u_new).values)))
    if div_inf > tol_proj:
        raise SolverError(f"projection left max|div u| = {div_inf:.3e} > {tol_proj:.1e}")
    if report is not None:
        report.append(StokesReport(prep, viscous, div_inf))
    p_new = -phi.values if p_prev is None else p_prev.values - phi.values
    return u_new, ScalarField(grid, p_new - p_new.mean())
