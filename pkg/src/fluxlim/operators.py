"""Finite-volume spatial operators for the scalar equations.

All fluxes live on faces and every cell operator is the divergence of a
face flux that vanishes on walls, so each one integrates to zero over the
box (the no-flux condition holds exactly).
"""
from __future__ import annotations

import numpy as np

from . import _kernels as K
from .grid import TOL_POS, FaceField, ScalarField, VectorField
from .errors import PositivityError
from .sensitivity import FluxLimiter


class FaceFlux(FaceField):
    """Face-centred flux; wall-normal entries are 0 (no-flux)."""


def laplacian_neumann(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, K.laplacian(f.values, f.grid))


def grad_cc_to_face(f: ScalarField) -> FaceFlux:
    return FaceFlux(f.grid, K.grad(f.values, f.grid))


def div_face_to_cc(F: FaceField) -> ScalarField:
    return ScalarField(F.grid, K.div(F.components, F.grid))


def advect_conservative(f: ScalarField, u: VectorField) -> ScalarField:
    """``div(u f)`` with upwind face values of ``f``."""
    return ScalarField(f.grid, K.advect(f.values, u.components, f.grid))


def chemo_flux(n: ScalarField, c: ScalarField, lim: FluxLimiter) -> FaceFlux:
    """Face flux ``n_upwind * S(|grad c|^2) * dc/dx``."""
    _check_nonneg(n)
    vel = K.chemo_velocity(c.values, lim, n.grid)
    return FaceFlux(
        n.grid,
        [K.numpy_kernels.upwind_flux(n.values, vel[a], a, n.grid.periodic[a]) for a in range(n.grid.dim)],
    )


def chemo_flux_div(n: ScalarField, c: ScalarField, lim: FluxLimiter) -> ScalarField:
    _check_nonneg(n)
    return ScalarField(n.grid, K.chemo_div(n.values, c.values, lim, n.grid))


def _check_nonneg(n: ScalarField, tol: float = TOL_POS) -> None:
    lo = float(n.values.min())
    if lo < -tol:
        idx = np.unravel_index(int(np.argmin(n.values)), n.values.shape)
        raise PositivityError(f"positivity violated: n{list(idx)} = {lo:.3e}")


def inner_cells(f: ScalarField, g: ScalarField) -> float:
    """Discrete ``L^2`` inner product over cells."""
    return f.grid.cell_volume * float(np.add.reduce((f.values * g.values).ravel()))


def inner_faces(F: FaceField, G: FaceField) -> float:
    """Discrete ``L^2`` inner product over faces (each face carries one cell volume)."""
    total = sum(float(np.add.reduce((a * b).ravel())) for a, b in zip(F.components, G.components))
    return F.grid.cell_volume * total
