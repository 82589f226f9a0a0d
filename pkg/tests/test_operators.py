import numpy as np
import pytest

from fluxlim import _kernels as K
from fluxlim.errors import PositivityError
from fluxlim.grid import GridSpec, ScalarField, VectorField, integrate
from fluxlim.fluid import project
from fluxlim.operators import (
    FaceFlux,
    advect_conservative,
    chemo_flux,
    chemo_flux_div,
    div_face_to_cc,
    grad_cc_to_face,
    inner_cells,
    inner_faces,
    laplacian_neumann,
)
from fluxlim.sensitivity import FluxLimiter

GRIDS = [GridSpec((16,)), GridSpec((12, 10), (1.0, 0.7)), GridSpec((8, 7, 6))]


def _random_flux(grid, rng):
    F = FaceFlux(grid, [rng.standard_normal(grid.face_shape(a)) for a in range(grid.dim)])
    # zero normal flux on walls, as for every physical flux
    VectorField.enforce_no_slip(F)
    return F


def _random_velocity(grid, rng):
    u = VectorField(grid, [rng.standard_normal(grid.face_shape(a)) for a in range(grid.dim)]).enforce_no_slip()
    return project(u, 1.0, tol=1e-15)[0]


@pytest.mark.parametrize("grid", GRIDS)
def test_laplacian_of_constant_is_zero(grid, backend):
    assert np.max(np.abs(laplacian_neumann(ScalarField.constant(grid, 3.7)).values)) == 0.0


def test_laplacian_cosine_second_order(backend):
    errs = []
    L = 2.0
    for N in (64, 128):
        g = GridSpec((N,), (L,))
        f = ScalarField.from_function(g, lambda x: np.cos(np.pi * x / L))
        exact = -((np.pi / L) ** 2) * f.values
        errs.append(np.max(np.abs(laplacian_neumann(f).values - exact)))
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.2)


@pytest.mark.parametrize("grid", GRIDS)
def test_laplacian_integrates_to_zero(grid, rng, backend):
    f = ScalarField(grid, rng.random(grid.shape))
    lap = laplacian_neumann(f)
    scale = np.abs(lap.values).sum() * grid.cell_volume
    assert abs(integrate(lap)) <= 1e-13 * scale


@pytest.mark.parametrize("grid", GRIDS)
def test_grad_of_linear_and_walls(grid):
    a = 1.75
    f = ScalarField.from_function(grid, lambda *x: a * x[0])
    G = grad_cc_to_face(f)
    inner = [slice(None)] * grid.dim
    inner[0] = slice(1, -1)
    assert np.allclose(G[0][tuple(inner)], a, atol=1e-12, rtol=0)
    assert G.boundary_normal_max() == 0.0
    assert np.max(np.abs(grad_cc_to_face(ScalarField.constant(grid, 1.0))[0])) == 0.0


@pytest.mark.parametrize("grid", GRIDS)
def test_div_of_zero_and_telescoping(grid, rng, backend):
    zero = FaceFlux(grid)
    assert np.max(np.abs(div_face_to_cc(zero).values)) == 0.0
    F = _random_flux(grid, rng)
    d = div_face_to_cc(F)
    assert abs(integrate(d)) <= 1e-13 * np.abs(d.values).sum() * grid.cell_volume


@pytest.mark.parametrize("grid", GRIDS)
def test_div_grad_is_laplacian(grid, rng, backend):
    f = ScalarField(grid, rng.random(grid.shape))
    assert np.array_equal(div_face_to_cc(grad_cc_to_face(f)).values, laplacian_neumann(f).values)


@pytest.mark.parametrize("grid", GRIDS)
def test_advection(grid, rng, backend):
    f = ScalarField(grid, rng.random(grid.shape))
    assert np.max(np.abs(advect_conservative(f, VectorField(grid)).values)) == 0.0
    u = _random_velocity(grid, rng) if grid.dim > 1 else VectorField(grid)
    out = advect_conservative(f, u)
    assert abs(integrate(out)) <= 1e-13 * max(np.abs(out.values).sum() * grid.cell_volume, 1e-300)
    const = advect_conservative(ScalarField.constant(grid, 2.5), u)
    assert np.max(np.abs(const.values)) <= 1e-12 * max(1.0, u.linf())


@pytest.mark.parametrize("grid", GRIDS)
def test_chemo_flux_div(grid, rng, backend):
    lim = FluxLimiter(1.0, 1.0)
    n = ScalarField(grid, rng.random(grid.shape))
    c = ScalarField(grid, rng.random(grid.shape))
    assert np.max(np.abs(chemo_flux_div(n, ScalarField.constant(grid, 1.0), lim).values)) == 0.0
    assert np.max(np.abs(chemo_flux_div(ScalarField.zeros(grid), c, lim).values)) == 0.0
    out = chemo_flux_div(n, c, lim)
    assert abs(integrate(out)) <= 1e-13 * np.abs(out.values).sum() * grid.cell_volume


def test_chemo_flux_rejects_negative_n():
    g = GridSpec((8,))
    n = ScalarField(g, np.r_[np.ones(7), -1e-6])
    with pytest.raises(PositivityError, match="positivity violated"):
        chemo_flux_div(n, ScalarField.zeros(g), FluxLimiter())


@pytest.mark.parametrize("grid", GRIDS)
def test_chemo_no_outflow_from_empty_cells(grid, rng):
    # the upwind value is taken from the cell the drift leaves, so empty cells emit nothing
    lim = FluxLimiter(1.0, 0.5)
    nv = rng.random(grid.shape)
    nv[nv < 0.4] = 0.0
    n = ScalarField(grid, nv)
    c = ScalarField(grid, rng.random(grid.shape))
    F = chemo_flux(n, c, lim)
    for a in range(grid.dim):
        Fa = np.moveaxis(F[a], a, 0)
        na = np.moveaxis(nv, a, 0)
        # face k sits between cells k-1 and k; positive flux leaves k-1, negative leaves k
        left_empty = na[:-1] == 0
        right_empty = na[1:] == 0
        interior = Fa[1:-1]
        assert np.all(interior[left_empty] <= 0.0)
        assert np.all(interior[right_empty] >= 0.0)


# operator algebra on randomized 16^3 fields, relative tolerance 1e-12

G16 = GridSpec((16, 16, 16))


def test_summation_by_parts_16cube(rng, backend):
    g = ScalarField(G16, rng.standard_normal(G16.shape))
    F = _random_flux(G16, rng)
    lhs = inner_cells(g, div_face_to_cc(F))
    rhs = -inner_faces(grad_cc_to_face(g), F)
    scale = np.sqrt(inner_cells(g, g) * inner_faces(F, F)) * sum(G16.inv_h)
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_laplacian_symmetric_nsd_16cube(rng, backend):
    f = ScalarField(G16, rng.standard_normal(G16.shape))
    g = ScalarField(G16, rng.standard_normal(G16.shape))
    lf, lg = laplacian_neumann(f), laplacian_neumann(g)
    scale = np.sqrt(inner_cells(lf, lf) * inner_cells(g, g))
    assert abs(inner_cells(lf, g) - inner_cells(f, lg)) <= 1e-12 * scale
    assert inner_cells(lf, f) <= 1e-12 * inner_cells(f, f)


def test_div_grad_identity_16cube(rng, backend):
    f = ScalarField(G16, rng.standard_normal(G16.shape))
    a = div_face_to_cc(grad_cc_to_face(f)).values
    b = laplacian_neumann(f).values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))
