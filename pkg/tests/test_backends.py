"""The compiled kernels must reproduce the numpy reference kernels."""
import numpy as np
import pytest

from fluxlim import _kernels as K
from fluxlim.grid import GridSpec
from fluxlim.sensitivity import FluxLimiter

pytestmark = pytest.mark.skipif("cython" not in K.available_backends(), reason="extension not built")

GRIDS = [GridSpec((16,)), GridSpec((12, 9)), GridSpec((8, 7, 6)), GridSpec((10, 12, 8), (1.0, 2.0, 0.5))]


def _both(fn):
    out = {}
    for b in ("numpy", "cython"):
        prev = K.set_backend(b)
        try:
            out[b] = fn()
        finally:
            K.set_backend(prev)
    return out["numpy"], out["cython"]


def _close(a, b, rel=1e-13):
    a, b = np.asarray(a), np.asarray(b)
    assert a.shape == b.shape
    scale = max(np.max(np.abs(a)), 1e-300)
    assert np.max(np.abs(a - b)) <= rel * scale


@pytest.mark.parametrize("grid", GRIDS)
@pytest.mark.parametrize("theta", [0.0, 0.5, 1.0, 2.0])
def test_kernels_agree(grid, theta):
    rng = np.random.default_rng(7)
    lim = FluxLimiter(1.3, theta)
    f = rng.random(grid.shape)
    c = rng.random(grid.shape) * 3
    u = [rng.standard_normal(grid.face_shape(a)) for a in range(grid.dim)]
    for fn in (
        lambda: K.laplacian(f, grid),
        lambda: K.div(u, grid),
        lambda: K.advect(f, u, grid),
        lambda: K.chemo_div(f, c, lim, grid),
        lambda: K.face_speeds(c, u, lim, grid),
    ):
        _close(*_both(fn))
    for a in range(grid.dim):
        _close(*_both(lambda: K.chemo_velocity(c, lim, grid)[a]))
        _close(*_both(lambda: K.mac_laplacian(u[a], a, grid)))


def test_laplacian_bit_identical():
    grid = GridSpec((9, 8, 7))
    f = np.random.default_rng(1).random(grid.shape)
    a, b = _both(lambda: K.laplacian(f, grid))
    assert np.array_equal(a, b)


def test_periodic_grid_falls_back_to_numpy():
    grid = GridSpec((8, 8), periodic=(True, False))
    prev = K.set_backend("cython")
    try:
        assert not K._use_c(grid)
    finally:
        K.set_backend(prev)


def test_thread_count_roundtrip():
    K.set_threads(2)
    assert K._ckernels.get_num_threads() == 2
    K.set_threads(1)
