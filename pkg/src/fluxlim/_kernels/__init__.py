"""Stencil kernel dispatch.

The compiled extension ``_ckernels`` is used when it imports and the grid
is a walled box; otherwise (periodic axes, tabulated limiters, or a
missing build) the numpy reference kernels run.  ``FLUXLIM_BACKEND``
(``auto`` | ``cython`` | ``numpy``) forces a choice and ``FLUXLIM_THREADS``
caps the OpenMP threads of the compiled kernels.
"""
from __future__ import annotations

import logging
import os

import numpy as np

from . import numpy_kernels

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_requested = os.environ.get("FLUXLIM_BACKEND", "auto").lower()
if _requested not in ("auto", "cython", "numpy"):
    raise ImportError(f"FLUXLIM_BACKEND must be auto, cython or numpy, got {_requested!r}")
if _requested == "cython" and _ckernels is None:
    raise ImportError("FLUXLIM_BACKEND=cython but the compiled kernels are not built")

BACKEND = "numpy" if (_requested == "numpy" or _ckernels is None) else "cython"

if _ckernels is not None:
    _ckernels.set_num_threads(int(os.environ.get("FLUXLIM_THREADS", os.cpu_count() or 1)))


def available_backends() -> list[str]:
    return ["numpy"] + (["cython"] if _ckernels is not None else [])


def set_backend(name: str) -> str:
    """Switch backend at runtime; returns the previous one."""
    global BACKEND
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available")
    prev, BACKEND = BACKEND, name
    return prev


def _use_c(grid, lim=None) -> bool:
    if BACKEND != "cython" or not grid.walled:
        return False
    return lim is None or lim.kind == "prototype"


def _as3(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    return a.reshape(a.shape + (1,) * (3 - a.ndim))


def _ih3(grid):
    ih = list(grid.inv_h) + [0.0] * (3 - grid.dim)
    return ih


def _faces3(comps, grid):
    shape3 = grid.cells + (1,) * (3 - grid.dim)
    out = [_as3(c) for c in comps]
    for a in range(grid.dim, 3):
        s = list(shape3)
        s[a] += 1
        out.append(np.zeros(s))
    return out


def grad(f, grid):
    return numpy_kernels.grad(f, grid.inv_h, grid.periodic)


def div(faces, grid):
    if _use_c(grid):
        out = np.empty(grid.cells + (1,) * (3 - grid.dim))
        _ckernels.div(*_faces3(faces, grid), *_ih3(grid), out)
        return out.reshape(grid.shape)
    return numpy_kernels.div(faces, grid.inv_h, grid.periodic)


def laplacian(f, grid):
    if _use_c(grid):
        out = np.empty(grid.cells + (1,) * (3 - grid.dim))
        _ckernels.laplacian(_as3(f), *_ih3(grid), out)
        return out.reshape(grid.shape)
    return numpy_kernels.laplacian(f, grid.inv_h, grid.periodic)


def advect(f, u, grid):
    if _use_c(grid):
        out = np.empty(grid.cells + (1,) * (3 - grid.dim))
        _ckernels.advect(_as3(f), *_faces3(u, grid), *_ih3(grid), out)
        return out.reshape(grid.shape)
    return numpy_kernels.advect(f, u, grid.inv_h, grid.periodic)


def chemo_velocity(c, lim, grid):
    if _use_c(grid, lim):
        V = _faces3([np.zeros(grid.face_shape(a)) for a in range(grid.dim)], grid)
        _ckernels.chemo_velocity(_as3(c), lim.k_s, lim.theta, *_ih3(grid), *V)
        return [V[a].reshape(grid.face_shape(a)) for a in range(grid.dim)]
    return numpy_kernels.chemo_velocity(c, lim.eval_array, grid.inv_h, grid.periodic)


def chemo_div(n, c, lim, grid):
    if _use_c(grid, lim):
        out = np.empty(grid.cells + (1,) * (3 - grid.dim))
        _ckernels.chemo_div(_as3(n), _as3(c), lim.k_s, lim.theta, *_ih3(grid), out)
        return out.reshape(grid.shape)
    return numpy_kernels.chemo_div(n, c, lim.eval_array, grid.inv_h, grid.periodic)


def face_speeds(c, u, lim, grid):
    if _use_c(grid, lim):
        if u is None:
            u = [np.zeros(grid.face_shape(a)) for a in range(grid.dim)]
        s = _ckernels.face_speeds(_as3(c), *_faces3(u, grid), lim.k_s, lim.theta, *_ih3(grid))
        return list(s[: grid.dim])
    return numpy_kernels.face_speeds(c, u, lim.eval_array, grid.inv_h, grid.periodic)


def mac_laplacian(ua, axis, grid):
    if _use_c(grid):
        shape = grid.face_shape(axis)
        out = np.empty(shape + (1,) * (3 - grid.dim))
        _ckernels.mac_laplacian(_as3(ua), axis, *_ih3(grid), out)
        return out.reshape(shape)
    return numpy_kernels.mac_laplacian(ua, axis, grid.inv_h, grid.periodic)


def set_threads(n: int) -> None:
    if _ckernels is not None:
        _ckernels.set_num_threads(int(n))
