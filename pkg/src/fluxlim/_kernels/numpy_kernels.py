"""Pure-numpy stencil kernels.

Reference implementation for every kernel; the compiled module mirrors the
walled-box subset with the same floating-point operation order.  All
functions take raw arrays plus ``inv_h`` (``1/h`` per axis) and
``periodic`` flags.
"""
from __future__ import annotations

import numpy as np


def _sl(ndim: int, axis: int, s) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = s
    return tuple(idx)


def grad(f, inv_h, periodic):
    """Centred differences on every face; wall faces are 0."""
    d = f.ndim
    out = []
    for a in range(d):
        if periodic[a]:
            g = (f - np.roll(f, 1, axis=a)) * inv_h[a]
        else:
            shape = list(f.shape)
            shape[a] += 1
            g = np.zeros(shape)
            g[_sl(d, a, slice(1, -1))] = (f[_sl(d, a, slice(1, None))] - f[_sl(d, a, slice(None, -1))]) * inv_h[a]
        out.append(g)
    return out


def div(faces, inv_h, periodic):
    d = len(faces)
    out = None
    for a in range(d):
        F = faces[a]
        if periodic[a]:
            term = (np.roll(F, -1, axis=a) - F) * inv_h[a]
        else:
            term = (F[_sl(d, a, slice(1, None))] - F[_sl(d, a, slice(None, -1))]) * inv_h[a]
        out = term if out is None else out + term
    return out


def laplacian(f, inv_h, periodic):
    return div(grad(f, inv_h, periodic), inv_h, periodic)


def _left_right(f, a, periodic):
    d = f.ndim
    if periodic:
        return np.roll(f, 1, axis=a), f
    return f[_sl(d, a, slice(None, -1))], f[_sl(d, a, slice(1, None))]


def _interior(shape_like, a, periodic):
    if periodic:
        return tuple(slice(None) for _ in range(shape_like.ndim))
    return _sl(shape_like.ndim, a, slice(1, -1))


def upwind_flux(f, vel, a, periodic):
    """``vel * f_upwind`` on the faces of axis ``a`` (wall faces 0)."""
    left, right = _left_right(f, a, periodic)
    flux = np.zeros(vel.shape)
    inner = _interior(vel, a, periodic)
    v = vel[inner]
    flux[inner] = v * np.where(v > 0, left, right)
    return flux


def advect(f, u, inv_h, periodic):
    """``div(u f)`` with first-order upwind face values."""
    fluxes = [upwind_flux(f, u[a], a, periodic[a]) for a in range(f.ndim)]
    return div(fluxes, inv_h, periodic)


def face_average(f, a, periodic):
    """Mean of the two cells adjacent to each face of axis ``a`` (wall faces 0)."""
    left, right = _left_right(f, a, periodic)
    if periodic:
        return 0.5 * (left + right)
    shape = list(f.shape)
    shape[a] += 1
    out = np.zeros(shape)
    out[_sl(f.ndim, a, slice(1, -1))] = 0.5 * (left + right)
    return out


def _cell_average(G, b, periodic):
    d = G.ndim
    if periodic:
        return 0.5 * (G + np.roll(G, -1, axis=b))
    return 0.5 * (G[_sl(d, b, slice(None, -1))] + G[_sl(d, b, slice(1, None))])


def chemo_velocity(c, S, inv_h, periodic):
    """Face drift ``S(|grad c|^2) * dc/dx_a`` per axis.

    ``|grad c|^2`` at a face is the exact normal difference squared plus the
    squared face-mean of the neighbouring cells' tangential gradients.
    """
    d = c.ndim
    G = grad(c, inv_h, periodic)
    T = [_cell_average(G[b], b, periodic[b]) for b in range(d)]
    vel = []
    for a in range(d):
        inner = _interior(G[a], a, periodic[a])
        dc = G[a][inner]
        g2 = dc * dc
        for b in range(d):
            if b == a:
                continue
            left, right = _left_right(T[b], a, periodic[a])
            tb = 0.5 * (left + right)
            g2 = g2 + tb * tb
        v = np.zeros(G[a].shape)
        v[inner] = S(g2) * dc
        vel.append(v)
    return vel


def chemo_div(n, c, S, inv_h, periodic):
    """``div(n S(|grad c|^2) grad c)`` with upwinded ``n``."""
    vel = chemo_velocity(c, S, inv_h, periodic)
    fluxes = [upwind_flux(n, vel[a], a, periodic[a]) for a in range(n.ndim)]
    return div(fluxes, inv_h, periodic)


def face_speeds(c, u, S, inv_h, periodic):
    """Per-axis max over faces of ``|u_a| + |S * dc/dx_a|``."""
    vel = chemo_velocity(c, S, inv_h, periodic)
    out = []
    for a in range(c.ndim):
        s = np.abs(vel[a])
        if u is not None:
            s = s + np.abs(u[a])
        out.append(float(s.max()))
    return out


def mac_laplacian(ua, a, inv_h, periodic):
    """Vector Laplacian of the face component ``ua`` (normal to axis ``a``).

    No-slip: wall-normal faces are held at 0 and tangential walls use the
    reflected ghost ``-u`` so the wall value is 0.
    """
    d = ua.ndim
    out = np.zeros(ua.shape)
    for b in range(d):
        ih2 = inv_h[b] * inv_h[b]
        if periodic[b]:
            term = (np.roll(ua, -1, axis=b) - 2.0 * ua + np.roll(ua, 1, axis=b)) * ih2
        elif b == a:
            term = np.zeros(ua.shape)
            term[_sl(d, b, slice(1, -1))] = (
                ua[_sl(d, b, slice(2, None))] - 2.0 * ua[_sl(d, b, slice(1, -1))] + ua[_sl(d, b, slice(None, -2))]
            ) * ih2
        else:
            pad = np.concatenate(
                [-ua[_sl(d, b, slice(0, 1))], ua, -ua[_sl(d, b, slice(-1, None))]], axis=b
            )
            term = (pad[_sl(d, b, slice(2, None))] - 2.0 * ua + pad[_sl(d, b, slice(None, -2))]) * ih2
        out = out + term
    if not periodic[a]:
        out[_sl(d, a, 0)] = 0.0
        out[_sl(d, a, -1)] = 0.0
    return out
