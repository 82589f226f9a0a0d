"""Reference solutions: the spatially homogeneous ODE system, an RK4
integrator for it, manufactured solutions and the Poiseuille channel."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate as spi
from scipy import special

from .fluid import Potential, stokes_step
from .grid import GridSpec, ScalarField, StateSnapshot, VectorField, _sum
from .integrator import SchemeConfig, reaction_exact, step
from .sensitivity import FluxLimiter, eval as s_eval, eval_prime as s_prime


# -- homogeneous system -------------------------------------------------------

def _c_quad(n0: float, m0: float, c0: float, t: float) -> float:
    # tau = t - s; e^{-tau} kills everything beyond tau = 60
    upper = min(t, 60.0)
    val, _ = spi.quad(
        lambda tau: math.exp(-tau) * reaction_exact(n0, m0, t - tau)[1],
        0.0, upper, epsabs=1e-14, epsrel=1e-13, limit=400,
    )
    return c0 * math.exp(-t) + val


def homogeneous_exact(n0: float, m0: float, c0: float, t: float) -> tuple[float, float, float]:
    """``(n, c, m)`` at time ``t`` for ``n' = -nm, m' = -mn, c' = -c + m``.

    ``m`` is the closed-form reaction solution; ``c`` comes from adaptive
    quadrature of ``int_0^t e^{-(t-s)} m(s) ds``, except for ``n0 = m0``
    where an exponential-integral form is used while it stays finite.
    """
    if min(n0, m0, c0) < 0 or t < 0:
        raise ValueError("homogeneous_exact needs nonnegative inputs")
    n, m = reaction_exact(n0, m0, t)
    if n0 == m0 and m0 > 0 and (1.0 + m0 * t) / m0 < 700.0:
        a = 1.0 / m0
        integral = math.exp(-t - a) * (special.expi(a + t) - special.expi(a))
        c = c0 * math.exp(-t) + integral
        if math.isfinite(c):
            return n, c, m
    return n, _c_quad(n0, m0, c0, t), m


def _ode_rhs(y):
    n, c, m = y
    return np.array([-n * m, -c + m, -m * n])


def ode_reference(n0: float, m0: float, c0: float, t_end: float, dt: float):
    """Classical RK4 on the homogeneous system; returns ``(t, y)`` with ``y[:, 0:3] = n, c, m``."""
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if dt > t_end / 100 * (1 + 1e-12):
        raise ValueError("dt must be at most t_end/100")
    steps = int(math.ceil(t_end / dt - 1e-9))
    ts = np.empty(steps + 1)
    ys = np.empty((steps + 1, 3))
    y = np.array([n0, c0, m0], dtype=float)
    ts[0], ys[0] = 0.0, y
    t = 0.0
    for k in range(steps):
        h = min(dt, t_end - t)
        k1 = _ode_rhs(y)
        k2 = _ode_rhs(y + 0.5 * h * k1)
        k3 = _ode_rhs(y + 0.5 * h * k2)
        k4 = _ode_rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t_end if k == steps - 1 else t + h
        ts[k + 1], ys[k + 1] = t, y
    return ts, ys


def homogeneous_pde(n0, m0, c0, t_end=1.0, dt=1e-4, cells=(4, 4), diffusion="explicit") -> tuple[float, float, float]:
    """Run the full PDE step on homogeneous data with ``Phi = 0``; returns the cell means."""
    grid = GridSpec(tuple(cells))
    st = StateSnapshot(
        ScalarField.constant(grid, n0), ScalarField.constant(grid, c0), ScalarField.constant(grid, m0),
        VectorField(grid), ScalarField.zeros(grid), 0.0,
    )
    cfg = SchemeConfig(dt=dt, adaptive=False, diffusion=diffusion)
    lim, phi = FluxLimiter(), Potential()
    steps = int(round(t_end / dt))
    for _ in range(steps):
        st = step(st, cfg, lim, phi, dt=dt)
    return tuple(float(f.values.mean()) for f in (st.n, st.c, st.m))


# -- manufactured solutions ---------------------------------------------------

Fields = Callable[[tuple, float], dict]


@dataclass
class MmsCase:
    """Exact fields and the sources that make them solve the system (with ``u = 0``).

    ``exact(x, t)`` and ``sources(x, t)`` take a tuple of coordinate arrays
    and return dicts with keys ``n``, ``c``, ``m``.  ``dt_rule(h)`` gives the
    step used at spacing ``h``; ``threshold`` is the minimum observed order.
    """

    id: str
    dim: int
    exact: Fields
    sources: Fields
    limiter: FluxLimiter = field(default_factory=FluxLimiter)
    t_end: float = 0.1
    dt_rule: Callable[[float], float] = lambda h: 0.2 * h * h
    threshold: float = 0.0
    fields: tuple = ("n", "c", "m")


def _pure_diffusion_exact(x, t):
    X = x[0]
    return {
        "n": 2.0 + np.cos(np.pi * X) * math.exp(-np.pi**2 * t),
        "c": np.zeros_like(X),
        "m": np.zeros_like(X),
    }


def _zero_sources(x, t):
    z = np.zeros_like(x[0])
    return {"n": z, "c": z, "m": z}


_A_N, _A_C, _A_M = 0.5, 0.5, 0.25


def _chemo_exact(x, t):
    cx = np.cos(np.pi * x[0])
    e = math.exp(-t)
    return {"n": 1.0 + _A_N * cx * e, "c": 1.0 + _A_C * cx, "m": 0.5 + _A_M * cx * e}


def _chemo_sources(lim: FluxLimiter):
    def sources(x, t):
        X = x[0]
        pi = np.pi
        e = math.exp(-t)
        cs, sn = np.cos(pi * X), np.sin(pi * X)
        n, n_t, n_x, n_xx = 1 + _A_N * cs * e, -_A_N * cs * e, -_A_N * pi * sn * e, -_A_N * pi**2 * cs * e
        c, c_t, c_x, c_xx = 1 + _A_C * cs, 0.0 * X, -_A_C * pi * sn, -_A_C * pi**2 * cs
        m, m_t, m_xx = 0.5 + _A_M * cs * e, -_A_M * cs * e, -_A_M * pi**2 * cs * e
        sig = c_x * c_x
        S, Sp = s_eval(lim, sig), s_prime(lim, sig)
        # (n S(c_x^2) c_x)_x expanded
        flux_x = n_x * S * c_x + n * Sp * 2.0 * c_x * c_xx * c_x + n * S * c_xx
        return {
            "n": n_t - n_xx + flux_x + n * m,
            "c": c_t - c_xx + c - m,
            "m": m_t - m_xx + m * n,
        }

    return sources


def _constant_exact(x, t):
    one = np.ones_like(x[0])
    return {"n": 1.5 * one, "c": 0.0 * one, "m": 0.0 * one}


def mms_cases() -> dict[str, MmsCase]:
    lim = FluxLimiter(k_s=1.0, theta=1.0)
    return {
        "pure-diffusion-1d": MmsCase(
            "pure-diffusion-1d", 1, _pure_diffusion_exact, _zero_sources, lim, t_end=0.1, threshold=1.8,
            fields=("n",),
        ),
        "chemo-1d": MmsCase("chemo-1d", 1, _chemo_exact, _chemo_sources(lim), lim, t_end=0.1, threshold=0.8),
        "constant-2d": MmsCase("constant-2d", 2, _constant_exact, _zero_sources, lim, t_end=0.05),
    }


@dataclass
class ErrorRow:
    h: float
    dt: float
    field: str
    norm: str
    error: float


def mms_run(case: MmsCase, grid: GridSpec, dt: float | None = None, t_end: float | None = None) -> list[ErrorRow]:
    """Integrate ``case`` from its exact initial data; errors at ``t_end``."""
    if case.dim != grid.dim:
        raise ValueError(f"case {case.id} is {case.dim}-D, grid is {grid.dim}-D")
    h = max(grid.spacing)
    dt = dt or case.dt_rule(h)
    t_end = case.t_end if t_end is None else t_end
    x = grid.mesh()
    ex0 = case.exact(x, 0.0)
    st = StateSnapshot(
        ScalarField(grid, ex0["n"]), ScalarField(grid, ex0["c"]), ScalarField(grid, ex0["m"]),
        VectorField(grid), ScalarField.zeros(grid), 0.0,
    )
    cfg = SchemeConfig(dt=dt, adaptive=False, diffusion="explicit")
    src = lambda t: case.sources(x, t)
    steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    for k in range(steps):
        this = t_end - st.t if k == steps - 1 else dt
        st = step(st, cfg, case.limiter, Potential(), dt=this, sources=src)
    ex = case.exact(x, t_end)
    rows = []
    for name in case.fields:
        err = getattr(st, name).values - ex[name]
        rows.append(ErrorRow(h, dt, name, "linf", float(np.max(np.abs(err)))))
        rows.append(ErrorRow(h, dt, name, "l2", math.sqrt(grid.cell_volume * _sum(err * err))))
    return rows


def convergence_order(errors) -> float:
    """Least-squares slope of ``log e`` against ``log h``."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two (h, e) pairs")
    h = np.array([p[0] for p in errors], dtype=float)
    e = np.array([p[1] for p in errors], dtype=float)
    if np.any(e <= 0) or np.any(h <= 0):
        raise ValueError("errors and spacings must be positive")
    if np.any(np.diff(h) >= 0):
        raise ValueError("h must be strictly decreasing")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


@dataclass
class OrderStudy:
    case: str
    rows: list
    orders: dict  # (field, norm) -> observed order
    threshold: float

    @property
    def passed(self) -> bool:
        linf = [v for (f, nrm), v in self.orders.items() if nrm == "linf"]
        return all(v >= self.threshold for v in linf)


def mms_study(case_id: str, resolutions=(32, 64, 128)) -> OrderStudy:
    cases = mms_cases()
    if case_id not in cases:
        raise KeyError(case_id)
    case = cases[case_id]
    rows = []
    for N in resolutions:
        rows.extend(mms_run(case, GridSpec((N,) * case.dim)))
    orders = {}
    for f in case.fields:
        for nrm in ("linf", "l2"):
            pts = [(r.h, r.error) for r in rows if r.field == f and r.norm == nrm]
            if all(e > 0 for _, e in pts):
                orders[(f, nrm)] = convergence_order(pts)
    return OrderStudy(case_id, rows, orders, case.threshold)


def write_error_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "dt", "field", "norm", "error"])
        for r in rows:
            w.writerow([repr(r.h), repr(r.dt), r.field, r.norm, repr(r.error)])


# -- Poiseuille channel --------------------------------------------------------

def poiseuille_error(N: int, force: float = 1.0, nx: int = 4) -> float:
    """Sup error of the steady channel flow against ``(f/2) y (1 - y)``.

    The box is periodic in ``x`` and walled in ``y``; a uniform body force
    ``(f, 0)`` drives the flow, which backward Euler with a huge step takes
    to steady state.
    """
    grid = GridSpec((nx, N), (1.0, 1.0), (True, False))
    f = VectorField(grid, [np.full(grid.face_shape(0), force), np.zeros(grid.face_shape(1))])
    u = VectorField(grid)
    for _ in range(4):
        u, _p = stokes_step(u, f, 1e10, tol=1e-13, implicit=True, precond="lu")
    y = grid.centers(1)
    exact = 0.5 * force * y * (1.0 - y)
    return float(np.max(np.abs(u.components[0] - exact[None, :])))


def poiseuille_study(resolutions=(16, 32, 64)) -> list[tuple[int, float]]:
    return [(N, poiseuille_error(N)) for N in resolutions]


ORACLE_CASES = ("homogeneous", "poiseuille")
