"""Lie-split time stepping for the coupled system.

One step, in fixed order:

1. Stokes: ``u, P`` from the buoyancy force of the current ``n + m``.
2. Transport and diffusion of ``n, c, m`` with the new ``u`` frozen
   (upwind advection, upwind chemotactic drift for ``n``, Neumann
   diffusion either explicit or backward Euler).
3. Pointwise reaction, solved in closed form: ``n' = m' = -n m`` keeps
   ``n - m`` fixed, and ``c' = -c + m`` uses the step mean of that ``m``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .diagnostics import DiagRecord, equilibrium_targets, grad_sq_integral, record
from .errors import BlowUpError, CFLError, FluxlimError, PositivityError
from .fluid import Potential, buoyancy_force, pressure_operator, stokes_step, viscous_dt
from .grid import TOL_POS, GridSpec, ScalarField, StateSnapshot, VectorField, _sum, integrate
from .linalg import ShiftedLaplacian, require_converged
from .sensitivity import FluxLimiter

log = logging.getLogger(__name__)


@dataclass
class SchemeConfig:
    """Time-step controls.

    ``dt`` is the largest step taken.  With ``adaptive`` the step is the
    largest ``dt / 2**k`` below :func:`stable_dt` (a dyadic ladder keeps
    cached factorizations reusable); otherwise ``dt`` is used as is and
    must be stable.  ``diffusion='implicit-be'`` also makes the viscous
    Stokes update backward Euler.
    """

    dt: float = 1.0 / 64
    adaptive: bool = True
    diffusion: str = "explicit"
    cfl_safety: float = 0.8
    tol_poisson: float = 1e-12
    tol_proj: float = 1e-8
    tol_implicit: float = 1e-12
    precond: str = "auto"
    tol_pos: float = TOL_POS

    def __post_init__(self):
        if self.diffusion not in ("explicit", "implicit-be"):
            raise ValueError(f"diffusion must be 'explicit' or 'implicit-be', got {self.diffusion!r}")
        if not (0 < self.cfl_safety <= 1):
            raise ValueError("cfl_safety must lie in (0, 1]")
        for name in ("dt", "tol_poisson", "tol_proj", "tol_implicit", "tol_pos"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def implicit(self) -> bool:
        return self.diffusion == "implicit-be"


# -- pointwise reactions ----------------------------------------------------

def _phi1(x):
    """``(1 - exp(-x)) / x`` with the removable singularity at 0 filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - 0.5 * x, -np.expm1(-safe) / safe)


def _reaction(n, m, dt):
    """Closed-form ``n' = m' = -n m`` over ``dt``; returns ``(n, m, int_0^dt m)``."""
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    d = n - m
    big = np.where(d >= 0, n, m)  # the species that survives
    small = np.where(d >= 0, m, n)
    ad = np.abs(d)
    x = ad * dt
    q = dt * _phi1(x)
    small_new = small * np.exp(-x) / (1.0 + small * q)
    # int_0^dt small(s) ds = log(1 + small0 * dt * phi1(x))
    small_int = np.log1p(small * q)
    pos = d >= 0
    m_new = np.where(pos, small_new, small_new + ad)
    n_new = m_new + d
    m_int = np.where(pos, small_int, small_int + ad * dt)
    return n_new, m_new, m_int


def reaction_exact(n, m, dt):
    """Exact solution of ``n' = -n m, m' = -m n`` after ``dt``.

    ``n - m`` is conserved, so with ``d = n - m > 0``
    ``m(dt) = d m / ((d + m) e^{d dt} - m)`` and ``n(dt) = m(dt) + d``
    (roles swap for ``d < 0``; ``m/(1 + m dt)`` when ``d = 0``).
    """
    if np.any(np.asarray(n) < 0) or np.any(np.asarray(m) < 0):
        raise PositivityError("positivity violated")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    n_new, m_new, _ = _reaction(n, m, dt)
    if np.ndim(n_new) == 0:
        return float(n_new), float(m_new)
    return n_new, m_new


def reaction_mean_m(n, m, dt):
    """Time average of ``m`` over the exact reaction substep."""
    if dt == 0:
        return np.asarray(m, dtype=float)
    return _reaction(n, m, dt)[2] / dt


def c_reaction_exact(c, m, dt):
    """``c' = -c + m`` with ``m`` frozen: ``c e^{-dt} + m (1 - e^{-dt})``."""
    if np.any(np.asarray(c) < 0) or np.any(np.asarray(m) < 0):
        raise PositivityError("positivity violated")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if math.isinf(dt):
        return m
    w = -math.expm1(-dt)
    out = np.asarray(c, dtype=float) + (np.asarray(m, dtype=float) - c) * w
    return float(out) if out.ndim == 0 else out


# -- step size --------------------------------------------------------------

def _rates(grid: GridSpec, speeds, explicit: bool) -> tuple[float, float]:
    diff = sum(2.0 * ih * ih for ih in grid.inv_h) if explicit else 0.0
    adv = sum(2.0 * s * ih for s, ih in zip(speeds, grid.inv_h))
    return diff, adv


def stable_dt(state: StateSnapshot, cfg: SchemeConfig, lim: FluxLimiter) -> float:
    """Largest step keeping the explicit transport update a convex combination.

    Explicit diffusion contributes ``dt <= 1/(4 sum 1/h^2)`` and the face
    speeds ``|u| + S |dc|`` contribute ``dt <= 1/(4 sum s_a/h_a)``; with both
    halves the diagonal weight of every cell stays nonnegative.
    """
    grid = state.grid
    u = state.u.components if grid.dim > 1 else None
    speeds = K.face_speeds(state.c.values, u, lim, grid)
    diff, adv = _rates(grid, speeds, not cfg.implicit)
    bounds = [cfg.dt]
    if diff > 0:
        bounds.append(cfg.cfl_safety / (2.0 * diff))
    if adv > 0:
        bounds.append(cfg.cfl_safety / (2.0 * adv))
    return min(bounds)


# -- one step ---------------------------------------------------------------

@dataclass
class StepInfo:
    dt: float = 0.0
    nm: float = 0.0
    gradm2: float = 0.0
    div_inf: float = 0.0
    solves: list = field(default_factory=list)


def _implicit_diffuse(op: ShiftedLaplacian, rhs, dt, cfg, x0):
    x, rep = op.solve(rhs, 1.0, dt, x0=x0, tol=cfg.tol_implicit, precond=cfg.precond)
    require_converged(rep, "implicit diffusion")
    # backward Euler conserves mass exactly; restore what the iterative solve left over
    target, got = _sum(rhs), _sum(x)
    if got > 0 and target > 0:
        x *= target / got
    return x, rep


def step(
    state: StateSnapshot,
    cfg: SchemeConfig,
    lim: FluxLimiter,
    phi: Potential,
    dt: float | None = None,
    sources=None,
    info: StepInfo | None = None,
) -> StateSnapshot:
    """Advance ``state`` by ``dt`` (default ``cfg.dt``).

    ``sources(t)`` may return a dict with arrays ``'n'``, ``'c'``, ``'m'``
    added explicitly during the transport substep (manufactured solutions).
    Raises :class:`CFLError` when the velocity produced by the Stokes
    substep makes ``dt`` unstable for transport.
    """
    grid = state.grid
    dt = cfg.dt if dt is None else dt
    info = info if info is not None else StepInfo()
    info.dt = dt
    n, c, m = state.n.values, state.c.values, state.m.values

    # 1. Stokes
    if grid.dim > 1:
        force = buoyancy_force(state.n, state.m, phi)
        if state.u.linf() == 0.0 and force.linf() == 0.0:
            u_new, p_new = VectorField(grid), ScalarField.zeros(grid)
        else:
            rep = []
            u_new, p_new = stokes_step(
                state.u, force, dt, tol=cfg.tol_poisson, implicit=cfg.implicit,
                precond=cfg.precond, tol_proj=cfg.tol_proj, p_prev=state.p, report=rep,
            )
            info.div_inf = rep[0].div_inf
            info.solves.append(rep[0])
        ucomp = u_new.components
    else:
        u_new, p_new = VectorField(grid), ScalarField.zeros(grid)
        ucomp = None

    speeds = K.face_speeds(c, ucomp, lim, grid)
    diff_rate, adv_rate = _rates(grid, speeds, not cfg.implicit)
    if dt * (diff_rate + adv_rate) > 1.0 + 1e-12:
        raise CFLError(f"transport CFL: dt={dt:.3e} with rate {diff_rate + adv_rate:.3e}")

    # 2. transport + diffusion
    def transport(f):
        return -K.advect(f, ucomp, grid) if ucomp is not None else np.zeros_like(f)

    rn = transport(n) - K.chemo_div(n, c, lim, grid)
    rc = transport(c)
    rm = transport(m)
    if sources is not None:
        s = sources(state.t)
        rn = rn + s.get("n", 0.0)
        rc = rc + s.get("c", 0.0)
        rm = rm + s.get("m", 0.0)
    if not cfg.implicit:
        n1 = n + dt * (K.laplacian(n, grid) + rn)
        c1 = c + dt * (K.laplacian(c, grid) + rc)
        m1 = m + dt * (K.laplacian(m, grid) + rm)
        m_eval = m
    else:
        op = pressure_operator(grid)
        n1, r1 = _implicit_diffuse(op, (n + dt * rn).ravel(), dt, cfg, n.ravel())
        c1, r2 = _implicit_diffuse(op, (c + dt * rc).ravel(), dt, cfg, c.ravel())
        m1, r3 = _implicit_diffuse(op, (m + dt * rm).ravel(), dt, cfg, m.ravel())
        n1, c1, m1 = (a.reshape(grid.shape) for a in (n1, c1, m1))
        info.solves.extend([r1, r2, r3])
        m_eval = m1

    for name, f in (("n", n1), ("c", c1), ("m", m1)):
        if not np.all(np.isfinite(f)):
            raise FluxlimError(f"non-finite field {name} at t={state.t:.6g}")
        lo = float(f.min())
        if lo < -cfg.tol_pos:
            idx = np.unravel_index(int(np.argmin(f)), f.shape)
            raise PositivityError(f"positivity violated: {name}{list(idx)} = {lo:.3e} at t={state.t:.6g}")
    # roundoff-level negatives (|x| <= tol_pos) are clipped before the reaction
    n1 = np.maximum(n1, 0.0)
    c1 = np.maximum(c1, 0.0)
    m1 = np.maximum(m1, 0.0)

    # 3. reactions
    n2, m2, m_int = _reaction(n1, m1, dt)
    c2 = c1 + (m_int / dt - c1) * (-math.expm1(-dt))

    info.nm = grid.cell_volume * _sum(m1 - m2)
    info.gradm2 = dt * grad_sq_integral(m_eval, grid)
    return StateSnapshot(
        ScalarField(grid, n2), ScalarField(grid, c2), ScalarField(grid, m2), u_new, p_new, state.t + dt
    )


# -- driver -----------------------------------------------------------------

class RunAborted(FluxlimError):
    """A run stopped early; carries the records so far and the last good state."""

    def __init__(self, cause: Exception, records, state):
        self.cause = cause
        self.records = records
        self.state = state
        super().__init__(str(cause))


@dataclass
class RunResult:
    records: list
    snapshots: list
    state: StateSnapshot
    targets: tuple
    steps: int
    div_sup: float


def _next_multiple(t: float, every: float | None, t_end: float) -> float:
    if not every:
        return t_end
    k = math.floor(t / every + 1e-9) + 1
    return min(k * every, t_end)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(1.0, abs(b))


def run(
    state: StateSnapshot,
    scheme: SchemeConfig,
    lim: FluxLimiter,
    phi: Potential,
    t_end: float,
    record_every: float | None = None,
    snapshot_every: float | None = None,
    guard: float = 1e6,
    on_snapshot=None,
    sources=None,
    max_steps: int | None = None,
) -> RunResult:
    """Integrate from ``state.t`` to ``t_end``.

    A :class:`DiagRecord` is taken at the start, every ``record_every`` and
    at ``t_end``.  ``guard`` is relative: the run aborts with "blow-up
    suspected" once ``max n`` exceeds ``guard * max n_0``.  Snapshots go to
    ``on_snapshot(state)`` or are kept in the result.
    """
    if t_end < state.t:
        raise ValueError("t_end before start time")
    state.validate(scheme.tol_pos)
    grid = state.grid
    targets = equilibrium_targets(
        max(integrate(state.n), 0.0), max(integrate(state.m), 0.0), grid.volume
    )
    n0max = float(np.max(np.abs(state.n.values)))
    guard_abs = guard * n0max
    records = [record(state, targets=targets)]
    snapshots = []

    def snap(s):
        if on_snapshot is not None:
            on_snapshot(s)
        else:
            snapshots.append(s.copy())

    if snapshot_every:
        snap(state)

    t_rec = _next_multiple(state.t, record_every, t_end)
    t_snap = _next_multiple(state.t, snapshot_every, t_end) if snapshot_every else math.inf
    inc_nm = inc_gm = 0.0
    div_sup = 0.0
    steps = 0
    last_dt = 0.0
    while state.t < t_end and not _close(state.t, t_end):
        target = min(t_rec, t_snap, t_end)
        remaining = target - state.t
        limit = stable_dt(state, scheme, lim)
        if not scheme.adaptive and scheme.dt > limit * (1.0 + 1e-12) and scheme.dt <= remaining:
            raise RunAborted(CFLError(f"dt={scheme.dt:.3e} exceeds stable bound {limit:.3e}"), records, state)
        rung = scheme.dt
        if scheme.adaptive:
            k = 0
            while rung > limit and k < 60:
                rung *= 0.5
                k += 1
        dt = remaining if remaining <= rung * (1.0 + 1e-12) else rung
        info = StepInfo()
        for _attempt in range(30):
            try:
                new = step(state, scheme, lim, phi, dt=dt, sources=sources, info=info)
                break
            except CFLError:
                dt *= 0.5
                info = StepInfo()
            except FluxlimError as exc:
                raise RunAborted(exc, records, state) from exc
        else:
            raise RunAborted(CFLError("could not find a stable step"), records, state)
        steps += 1
        last_dt = dt
        inc_nm += info.nm
        inc_gm += info.gradm2
        div_sup = max(div_sup, info.div_inf)
        if _close(new.t, target):
            new.t = target
        state = new
        nmax = float(np.max(state.n.values))
        if nmax > guard_abs:
            raise RunAborted(
                BlowUpError(f"blow-up suspected: max n = {nmax:.3e} > guard {guard_abs:.3e} at t={state.t:.6g}"),
                records, state,
            )
        if max_steps is not None and steps >= max_steps:
            raise RunAborted(FluxlimError(f"step limit {max_steps} reached at t={state.t:.6g}"), records, state)
        if state.t >= t_rec or _close(state.t, t_rec):
            rec = record(
                state, records[-1], targets=targets, increments=(inc_nm, inc_gm),
                div_u_sup=div_sup, step=steps, dt=last_dt,
            )
            records.append(rec)
            inc_nm = inc_gm = 0.0
            t_rec = _next_multiple(state.t, record_every, t_end)
            if _close(t_rec, state.t):
                t_rec = t_end
        if snapshot_every and (state.t >= t_snap or _close(state.t, t_snap)):
            snap(state)
            t_snap = _next_multiple(state.t, snapshot_every, t_end)
    return RunResult(records, snapshots, state, targets, steps, div_sup)
