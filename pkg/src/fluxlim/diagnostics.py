"""Per-record measurements, equilibrium targets and the long-time audit.

``W^{1,inf}`` distances are ``max(sup|f|, sup|grad f|)``, not the sum; the
two norms are equivalent and the max keeps each term attributable.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import _kernels as K
from .grid import StateSnapshot, _sum, grad_linf, integrate

FIELDS = (
    "t", "mass_n", "mass_m", "mass_c",
    "linf_n", "linf_m", "linf_c", "linf_u", "l2_u",
    "w1inf_c", "w1inf_m",
    "cum_nm", "cum_gradm2",
    "min_n", "min_m", "min_c",
    "div_u_inf",
    "dist_n", "dist_c", "dist_m", "dist_u",
    # beyond the core set: instantaneous integrands, 1/2 int m^2, bookkeeping
    "int_nm", "int_gradm2", "energy_m", "div_u_sup", "step", "dt",
)


@dataclass
class DiagRecord:
    t: float
    mass_n: float
    mass_m: float
    mass_c: float
    linf_n: float
    linf_m: float
    linf_c: float
    linf_u: float
    l2_u: float
    w1inf_c: float
    w1inf_m: float
    cum_nm: float
    cum_gradm2: float
    min_n: float
    min_m: float
    min_c: float
    div_u_inf: float
    dist_n: float
    dist_c: float
    dist_m: float
    dist_u: float
    int_nm: float = 0.0
    int_gradm2: float = 0.0
    energy_m: float = 0.0
    div_u_sup: float = 0.0
    step: int = 0
    dt: float = 0.0

    def row(self) -> list:
        return [getattr(self, f) for f in FIELDS]

    @classmethod
    def from_row(cls, row: dict) -> "DiagRecord":
        kw = {}
        for f in fields(cls):
            if f.name in row:
                kw[f.name] = int(float(row[f.name])) if f.name == "step" else float(row[f.name])
        return cls(**kw)


def equilibrium_targets(mass_n0: float, mass_m0: float, volume: float) -> tuple[float, float]:
    """``(n_inf, m_inf)``: positive parts of the normalised initial mass difference."""
    if mass_n0 < 0 or mass_m0 < 0:
        raise ValueError("masses must be nonnegative")
    if not volume > 0:
        raise ValueError("volume must be positive")
    return max(mass_n0 - mass_m0, 0.0) / volume, max(mass_m0 - mass_n0, 0.0) / volume


def grad_sq_integral(values: np.ndarray, grid) -> float:
    """``sum_faces |difference/h|^2 * cell_volume`` (equals ``-<Lap f, f>``)."""
    return grid.cell_volume * sum(_sum(g * g) for g in K.grad(values, grid))


def record(
    state: StateSnapshot,
    prev: DiagRecord | None = None,
    dt_since_prev: float = 0.0,
    targets: tuple[float, float] = (0.0, 0.0),
    increments: tuple[float, float] | None = None,
    div_u_sup: float | None = None,
    step: int = 0,
    dt: float = 0.0,
) -> DiagRecord:
    """Measure ``state``.

    The running integrals of ``int n m`` and ``int |grad m|^2`` advance from
    ``prev`` by ``increments`` when the caller tracked them step by step,
    otherwise by the trapezoid rule over ``dt_since_prev``.
    """
    grid = state.grid
    n, c, m = state.n.values, state.c.values, state.m.values
    n_inf, m_inf = targets
    int_nm = grid.cell_volume * _sum(n * m)
    int_gm2 = grad_sq_integral(m, grid)
    if prev is None:
        cum_nm = cum_gm2 = 0.0
    elif increments is not None:
        cum_nm = prev.cum_nm + increments[0]
        cum_gm2 = prev.cum_gradm2 + increments[1]
    else:
        cum_nm = prev.cum_nm + 0.5 * dt_since_prev * (prev.int_nm + int_nm)
        cum_gm2 = prev.cum_gradm2 + 0.5 * dt_since_prev * (prev.int_gradm2 + int_gm2)
    linf = lambda a: float(np.max(np.abs(a)))
    gl_c, gl_m = grad_linf(c, grid), grad_linf(m, grid)
    linf_u = state.u.linf()
    div_inf = linf(K.div(state.u.components, grid)) if grid.dim > 1 else 0.0
    return DiagRecord(
        t=float(state.t),
        mass_n=integrate(n, grid),
        mass_m=integrate(m, grid),
        mass_c=integrate(c, grid),
        linf_n=linf(n),
        linf_m=linf(m),
        linf_c=linf(c),
        linf_u=linf_u,
        l2_u=state.u.l2(),
        w1inf_c=max(linf(c), gl_c),
        w1inf_m=max(linf(m), gl_m),
        cum_nm=cum_nm,
        cum_gradm2=cum_gm2,
        min_n=float(n.min()),
        min_m=float(m.min()),
        min_c=float(c.min()),
        div_u_inf=div_inf,
        dist_n=linf(n - n_inf),
        dist_c=max(linf(c - m_inf), gl_c),
        dist_m=max(linf(m - m_inf), gl_m),
        dist_u=linf_u,
        int_nm=int_nm,
        int_gradm2=int_gm2,
        energy_m=0.5 * grid.cell_volume * _sum(m * m),
        div_u_sup=max(div_inf, div_u_sup or 0.0),
        step=step,
        dt=dt,
    )


# -- audit ------------------------------------------------------------------

CHECKS = (
    "mass-monotone-n",
    "mass-monotone-m",
    "diff-conserved",
    "maxprin-m",
    "compare-c",
    "positivity",
    "cum-nm-bound",
    "cum-gradm2-bound",
    "div-free",
    "bounded-(1.9)",
    "converged-(1.10)",
)


@dataclass
class AuditTolerances:
    mass_rel: float = 1e-12
    diff_rel: float = 1e-10
    maxprin_m: float = 1e-10
    compare_c: float = 1e-10
    tol_pos: float = 1e-12
    cum: float = 1e-8
    div: float = 1e-8
    bound_factor: float = 10.0
    eps_conv: float = 1e-3
    check_convergence: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "AuditTolerances":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown audit tolerance(s): {sorted(unknown)}")
        return cls(**d)


@dataclass
class CheckResult:
    status: str
    slack: float
    t_violation: float | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "slack": None if not math.isfinite(self.slack) else self.slack,
            "t_violation": self.t_violation,
        }


@dataclass
class AuditReport:
    checks: dict
    tail_monotone: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status != "fail" for r in self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, r in self.checks.items() if r.status == "fail"]

    def to_dict(self) -> dict:
        return {k: r.to_dict() for k, r in self.checks.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [
            "fluxlim audit report",
            "W1,inf distances use max(sup|f|, sup|grad f|)",
            "slack = tolerance - observed (negative means violated)",
            "",
        ]
        for name, r in self.checks.items():
            tv = "" if r.t_violation is None else f"  first violation t={r.t_violation:.6g}"
            lines.append(f"{name:<20} {r.status.upper():<5} slack={r.slack:.3e}{tv}")
        if self.tail_monotone is not None:
            lines.append("")
            lines.append(f"tail within 2x of final distance: {'yes' if self.tail_monotone else 'no'} (informational)")
        lines.extend(self.notes)
        return "\n".join(lines) + "\n"


def _check(values_allowed_t) -> CheckResult:
    """Build a result from ``(allowed, observed, t)`` triples."""
    worst = math.inf
    t_first = None
    for allowed, observed, t in values_allowed_t:
        s = allowed - observed
        if not math.isfinite(observed):
            s = -math.inf
        if s < worst:
            worst = s
        if s < 0 and t_first is None:
            t_first = t
    return CheckResult("fail" if t_first is not None else "pass", worst, t_first)


def audit(
    records: list[DiagRecord],
    tol: AuditTolerances | None = None,
    targets: tuple[float, float] | None = None,
    initial: DiagRecord | None = None,
) -> AuditReport:
    tol = tol or AuditTolerances()
    if not records:
        raise ValueError("audit needs at least one record")
    ts = [r.t for r in records]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("records not time-sorted")
    r0 = initial or records[0]
    seq = list(zip(records, records[1:]))
    c = {}
    c["mass-monotone-n"] = _check((a.mass_n + tol.mass_rel * r0.mass_n, b.mass_n, b.t) for a, b in seq)
    c["mass-monotone-m"] = _check((a.mass_m + tol.mass_rel * r0.mass_m, b.mass_m, b.t) for a, b in seq)
    d0 = r0.mass_n - r0.mass_m
    scale = tol.diff_rel * (r0.mass_n + r0.mass_m)
    c["diff-conserved"] = _check((scale, abs((r.mass_n - r.mass_m) - d0), r.t) for r in records)
    c["maxprin-m"] = _check((a.linf_m + tol.maxprin_m, b.linf_m, b.t) for a, b in seq)
    cmax = max(r0.linf_c, r0.linf_m) + tol.compare_c
    c["compare-c"] = _check((cmax, r.linf_c, r.t) for r in records)
    c["positivity"] = _check((tol.tol_pos, -min(r.min_n, r.min_m, r.min_c), r.t) for r in records)
    nm_bound = min(r0.mass_n, r0.mass_m) + tol.cum
    c["cum-nm-bound"] = _check((nm_bound, r.cum_nm, r.t) for r in records)
    c["cum-gradm2-bound"] = _check((r0.energy_m + tol.cum, r.cum_gradm2, r.t) for r in records)
    c["div-free"] = _check((tol.div, max(r.div_u_inf, r.div_u_sup), r.t) for r in records)

    def sup_norms(r):
        vals = (r.linf_n, r.w1inf_c, r.w1inf_m, r.l2_u)
        return r.linf_n if all(math.isfinite(v) for v in vals) else math.inf

    c["bounded-(1.9)"] = _check((tol.bound_factor * r0.linf_n, sup_norms(r), r.t) for r in records)

    report = AuditReport(c)
    final = records[-1]
    dists = (final.dist_n, final.dist_c, final.dist_m, final.dist_u)
    if targets is not None:
        report.notes.append(f"targets: n_inf={targets[0]:.6g} m_inf={targets[1]:.6g}")
    if not tol.check_convergence or len(records) < 2:
        c["converged-(1.10)"] = CheckResult("skip", math.inf)
    else:
        worst = max(dists)
        ok = worst <= tol.eps_conv
        c["converged-(1.10)"] = CheckResult("pass" if ok else "fail", tol.eps_conv - worst, None if ok else final.t)
        tail = records[int(0.9 * len(records)) :]
        report.tail_monotone = all(
            max(r.dist_n, r.dist_c, r.dist_m, r.dist_u) <= 2.0 * max(worst, 1e-300) for r in tail
        )
    return report


def records_to_dicts(records) -> list[dict]:
    return [asdict(r) for r in records]
