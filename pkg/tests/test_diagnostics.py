import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fluxlim.diagnostics import (
    CHECKS,
    FIELDS,
    AuditTolerances,
    DiagRecord,
    audit,
    equilibrium_targets,
    grad_sq_integral,
    record,
)
from fluxlim.grid import GridSpec, ScalarField, StateSnapshot, VectorField
from fluxlim import _kernels as K


@pytest.mark.parametrize(
    "n0, m0, vol, expected",
    [(2.0, 1.0, 1.0, (1.0, 0.0)), (1.0, 1.0, 3.0, (0.0, 0.0)), (1.0, 3.0, 2.0, (0.0, 1.0))],
)
def test_equilibrium_targets_examples(n0, m0, vol, expected):
    assert equilibrium_targets(n0, m0, vol) == expected


@given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(1e-3, 1e3))
def test_equilibrium_targets_properties(n0, m0, vol):
    ni, mi = equilibrium_targets(n0, m0, vol)
    assert ni >= 0 and mi >= 0 and ni * mi == 0
    assert (ni - mi) * vol == pytest.approx(n0 - m0, rel=1e-12, abs=1e-9)


@pytest.mark.parametrize("args", [(-1.0, 1.0, 1.0), (1.0, 1.0, 0.0)])
def test_equilibrium_targets_rejects(args):
    with pytest.raises(ValueError):
        equilibrium_targets(*args)


def _state(grid, n, c, m, t=0.0):
    f = lambda v: ScalarField(grid, np.broadcast_to(v, grid.shape).copy())
    return StateSnapshot(f(n), f(c), f(m), VectorField(grid), ScalarField.zeros(grid), t)


def test_record_constant_state():
    g = GridSpec((8, 8))
    r = record(_state(g, 1.0, 0.0, 0.0), targets=(1.0, 0.0))
    assert r.mass_n == pytest.approx(1.0, rel=1e-15)
    assert r.dist_n == r.dist_c == r.dist_m == r.dist_u == 0.0
    assert r.cum_nm == r.cum_gradm2 == 0.0
    assert r.w1inf_c == 0.0 and r.div_u_inf == 0.0


def test_record_w1inf_is_max():
    g = GridSpec((64,))
    x = g.centers(0)
    m = 0.1 * np.cos(np.pi * x)
    r = record(_state(g, 0.0, 0.0, m))
    # sup|m| ~ 0.1, sup|m'| ~ 0.1 pi
    assert r.w1inf_m == pytest.approx(0.1 * np.pi, rel=1e-2)
    assert r.linf_m <= 0.1


def test_record_trapezoid_and_increments():
    g = GridSpec((4, 4))
    a = record(_state(g, 2.0, 0.0, 1.0))
    b = record(_state(g, 1.0, 0.0, 0.5, t=1.0), prev=a, dt_since_prev=1.0)
    assert b.cum_nm == pytest.approx(0.5 * (2.0 + 0.5))
    c = record(_state(g, 1.0, 0.0, 0.5, t=1.0), prev=a, increments=(0.7, 0.0))
    assert c.cum_nm == 0.7


def test_grad_sq_integral_is_dirichlet_form(rng):
    g = GridSpec((10, 12))
    f = rng.standard_normal(g.shape)
    lhs = grad_sq_integral(f, g)
    rhs = -g.cell_volume * float(np.sum(K.laplacian(f, g) * f))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_row_roundtrip():
    vals = {f: float(i) for i, f in enumerate(FIELDS)}
    vals["step"] = 7
    r = DiagRecord(**vals)
    assert DiagRecord.from_row({k: str(v) for k, v in zip(FIELDS, r.row())}) == r


def _series(n=5, **over):
    g = GridSpec((4, 4))
    recs = []
    prev = None
    for k in range(n):
        r = record(_state(g, 1.0, 0.0, 0.0, t=float(k)), prev=prev, dt_since_prev=1.0, targets=(1.0, 0.0))
        recs.append(r)
        prev = r
    return [dataclasses.replace(r, **{k: v(i) for k, v in over.items()}) for i, r in enumerate(recs)]


def test_audit_constant_equilibrium_passes():
    rep = audit(_series())
    assert rep.passed
    assert set(rep.checks) == set(CHECKS)
    assert rep.checks["converged-(1.10)"].status == "pass"
    assert "PASS" in rep.to_text()


def test_audit_increasing_mass_fails():
    recs = _series(mass_n=lambda i: 1.0 + 0.1 * (i >= 3))
    rep = audit(recs)
    assert "mass-monotone-n" in rep.failed()
    assert rep.checks["mass-monotone-n"].t_violation == 3.0
    assert rep.checks["mass-monotone-n"].slack < 0


def test_audit_negative_value_fails():
    rep = audit(_series(min_c=lambda i: -1e-6 if i == 2 else 0.0))
    assert rep.failed() == ["positivity"]
    assert rep.checks["positivity"].t_violation == 2.0


def test_audit_nan_fails_bounded():
    rep = audit(_series(linf_n=lambda i: math.nan if i == 4 else 1.0))
    assert "bounded-(1.9)" in rep.failed()


def test_audit_not_converged():
    rep = audit(_series(dist_u=lambda i: 0.5))
    assert rep.failed() == ["converged-(1.10)"]


def test_audit_single_record_skips_convergence():
    rep = audit(_series(1))
    assert rep.checks["converged-(1.10)"].status == "skip"
    assert rep.passed


def test_audit_rejects_unsorted():
    recs = _series()
    with pytest.raises(ValueError, match="records not time-sorted"):
        audit(recs[::-1])
    with pytest.raises(ValueError):
        audit([])


def test_tolerances_from_dict():
    t = AuditTolerances.from_dict({"eps_conv": 0.5})
    assert t.eps_conv == 0.5
    with pytest.raises(ValueError, match="unknown"):
        AuditTolerances.from_dict({"bogus": 1})
    assert not audit(_series(dist_u=lambda i: 0.4)).passed
    assert audit(_series(dist_u=lambda i: 0.4), t).passed


def test_report_json_handles_infinite_slack():
    import json

    d = json.loads(audit(_series(1)).to_json())
    assert d["converged-(1.10)"]["slack"] is None
