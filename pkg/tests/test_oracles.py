import math

import numpy as np
import pytest

from fluxlim.grid import GridSpec
from fluxlim.oracles import (
    ORACLE_CASES,
    convergence_order,
    homogeneous_exact,
    homogeneous_pde,
    mms_cases,
    mms_run,
    mms_study,
    ode_reference,
    poiseuille_error,
    poiseuille_study,
    write_error_csv,
)

# frozen reference values (closed form, cross-checked against RK4 below)
M1_FROM_2_1 = 1.0 / (2.0 * math.e - 1.0)


def test_homogeneous_m_closed_form():
    n, c, m = homogeneous_exact(2.0, 1.0, 0.5, 1.0)
    assert m == pytest.approx(M1_FROM_2_1, rel=1e-14)
    assert n - m == pytest.approx(1.0, rel=1e-14)


def test_homogeneous_equal_masses():
    n, c, m = homogeneous_exact(1.0, 1.0, 0.0, 1.0)
    assert n == m == pytest.approx(0.5, rel=1e-14)
    _, ys = ode_reference(1.0, 1.0, 0.0, 1.0, 1e-4)
    assert c == pytest.approx(ys[-1, 1], abs=1e-12)


def test_homogeneous_no_sperm():
    n, c, m = homogeneous_exact(0.0, 1.0, 0.0, 2.0)
    assert n == 0.0 and m == 1.0
    assert c == pytest.approx(1.0 - math.exp(-2.0), rel=1e-12)


def test_homogeneous_rejects_negative():
    with pytest.raises(ValueError):
        homogeneous_exact(-1.0, 1.0, 0.0, 1.0)


def test_homogeneous_matches_rk4(rng):
    for _ in range(20):
        n0, m0, c0 = rng.uniform(0, 10, 3)
        ex = homogeneous_exact(n0, m0, c0, 1.0)
        _, ys = ode_reference(n0, m0, c0, 1.0, 1e-3)
        assert np.max(np.abs(np.array(ex) - ys[-1])) <= 1e-9 * max(1.0, n0, m0, c0)


def test_homogeneous_long_time_limit():
    n, c, m = homogeneous_exact(2.0, 1.0, 0.5, 1e3)
    assert n == pytest.approx(1.0, abs=1e-12)
    assert abs(m) <= 1e-12 and abs(c) <= 1e-12


def test_rk4_conserves_difference():
    _, ys = ode_reference(3.0, 1.5, 0.2, 5.0, 0.01)
    assert np.max(np.abs(ys[:, 0] - ys[:, 2] - 1.5)) <= 1e-12


def test_rk4_rejects_coarse_step():
    with pytest.raises(ValueError):
        ode_reference(1.0, 1.0, 0.0, 1.0, 0.1)


def test_homogeneous_pde_short():
    pde = homogeneous_pde(2.0, 1.0, 0.5, 0.1, 1e-3)
    ex = homogeneous_exact(2.0, 1.0, 0.5, 0.1)
    assert max(abs(a - b) for a, b in zip(pde, ex)) <= 1e-5


@pytest.mark.parametrize(
    "pts, expected",
    [([(1.0, 1.0), (0.5, 0.25), (0.25, 0.0625)], 2.0), ([(0.1, 3.0), (0.05, 1.5)], 1.0)],
)
def test_convergence_order_examples(pts, expected):
    assert convergence_order(pts) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("pts", [[(1.0, 1.0)], [(1.0, 0.0), (0.5, 1.0)], [(0.5, 1.0), (1.0, 0.5)]])
def test_convergence_order_rejects(pts):
    with pytest.raises(ValueError):
        convergence_order(pts)


def test_mms_case_ids():
    assert set(mms_cases()) == {"pure-diffusion-1d", "chemo-1d", "constant-2d"}
    with pytest.raises(KeyError):
        mms_study("nope")


def test_mms_constant_is_exact():
    rows = mms_run(mms_cases()["constant-2d"], GridSpec((16, 16)))
    assert max(r.error for r in rows) <= 1e-12


def test_mms_dimension_mismatch():
    with pytest.raises(ValueError):
        mms_run(mms_cases()["chemo-1d"], GridSpec((8, 8)))


def test_chemo_sources_residual():
    # the exact fields plus sources satisfy the continuous equations
    case = mms_cases()["chemo-1d"]
    lim = case.limiter
    from fluxlim.sensitivity import eval as s_eval

    x = np.linspace(0.1, 0.9, 9)
    t, eps = 0.3, 1e-5
    E = lambda xx, tt: case.exact((np.asarray(xx),), tt)
    src = case.sources((x,), t)
    d_t = {k: (E(x, t + eps)[k] - E(x, t - eps)[k]) / (2 * eps) for k in "ncm"}
    d_xx = {k: (E(x + eps, t)[k] - 2 * E(x, t)[k] + E(x - eps, t)[k]) / eps**2 for k in "ncm"}

    def flux(xx):
        f = E(xx, t)
        cx = (E(xx + eps, t)["c"] - E(xx - eps, t)["c"]) / (2 * eps)
        return f["n"] * s_eval(lim, cx * cx) * cx

    div_flux = (flux(x + eps) - flux(x - eps)) / (2 * eps)
    f = E(x, t)
    res_n = d_t["n"] - d_xx["n"] + div_flux + f["n"] * f["m"] - src["n"]
    res_c = d_t["c"] - d_xx["c"] + f["c"] - f["m"] - src["c"]
    res_m = d_t["m"] - d_xx["m"] + f["m"] * f["n"] - src["m"]
    for r in (res_n, res_c, res_m):
        assert np.max(np.abs(r)) <= 1e-3


@pytest.mark.parametrize("case_id", ["pure-diffusion-1d", "chemo-1d"])
def test_mms_orders(case_id, tmp_path):
    study = mms_study(case_id, (32, 64, 128))
    assert study.passed, study.orders
    write_error_csv(study.rows, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().startswith("h,dt,field,norm,error")


def test_poiseuille_second_order():
    res = poiseuille_study((16, 32))
    assert res[0][1] / res[1][1] >= 3.5
    assert poiseuille_error(16, force=0.0) == 0.0


def test_oracle_case_names():
    assert ORACLE_CASES == ("homogeneous", "poiseuille")
