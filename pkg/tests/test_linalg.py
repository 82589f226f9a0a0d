import numpy as np
import pytest

from fluxlim.errors import SolverError
from fluxlim.linalg import ShiftedLaplacian, cg, require_converged

CASES = [
    (("neumann",), (32,)),
    (("neumann", "neumann"), (16, 12)),
    (("dirichlet_face", "dirichlet_cell"), (16, 16)),
    (("periodic", "dirichlet_face"), (8, 16)),
    (("neumann", "dirichlet_cell", "dirichlet_face"), (8, 8, 8)),
]


@pytest.mark.parametrize("kinds, cells", CASES)
@pytest.mark.parametrize("precond", ["none", "jacobi", "mg", "lu", "fft"])
@pytest.mark.parametrize("alpha, beta", [(1.0, 1e-3), (1.0, 10.0), (0.0, 1.0)])
def test_solve_matches_operator(kinds, cells, precond, alpha, beta):
    op = ShiftedLaplacian(kinds, cells, tuple(1.0 / n for n in cells))
    rng = np.random.default_rng(3)
    x_true = rng.standard_normal(op.size)
    if op.is_singular(alpha):
        x_true -= x_true.mean()
    b = op.matrix(alpha, beta) @ x_true
    x, rep = op.solve(b, alpha, beta, tol=1e-12, precond=precond)
    assert rep.converged
    r = b - op.matrix(alpha, beta) @ x.ravel()
    assert np.linalg.norm(r) <= 1e-11 * np.linalg.norm(b)


def test_exact_preconditioners_finish_fast():
    op = ShiftedLaplacian(("neumann",) * 3, (16,) * 3, (1 / 16,) * 3)
    b = np.random.default_rng(0).random(op.size)
    for pc in ("fft", "lu"):
        _, rep = op.solve(b, 1.0, 0.5, precond=pc)
        assert rep.iterations <= 2


def test_zero_rhs_zero_iterations():
    op = ShiftedLaplacian(("neumann", "neumann"), (8, 8), (0.125, 0.125))
    x, rep = op.solve(np.zeros(op.size), 0.0, 1.0)
    assert rep.iterations == 0 and np.all(x == 0)


def test_cg_iteration_cap_reports_failure():
    A = np.diag(np.linspace(1.0, 1e6, 200))
    b = np.ones(200)
    _, rep = cg(lambda v: A @ v, b, tol=1e-14, maxiter=3)
    assert not rep.converged
    with pytest.raises(SolverError, match="poisson diverged"):
        require_converged(rep)


def test_unknown_preconditioner():
    op = ShiftedLaplacian(("neumann",), (8,), (0.125,))
    with pytest.raises(ValueError):
        op.solve(np.ones(8), 1.0, 1.0, precond="ilu")
