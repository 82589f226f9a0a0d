"""Conjugate gradients for shifted Laplacians ``alpha*I - beta*L`` on the grid.

``L`` is assembled as a sparse Kronecker sum of 1-D second-difference
blocks, one per axis.  The block kind encodes the boundary treatment:

``neumann``         cell centres, reflected ghost (zero normal derivative)
``dirichlet_cell``  cell centres, ghost ``-u`` (zero value on the wall)
``dirichlet_face``  interior faces of a walled axis, wall values fixed at 0
``periodic``        wrap-around

Preconditioners: ``none``, ``jacobi``, ``mg`` (Galerkin V-cycle with damped
Jacobi smoothing), ``lu`` (sparse LU of the current matrix) and ``fft``
(exact inverse by fast sine/cosine/Fourier transforms, since every block
kind is diagonalised by one of them).  With ``lu`` or ``fft`` CG finishes
in one or two sweeps.  ``auto`` is ``fft``.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError

PRECONDITIONERS = ("none", "jacobi", "mg", "lu", "fft", "auto")
COARSEST = 64


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool


def _lap1d(kind: str, n: int, h: float) -> sp.csr_matrix:
    size = n - 1 if kind == "dirichlet_face" else n
    main = np.full(size, -2.0)
    off = np.ones(size - 1)
    if kind == "neumann":
        main[0] = main[-1] = -1.0
    elif kind == "dirichlet_cell":
        main[0] = main[-1] = -3.0
    L = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if kind == "periodic":
        L[0, size - 1] += 1.0
        L[size - 1, 0] += 1.0
    return (L.tocsr() / (h * h)).tocsr()


def _eig1d(kind: str, n: int, h: float) -> np.ndarray:
    """Eigenvalues of ``_lap1d`` in the order the matching transform emits modes."""
    if kind == "neumann":
        k = np.arange(n)
        return -4.0 * np.sin(np.pi * k / (2 * n)) ** 2 / (h * h)
    if kind == "dirichlet_cell":
        k = np.arange(1, n + 1)
        return -4.0 * np.sin(np.pi * k / (2 * n)) ** 2 / (h * h)
    if kind == "dirichlet_face":
        k = np.arange(1, n)
        return -4.0 * np.sin(np.pi * k / (2 * n)) ** 2 / (h * h)
    k = np.arange(n)
    return -4.0 * np.sin(np.pi * k / n) ** 2 / (h * h)


def _forward(x, kind, axis):
    if kind == "neumann":
        return sfft.dct(x, 2, axis=axis, norm="ortho")
    if kind == "dirichlet_cell":
        return sfft.dst(x, 2, axis=axis, norm="ortho")
    if kind == "dirichlet_face":
        return sfft.dst(x, 1, axis=axis, norm="ortho")
    return sfft.fft(x, axis=axis, norm="ortho")


def _backward(x, kind, axis):
    if kind == "neumann":
        return sfft.idct(x, 2, axis=axis, norm="ortho")
    if kind == "dirichlet_cell":
        return sfft.idst(x, 2, axis=axis, norm="ortho")
    if kind == "dirichlet_face":
        return sfft.idst(x, 1, axis=axis, norm="ortho")
    return sfft.ifft(x, axis=axis, norm="ortho")


def _prolong1d(kind: str, n: int):
    """1-D interpolation from the ``n/2`` coarse grid, or None if ``n`` cannot be halved."""
    if n % 2 or n < 4:
        return None
    nc = n // 2
    rows, cols, vals = [], [], []
    if kind == "dirichlet_face":
        # unknown j sits on face j+1; coarse face F sits on fine face 2F
        for j in range(n - 1):
            f = j + 1
            if f % 2 == 0:
                rows.append(j), cols.append(f // 2 - 1), vals.append(1.0)
            else:
                for F in ((f - 1) // 2, (f + 1) // 2):
                    if 1 <= F <= nc - 1:
                        rows.append(j), cols.append(F - 1), vals.append(0.5)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n - 1, nc - 1))
    for I in range(nc):
        for fine, nb in ((2 * I, I - 1), (2 * I + 1, I + 1)):
            rows.append(fine), cols.append(I), vals.append(0.75)
            if kind == "periodic":
                nb %= nc
            elif not 0 <= nb < nc:
                nb = I
            rows.append(fine), cols.append(nb), vals.append(0.25)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, nc))


def _kron_all(mats):
    out = mats[0]
    for M in mats[1:]:
        out = sp.kron(out, M, format="csr")
    return sp.csr_matrix(out)


def _kron_sum(blocks):
    eyes = [sp.identity(b.shape[0], format="csr") for b in blocks]
    total = None
    for a, B in enumerate(blocks):
        mats = list(eyes)
        mats[a] = B
        term = _kron_all(mats)
        total = term if total is None else total + term
    return total.tocsr()


class ShiftedLaplacian:
    """Family of SPD (or, for pure Neumann/periodic, semidefinite) systems
    ``(alpha*I - beta*L) x = b`` sharing one sparsity pattern."""

    def __init__(self, kinds, cells, spacing):
        self.kinds = tuple(kinds)
        self.cells = tuple(cells)
        self.spacing = tuple(spacing)
        self.shape = tuple(n - 1 if k == "dirichlet_face" else n for k, n in zip(kinds, cells))
        self.size = int(np.prod(self.shape))
        self.singular = all(k in ("neumann", "periodic") for k in kinds)
        self.L = _kron_sum([_lap1d(k, n, h) for k, n, h in zip(kinds, cells, spacing)])
        self._I = sp.identity(self.size, format="csr")
        self._levels = None
        self._mats = OrderedDict()
        self._mg = OrderedDict()
        self._lu = OrderedDict()
        self._spec = OrderedDict()

    # -- assembly ---------------------------------------------------------
    def matrix(self, alpha: float, beta: float) -> sp.csr_matrix:
        key = (float(alpha), float(beta))
        A = self._mats.get(key)
        if A is None:
            A = (alpha * self._I - beta * self.L).tocsr() if alpha else (-beta * self.L).tocsr()
            self._cache(self._mats, key, A, 4)
        return A

    @staticmethod
    def _cache(store, key, value, size):
        store[key] = value
        store.move_to_end(key)
        while len(store) > size:
            store.popitem(last=False)

    def is_singular(self, alpha: float) -> bool:
        return self.singular and alpha == 0

    def project(self, x: np.ndarray) -> np.ndarray:
        return x - x.mean() if self.singular else x

    # -- preconditioners --------------------------------------------------
    def _hierarchy(self):
        if self._levels is None:
            levels = []
            kinds, cells = list(self.kinds), list(self.cells)
            L, M = self.L, self._I
            while M.shape[0] > COARSEST:
                P1 = []
                coarsened = False
                for k, n in zip(kinds, cells):
                    P = _prolong1d(k, n)
                    if P is None:
                        P1.append(sp.identity(n - 1 if k == "dirichlet_face" else n, format="csr"))
                    else:
                        P1.append(P)
                        coarsened = True
                if not coarsened:
                    break
                P = _kron_all(P1)
                levels.append((L, M, P))
                cells = [n // 2 if _prolong1d(k, n) is not None else n for k, n in zip(kinds, cells)]
                R = P.T.tocsr()
                L, M = (R @ L @ P).tocsr(), (R @ M @ P).tocsr()
            levels.append((L, M, None))
            self._levels = levels
        return self._levels

    def _multigrid(self, alpha, beta):
        key = (float(alpha), float(beta))
        mg = self._mg.get(key)
        if mg is None:
            levels = []
            for L, M, P in self._hierarchy():
                A = (alpha * M - beta * L).tocsr()
                levels.append((A, 1.0 / A.diagonal(), P, P.T.tocsr() if P is not None else None))
            A_c = levels[-1][0].toarray()
            coarse = np.linalg.pinv(A_c) if self.is_singular(alpha) else np.linalg.inv(A_c)
            mg = (levels, coarse)
            self._cache(self._mg, key, mg, 4)
        levels, coarse = mg
        omega, nu = 0.6, 2

        def vcycle(l, b):
            A, dinv, P, R = levels[l]
            if P is None:
                return coarse @ b
            x = omega * dinv * b
            for _ in range(nu - 1):
                x += omega * dinv * (b - A @ x)
            x += P @ vcycle(l + 1, R @ (b - A @ x))
            for _ in range(nu):
                x += omega * dinv * (b - A @ x)
            return x

        return lambda r: vcycle(0, r)

    def _lu_solver(self, alpha, beta):
        key = (float(alpha), float(beta))
        lu = self._lu.get(key)
        if lu is None:
            A = self.matrix(alpha, beta).tocsc(copy=True)
            if self.is_singular(alpha):
                # pin one unknown; the result is re-centred afterwards
                A[0, 0] += A[0, 0] if A[0, 0] else 1.0
            lu = spla.splu(A)
            self._cache(self._lu, key, lu, 4)
        return lu.solve

    def _spectral(self, alpha, beta):
        key = (float(alpha), float(beta))
        inv = self._spec.get(key)
        if inv is None:
            dim = len(self.shape)
            lam = np.zeros(self.shape)
            for a, (k, n, h) in enumerate(zip(self.kinds, self.cells, self.spacing)):
                shape = [1] * dim
                shape[a] = -1
                lam = lam + _eig1d(k, n, h).reshape(shape)
            diag = alpha - beta * lam
            with np.errstate(divide="ignore"):
                inv = np.where(np.abs(diag) > 0, 1.0 / np.where(diag == 0, 1.0, diag), 0.0)
            if self.is_singular(alpha):
                inv.flat[0] = 0.0  # constant mode: the null space
            self._cache(self._spec, key, inv, 8)
        periodic = "periodic" in self.kinds
        order = sorted(range(len(self.kinds)), key=lambda a: self.kinds[a] == "periodic")

        def apply(r):
            y = r.reshape(self.shape)
            for a in order:  # real transforms first so the data stays real as long as possible
                y = _forward(y, self.kinds[a], a)
            y = y * inv
            for a in reversed(order):
                y = _backward(y, self.kinds[a], a)
            return (y.real if periodic else y).ravel()

        return apply

    def preconditioner(self, kind: str, alpha: float, beta: float):
        if kind == "auto":
            kind = "fft"
        if kind == "fft":
            return self._spectral(alpha, beta)
        if kind == "none":
            return None
        if kind == "jacobi":
            dinv = 1.0 / self.matrix(alpha, beta).diagonal()
            return lambda r: dinv * r
        if kind == "mg":
            return self._multigrid(alpha, beta)
        if kind == "lu":
            return self._lu_solver(alpha, beta)
        raise ValueError(f"unknown preconditioner {kind!r}")

    # -- solve --------------------------------------------------------------
    def default_maxiter(self) -> int:
        return int(min(20_000, 10 * sum(self.cells)))

    def solve(self, b, alpha, beta, x0=None, tol=1e-12, maxiter=None, precond="none"):
        A = self.matrix(alpha, beta)
        M = self.preconditioner(precond, alpha, beta)
        b = np.asarray(b, dtype=float).ravel()
        x, report = cg(
            A.__matmul__,
            b,
            None if x0 is None else np.asarray(x0, dtype=float).ravel(),
            tol=tol,
            maxiter=maxiter or self.default_maxiter(),
            precond=M,
            project=self.project if self.is_singular(alpha) else None,
        )
        return x.reshape(self.shape), report


def cg(matvec, b, x0=None, tol=1e-12, maxiter=1000, precond=None, project=None):
    """Preconditioned conjugate gradients.

    Stops when the true residual satisfies ``|b - A x| <= tol |b|``.  With
    ``project`` (removal of a null space) ``b`` and every preconditioned
    residual are projected, so iterates stay in the range of ``A``.
    """
    b = project(b) if project else b
    nb = float(np.sqrt(np.dot(b, b)))
    if nb == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, True)
    x = np.zeros_like(b) if x0 is None else (project(x0) if project else x0.copy())
    target = tol * nb
    it = 0
    restarts = 0
    while True:
        r = b - matvec(x)
        if project:
            r = project(r)
        rn = float(np.sqrt(np.dot(r, r)))
        if rn <= target or it >= maxiter or restarts > 3:
            break
        z = precond(r) if precond else r.copy()
        if project:
            z = project(z)
        p = z.copy()
        rz = float(np.dot(r, z))
        while it < maxiter:
            it += 1
            Ap = matvec(p)
            pAp = float(np.dot(p, Ap))
            if pAp <= 0.0 or rz <= 0.0:
                break
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            if float(np.sqrt(np.dot(r, r))) <= target:
                break
            z = precond(r) if precond else r.copy()
            if project:
                z = project(z)
            rz_new = float(np.dot(r, z))
            p *= rz_new / rz
            p += z
            rz = rz_new
        # loop back: recompute the true residual and restart if drift left us short
        restarts += 1
    return x, SolveReport(it, rn / nb, rn <= target)


def require_converged(report: SolveReport, what: str = "poisson") -> None:
    if not report.converged:
        raise SolverError(
            f"{what} diverged: residual {report.residual:.3e} after {report.iterations} iterations"
        )
