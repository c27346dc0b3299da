"""Dense strictly-convex QP solver.

    min  1/2 u' P u + q' u
    s.t. E u = c,  G u <= h

Equalities are absorbed by a nullspace change of variables (a QR of E'
gives a particular solution and an orthonormal basis of the feasible
subspace), which makes stance/swing pinning exact to machine precision.
The reduced inequality-constrained problem is solved by a primal-dual
interior-point method with Mehrotra predictor-corrector steps.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import AsymmetricInput, Infeasible, MaxIterations, RankDeficientEqualities

_EMPTY = np.zeros((0,))


@dataclass
class CondensedQP:
    P: np.ndarray
    q: np.ndarray
    E: np.ndarray | None = None
    c: np.ndarray | None = None
    G: np.ndarray | None = None
    h: np.ndarray | None = None

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        self.q = np.asarray(self.q, dtype=float).reshape(-1)
        n = self.q.shape[0]
        if self.P.shape != (n, n):
            raise ValueError(f"P shape {self.P.shape} inconsistent with q ({n})")
        if self.E is None or np.size(self.E) == 0:
            self.E = np.zeros((0, n))
            self.c = np.zeros(0)
        else:
            self.E = np.asarray(self.E, dtype=float).reshape(-1, n)
            self.c = np.asarray(self.c, dtype=float).reshape(-1)
        if self.G is None or np.size(self.G) == 0:
            self.G = np.zeros((0, n))
            self.h = np.zeros(0)
        else:
            self.G = np.asarray(self.G, dtype=float).reshape(-1, n)
            self.h = np.asarray(self.h, dtype=float).reshape(-1)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def objective(self, u: np.ndarray) -> float:
        return float(0.5 * u @ self.P @ u + self.q @ u)


@dataclass
class QPSolution:
    u_star: np.ndarray
    eq_duals: np.ndarray = field(default_factory=lambda: _EMPTY)
    ineq_duals: np.ndarray = field(default_factory=lambda: _EMPTY)
    kkt_residual: float = 0.0
    iterations: int = 0
    solve_time: float = 0.0


def check_positive_definite(P: np.ndarray, sym_tol: float = 1e-9) -> bool:
    """True iff symmetric P admits a Cholesky factorization."""
    P = np.asarray(P, dtype=float)
    scale = max(1.0, float(np.abs(P).max()))
    if np.abs(P - P.T).max() > sym_tol * scale:
        raise AsymmetricInput("matrix is not symmetric within tolerance")
    try:
        np.linalg.cholesky(0.5 * (P + P.T))
        return True
    except np.linalg.LinAlgError:
        return False


def _eliminate_structured(E: np.ndarray, c: np.ndarray, n: int, tol: float):
    """Fast path for pin (x_i = c) and tie (x_i - x_j = 0) equality rows.

    The MPC builders only emit these two row shapes (stance/swing pinning
    and tying a swing segment's steps together), so the nullspace can be
    read off exactly: one indicator column per unpinned tie-class. Returns
    None when any row has a different shape, deferring to the QR path.
    """
    mask = E != 0.0
    counts = mask.sum(axis=1)
    if counts.size and (counts.min() < 1 or counts.max() > 2):
        return None
    first = mask.argmax(axis=1)
    last = E.shape[1] - 1 - mask[:, ::-1].argmax(axis=1)
    is_pin = counts == 1
    if np.any(E[is_pin, first[is_pin]] != 1.0):
        return None
    is_tie = counts == 2
    if np.any(c[is_tie] != 0.0) or np.any(
        E[is_tie, first[is_tie]] != -E[is_tie, last[is_tie]]
    ) or np.any(np.abs(E[is_tie, first[is_tie]]) != 1.0):
        return None

    pins = list(zip(first[is_pin], c[is_pin]))
    parent = np.arange(n)

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in zip(first[is_tie], last[is_tie]):
        parent[find(i)] = find(j)
    roots = np.array([find(i) for i in range(n)])
    uniq, inv = np.unique(roots, return_inverse=True)
    pinned = np.zeros(uniq.size, dtype=bool)
    value = np.zeros(uniq.size)
    for idx, val in pins:
        cls = int(inv[idx])
        if pinned[cls] and abs(value[cls] - val) > max(tol, 1e-8):
            raise Infeasible("equality constraints are inconsistent")
        if not pinned[cls]:
            pinned[cls] = True
            value[cls] = val
    u0 = np.where(pinned[inv], value[inv], 0.0)
    free_col = np.cumsum(~pinned) - 1  # class index -> Z column
    member = ~pinned[inv]
    Z = np.zeros((n, int((~pinned).sum())))
    Z[np.flatnonzero(member), free_col[inv[member]]] = 1.0
    return u0, Z


def _eliminate_equalities(problem: CondensedQP, tol: float):
    """Particular solution + nullspace basis of E u = c.

    Pin/tie rows are handled by an exact structured path; general rows go
    through a pivoted QR. Redundant (linearly dependent but consistent)
    rows are tolerated; inconsistent rows raise Infeasible.
    """
    E, c, n = problem.E, problem.c, problem.n
    structured = _eliminate_structured(E, c, n, tol)
    if structured is not None:
        return structured
    Q, R, _ = scipy.linalg.qr(E.T, pivoting=True)
    diag = np.abs(np.diag(R)) if min(R.shape) else np.zeros(0)
    thresh = max(E.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    rank = int(np.sum(diag > thresh))
    u0, *_ = np.linalg.lstsq(E, c, rcond=None)
    if np.abs(E @ u0 - c).max(initial=0.0) > max(tol, 1e-8):
        raise Infeasible("equality constraints are inconsistent")
    if rank > n:
        raise RankDeficientEqualities("more independent equalities than variables")
    Z = Q[:, rank:]
    return u0, Z


def _interior_point(P, q, G, h, tol, max_iter):
    """Mehrotra predictor-corrector on min 1/2 z'Pz + q'z s.t. Gz <= h."""
    n = q.shape[0]
    m = h.shape[0]
    L = np.linalg.cholesky(P)
    z = scipy.linalg.cho_solve((L, True), -q)
    if m == 0:
        return z, np.zeros(0), 0
    r = h - G @ z
    shift = max(0.0, -1.5 * float(r.min())) + 1.0
    s = r + shift
    lam = np.ones(m)

    def fail(last_mu: float):
        viol = float(np.maximum(G @ z - h, 0.0).max(initial=0.0))
        if viol > np.sqrt(tol) or not np.isfinite(last_mu):
            raise Infeasible(f"inequalities appear infeasible (violation {viol:.3e})")
        raise MaxIterations(f"no convergence (mu={last_mu:.3e})")

    mu = np.inf
    for it in range(1, max_iter + 1):
        r_d = P @ z + q + G.T @ lam
        r_p = G @ z + s - h
        mu = float(s @ lam) / m
        if not np.isfinite(mu) or not np.all(np.isfinite(z)):
            fail(mu)
        if (
            np.abs(r_d).max() <= tol
            and np.abs(r_p).max() <= tol
            and mu <= tol
        ):
            return z, lam, it - 1

        d = lam / s
        M = P + (G.T * d) @ G
        if not np.all(np.isfinite(M)):
            fail(mu)
        try:
            LM = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            M = M + (1e-12 * np.trace(M)) * np.eye(n)
            LM = np.linalg.cholesky(M)

        def newton_step(r_c):
            rhs = -r_d + G.T @ ((r_c - lam * r_p) / s)
            dz = scipy.linalg.cho_solve((LM, True), rhs)
            ds = -r_p - G @ dz
            dlam = -(r_c + lam * ds) / s
            return dz, ds, dlam

        def max_step(v, dv):
            neg = dv < 0
            if not np.any(neg):
                return 1.0
            return min(1.0, float(np.min(-v[neg] / dv[neg])))

        # affine (predictor) direction
        dz_a, ds_a, dlam_a = newton_step(s * lam)
        alpha_a = min(max_step(s, ds_a), max_step(lam, dlam_a))
        mu_aff = float((s + alpha_a * ds_a) @ (lam + alpha_a * dlam_a)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector with centering
        dz, ds, dlam = newton_step(s * lam + ds_a * dlam_a - sigma * mu)
        alpha = 0.99 * min(max_step(s, ds), max_step(lam, dlam))
        z = z + alpha * dz
        s = s + alpha * ds
        lam = lam + alpha * dlam

    fail(mu)


def solve(problem: CondensedQP, tol: float = 1e-6, max_iter: int = 50) -> QPSolution:
    """Solve the QP; see module docstring for the method."""
    t0 = time.perf_counter()
    if not check_positive_definite(problem.P):
        raise ValueError("P must be positive definite")

    n = problem.n
    if problem.E.shape[0] > 0:
        u0, Z = _eliminate_equalities(problem, tol)
    else:
        u0, Z = np.zeros(n), np.eye(n)

    lam = np.zeros(problem.G.shape[0])
    iters = 0
    if Z.shape[1] == 0:
        u = u0
        if problem.G.shape[0] and np.max(problem.G @ u - problem.h) > tol:
            raise Infeasible("equalities fix a point violating the inequalities")
    else:
        # when Z is a pure selection (one unit entry per column) the
        # reduction is a submatrix pick; the values match the matmul exactly
        single = (Z != 0.0).sum(axis=0) == 1
        if bool(single.all()) and np.all(Z[Z != 0.0] == 1.0):
            cols = Z.argmax(axis=0)
            Pz = problem.P[np.ix_(cols, cols)]
            qz = (problem.P @ u0 + problem.q)[cols]
            Gz = problem.G[:, cols]
        else:
            Pz = Z.T @ problem.P @ Z
            qz = Z.T @ (problem.P @ u0 + problem.q)
            Gz = problem.G @ Z
        hz = problem.h - problem.G @ u0
        z, lam, iters = _interior_point(Pz, qz, Gz, hz, tol, max_iter)
        u = u0 + Z @ z

    grad = problem.P @ u + problem.q + problem.G.T @ lam
    if problem.E.shape[0] > 0:
        nu = scipy.linalg.lstsq(problem.E.T, -grad, lapack_driver="gelsy")[0]
        stat = grad + problem.E.T @ nu
    else:
        nu = np.zeros(0)
        stat = grad
    resid = [np.abs(stat).max(initial=0.0)]
    if problem.E.shape[0]:
        resid.append(np.abs(problem.E @ u - problem.c).max())
    if problem.G.shape[0]:
        slack = problem.h - problem.G @ u
        resid.append(float(np.maximum(-slack, 0.0).max()))
        resid.append(float(np.abs(lam * slack).max()))
    return QPSolution(
        u_star=u,
        eq_duals=nu,
        ineq_duals=lam,
        kkt_residual=float(max(resid)),
        iterations=iters,
        solve_time=time.perf_counter() - t0,
    )


def dump_qp(problem: CondensedQP, out_dir: str, tag: str) -> None:
    """Write the QP blocks as CSV files for offline inspection."""
    os.makedirs(out_dir, exist_ok=True)
    blocks = {
        "P": problem.P,
        "q": problem.q.reshape(1, -1),
        "E": problem.E,
        "c": problem.c.reshape(1, -1),
        "G": problem.G,
        "h": problem.h.reshape(1, -1),
    }
    for name, mat in blocks.items():
        path = os.path.join(out_dir, f"{tag}_{name}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in np.atleast_2d(mat):
                writer.writerow([f"{v:.17g}" for v in row])
