"""Krylov solvers and the segregated Schur-complement method.

All solvers stop on the true relative residual ``|f - K u| / |f|``.
"""
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .amg import AmgHierarchy, build_amg
from .errors import SolverError

__all__ = [
    "SolveReport",
    "solve_pcg",
    "solve_gmres",
    "SchurBlocks",
    "schur_blocks",
    "invert_vertex_blocks",
    "solve_segregated",
    "solve",
]


@dataclass
class SolveReport:
    method: str
    iterations: int
    rel_residual: float
    seconds: float
    converged: bool = True
    message: str = ""


def _identity(r):
    return r.copy()


def _rel_residual(K, f, u, nf):
    return float(np.linalg.norm(f - K @ u) / nf)


def solve_pcg(K, f, M=None, tol: float = 1e-9, maxit: int = 1000, x0=None):
    """Preconditioned conjugate gradients.

    ``M`` is a callable approximating ``K^{-1}`` (e.g. an :class:`AmgHierarchy`).
    A non-symmetric ``K`` is used as is, so the iteration may stall or
    diverge; it stops once the recursive residual grows ``1e6`` times past
    its best value.  On failure the report has ``converged=False`` and the
    iterate with the smallest recursive residual is returned.
    """
    t0 = time.perf_counter()
    M = _identity if M is None else M
    f = np.asarray(f, dtype=float)
    nf = np.linalg.norm(f)
    if nf == 0.0:
        return np.zeros_like(f), SolveReport("CG", 0, 0.0, time.perf_counter() - t0)
    x = np.zeros_like(f) if x0 is None else np.array(x0, dtype=float)
    r = f - K @ x
    it = 0
    rel = np.linalg.norm(r) / nf
    message = ""
    if rel > tol:
        z = M(r)
        rz = r @ z
        p = z.copy()
        best, x_best = rel, x.copy()
        while it < maxit:
            it += 1
            q = K @ p
            pq = p @ q
            if not pq > 0 or not rz > 0:
                message = f"breakdown at iteration {it}"
                break
            alpha = rz / pq
            x += alpha * p
            r -= alpha * q
            rr = np.linalg.norm(r) / nf
            if rr <= tol:
                r = f - K @ x
                rr = np.linalg.norm(r) / nf
                if rr <= tol:
                    x_best = x
                    break
            if rr < best:
                best, x_best = rr, x.copy()
            elif rr > 1e6 * best:
                message = f"divergence at iteration {it}"
                break
            z = M(r)
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        x = x_best
        rel = _rel_residual(K, f, x, nf)
    ok = bool(rel <= tol)
    if not ok and not message:
        message = f"no convergence in {maxit} iterations"
    return x, SolveReport("CG", it, float(rel), time.perf_counter() - t0, ok, message)


def _givens(a, b):
    if b == 0.0:
        return 1.0, 0.0
    r = np.hypot(a, b)
    return a / r, b / r


def solve_gmres(K, f, M=None, tol: float = 1e-9, maxit: int = 1000, restart: int = 30):
    """Left-preconditioned restarted GMRES.

    The inner Arnoldi loop minimises the preconditioned residual; the true
    residual is checked at the end of every cycle and the inner target is
    tightened if the two disagree.
    """
    t0 = time.perf_counter()
    M = _identity if M is None else M
    f = np.asarray(f, dtype=float)
    n = len(f)
    nf = np.linalg.norm(f)
    if nf == 0.0:
        return np.zeros_like(f), SolveReport("GMRES", 0, 0.0, time.perf_counter() - t0)
    x = np.zeros_like(f)
    it = 0
    safety = 1.0
    rel = 1.0
    prev_rel = np.inf
    claimed = False
    message = ""
    m = max(1, min(restart, n))
    while True:
        r = f - K @ x
        rel = np.linalg.norm(r) / nf
        if rel <= tol:
            break
        if it >= maxit:
            message = f"no convergence in {maxit} iterations"
            break
        if rel >= prev_rel:
            message = f"stagnation after {it} iterations"
            break
        if claimed:
            safety *= 0.1
        prev_rel = rel
        z = M(r)
        beta = np.linalg.norm(z)
        target = beta * tol / rel * safety
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = z / beta
        k = 0
        for j in range(m):
            it += 1
            k = j + 1
            w = M(K @ V[j])
            for i in range(j + 1):
                H[i, j] = w @ V[i]
                w -= H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            happy = H[j + 1, j] <= 1e-14 * beta
            if not happy:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                hi, hi1 = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * hi + sn[i] * hi1
                H[i + 1, j] = -sn[i] * hi + cs[i] * hi1
            cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            if happy or abs(g[j + 1]) <= target or it >= maxit:
                break
        claimed = abs(g[k]) <= target
        y = np.linalg.solve(np.triu(H[:k, :k]), g[:k])
        x += V[:k].T @ y
    ok = bool(rel <= tol)
    return x, SolveReport("GMRES", it, float(rel), time.perf_counter() - t0, ok, message)


def invert_vertex_blocks(A_VV, block: int = 3) -> sp.csr_matrix:
    """Invert a block-diagonal matrix with ``block x block`` diagonal blocks.

    Raises
    ------
    SolverError
        If an entry lies outside the diagonal blocks or a block is singular.
    """
    A = sp.coo_matrix(A_VV)
    n = A.shape[0]
    if n % block:
        raise SolverError("vertex block size does not divide the block dimension")
    if np.any(A.row // block != A.col // block):
        raise SolverError("A_VV is not block diagonal")
    nb = n // block
    B = np.zeros((nb, block, block))
    np.add.at(B, (A.row // block, A.row % block, A.col % block), A.data)
    if block == 3:
        a, b, c = B[:, 0], B[:, 1], B[:, 2]
        det = np.einsum("ij,ij->i", a, np.cross(b, c))
        if np.any(det == 0) or not np.isfinite(det).all():
            raise SolverError("singular vertex block")
        inv = np.stack([np.cross(b, c), np.cross(c, a), np.cross(a, b)], axis=2) / det[:, None, None]
    else:
        inv = np.linalg.inv(B)
    return sp.bsr_matrix((inv, np.arange(nb), np.arange(nb + 1)), shape=(n, n)).tocsr()


@dataclass
class SchurBlocks:
    A_VV: sp.csr_matrix
    A_VE: sp.csr_matrix
    A_EV: sp.csr_matrix
    A_EE: sp.csr_matrix
    A_VV_inv: sp.csr_matrix
    S: sp.csr_matrix

    def lu_factors(self):
        """``(L, U)`` of the block factorisation ``K = L U``."""
        nv, ne = self.A_VV.shape[0], self.A_EE.shape[0]
        L = sp.bmat([[self.A_VV, None], [self.A_EV, self.S]], format="csr")
        U = sp.bmat(
            [[sp.identity(nv), self.A_VV_inv @ self.A_VE], [None, sp.identity(ne)]], format="csr"
        )
        return L, U


def schur_blocks(K, n_vertex_dofs: int, block: int = 3) -> SchurBlocks:
    """Split ``K`` and form the exact Schur complement of the vertex block."""
    K = sp.csr_matrix(K)
    nv = n_vertex_dofs
    A_VV = K[:nv, :nv].tocsr()
    A_VE = K[:nv, nv:].tocsr()
    A_EV = K[nv:, :nv].tocsr()
    A_EE = K[nv:, nv:].tocsr()
    inv = invert_vertex_blocks(A_VV, block)
    S = (A_EE - A_EV @ inv @ A_VE).tocsr()
    S.sort_indices()
    return SchurBlocks(A_VV, A_VE, A_EV, A_EE, inv, S)


def solve_segregated(
    K, f, n_vertex_dofs: int, tol: float = 1e-9, maxit: int = 1000, block: int = 3, amg_options=None
):
    """Block LU solve: exact vertex elimination, AMG-CG on the Schur complement.

    The Schur tolerance is scaled so that the residual of the full system
    meets ``tol``.  If CG fails on the Schur system it is re-solved with
    AMG-GMRES; the report then counts the iterations of both.
    """
    t0 = time.perf_counter()
    f = np.asarray(f, dtype=float)
    nf = np.linalg.norm(f)
    nv = n_vertex_dofs
    if nf == 0.0:
        return np.zeros_like(f), SolveReport("SCHUR_CG", 0, 0.0, time.perf_counter() - t0)
    sb = schur_blocks(K, nv, block)
    f_V, f_E = f[:nv], f[nv:]
    y_V = sb.A_VV_inv @ f_V
    b_E = f_E - sb.A_EV @ y_V
    nb = np.linalg.norm(b_E)
    if nb == 0.0:
        u_E = np.zeros_like(b_E)
        rep = SolveReport("SCHUR_CG", 0, 0.0, 0.0)
    else:
        amg = build_amg(sb.S, **(amg_options or {}))
        inner_tol = tol * min(1.0, nf / nb)
        u_E, rep = solve_pcg(sb.S, b_E, amg, inner_tol, maxit)
        if not rep.converged:
            # S inherits the non-symmetry of the convection term
            u_E, g = solve_gmres(sb.S, b_E, amg, inner_tol, maxit)
            rep = SolveReport(rep.method, rep.iterations + g.iterations, g.rel_residual, 0.0, g.converged, g.message)
    u_V = sb.A_VV_inv @ (f_V - sb.A_VE @ u_E)
    u = np.concatenate([u_V, u_E])
    rel = _rel_residual(K, f, u, nf)
    ok = bool(rel <= tol)
    msg = rep.message if not ok else ""
    return u, SolveReport("SCHUR_CG", rep.iterations, rel, time.perf_counter() - t0, ok, msg)


def solve(system, method: str = "cg", tol: float = 1e-9, maxit: int = 1000, restart: int = 30, amg_options=None):
    """Solve a :class:`~macroale.assembly.BlockSystem` with the named method.

    ``method`` is one of ``"cg"``, ``"gmres"``, ``"segregated"``.
    """
    method = method.lower()
    K, f = system.K, system.f
    if method == "segregated":
        return solve_segregated(K, f, system.layout.n_vertex_dofs, tol, maxit, amg_options=amg_options)
    t0 = time.perf_counter()
    amg = build_amg(K, **(amg_options or {}))
    setup = time.perf_counter() - t0
    if method == "cg":
        u, rep = solve_pcg(K, f, amg, tol, maxit)
    elif method == "gmres":
        u, rep = solve_gmres(K, f, amg, tol, maxit, restart)
    else:
        raise ValueError(f"unknown solver {method!r}")
    rep.seconds += setup
    return u, rep
