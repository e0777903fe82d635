"""Graph-based algebraic multigrid preconditioner.

Coarse nodes form a maximal independent set of the matrix adjacency graph
(greedy in ascending node order).  A fine node is interpolated as the
plain average of its coarse neighbours; coarse nodes are injected.  Nodes
without off-diagonal couplings (e.g. eliminated Dirichlet rows) are not
carried to the coarse level: the smoother resolves them exactly.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve_triangular

from .errors import SolverError

__all__ = ["Level", "AmgHierarchy", "mis_coarsening", "averaging_prolongation", "build_amg"]

COARSE = 1
FINE = 0
ISOLATED = -1


def _adjacency(A: sp.csr_matrix) -> sp.csr_matrix:
    G = abs(A) + abs(A).T
    G = G.tocsr()
    G.setdiag(0)
    G.eliminate_zeros()
    G.sort_indices()
    return G


def mis_coarsening(A) -> np.ndarray:
    """Split nodes into COARSE / FINE / ISOLATED by a greedy MIS.

    Returns
    -------
    ndarray of int8
        Per node: 1 coarse, 0 fine, -1 isolated (no neighbours).
    """
    G = _adjacency(sp.csr_matrix(A))
    indptr, indices = G.indptr, G.indices
    n = G.shape[0]
    state = np.full(n, -2, dtype=np.int8)
    state[np.diff(indptr) == 0] = ISOLATED
    for i in range(n):
        if state[i] != -2:
            continue
        state[i] = COARSE
        nb = indices[indptr[i] : indptr[i + 1]]
        nb = nb[state[nb] == -2]
        state[nb] = FINE
    return state


def averaging_prolongation(A, splitting) -> sp.csr_matrix:
    """Equal-weight interpolation from the coarse neighbours of each fine node."""
    G = _adjacency(sp.csr_matrix(A))
    n = G.shape[0]
    coarse = np.flatnonzero(splitting == COARSE)
    cindex = np.full(n, -1)
    cindex[coarse] = np.arange(len(coarse))

    rows = [coarse]
    cols = [np.arange(len(coarse))]
    vals = [np.ones(len(coarse))]
    fine = np.flatnonzero(splitting == FINE)
    if len(fine):
        Gf = G[fine].tocoo()
        is_c = splitting[Gf.col] == COARSE
        r, c = fine[Gf.row[is_c]], cindex[Gf.col[is_c]]
        counts = np.bincount(r, minlength=n)
        if np.any(counts[fine] == 0):
            raise SolverError("fine node without a coarse neighbour")
        rows.append(r)
        cols.append(c)
        vals.append(1.0 / counts[r])
    P = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, len(coarse)),
    )
    return P.tocsr()


@dataclass
class Level:
    A: sp.csr_matrix
    P: sp.csr_matrix = None
    R: sp.csr_matrix = None
    lower: sp.csr_matrix = field(default=None, repr=False)
    upper: sp.csr_matrix = field(default=None, repr=False)

    def __post_init__(self):
        self.lower = sp.tril(self.A, format="csr")
        self.upper = sp.triu(self.A, format="csr")

    def gs_forward(self, x, b):
        return x + spsolve_triangular(self.lower, b - self.A @ x, lower=True)

    def gs_backward(self, x, b):
        return x + spsolve_triangular(self.upper, b - self.A @ x, lower=False)


@dataclass
class AmgHierarchy:
    """Multigrid hierarchy applied as a V-cycle preconditioner."""

    levels: list
    presweeps: int = 1
    postsweeps: int = 1
    max_coarse: int = 200
    _coarse_lu: object = field(default=None, repr=False)

    def __post_init__(self):
        Ac = self.levels[-1].A
        if Ac.shape[0] == 0:
            self._coarse_lu = None
        elif Ac.shape[0] <= max(self.max_coarse, 1000):
            lu = sla.lu_factor(Ac.toarray())
            self._coarse_lu = lambda b: sla.lu_solve(lu, b)
        else:
            # coarsening stalled above the cap
            self._coarse_lu = splu(Ac.tocsc()).solve

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level_sizes(self):
        return [lvl.A.shape[0] for lvl in self.levels]

    def _cycle(self, k, b):
        lvl = self.levels[k]
        if k == len(self.levels) - 1:
            if self._coarse_lu is None:
                return np.zeros_like(b)
            return self._coarse_lu(b)
        x = np.zeros_like(b)
        for _ in range(self.presweeps):
            x = lvl.gs_forward(x, b)
        r = b - lvl.A @ x
        x = x + lvl.P @ self._cycle(k + 1, lvl.R @ r)
        for _ in range(self.postsweeps):
            x = lvl.gs_backward(x, b)
        return x

    def apply(self, b) -> np.ndarray:
        """One V-cycle with zero initial guess, approximating ``A^{-1} b``."""
        return self._cycle(0, np.asarray(b, dtype=float))

    __call__ = apply

    def cycle(self, x, b) -> np.ndarray:
        """One stationary V-cycle iteration from ``x``."""
        A = self.levels[0].A
        return x + self.apply(b - A @ x)


def build_amg(
    K, max_coarse: int = 200, max_levels: int = 25, presweeps: int = 1, postsweeps: int = 1
) -> AmgHierarchy:
    """Build a Galerkin hierarchy ``A_{k+1} = P^T A_k P`` down to ``max_coarse``."""
    A = sp.csr_matrix(K, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise SolverError("matrix must be square")
    A.sort_indices()
    if np.any(np.diff(A.indptr) == 0):
        raise SolverError("matrix has empty rows")
    levels = [Level(A)]
    while A.shape[0] > max_coarse and len(levels) < max_levels:
        split = mis_coarsening(A)
        nc = int((split == COARSE).sum())
        if nc == 0 or nc >= A.shape[0]:
            break
        P = averaging_prolongation(A, split)
        R = P.T.tocsr()
        Ac = (R @ A @ P).tocsr()
        Ac.sort_indices()
        levels[-1].P, levels[-1].R = P, R
        A = Ac
        levels.append(Level(A))
    return AmgHierarchy(levels, presweeps, postsweeps, max_coarse=max_coarse)
