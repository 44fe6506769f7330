"""Sparse LDL^T factorization for quasi-definite matrices.

Up-looking elimination driven by the elimination tree, with a static
minimum-degree ordering computed once per sparsity pattern.  Matrices are
stored as the upper triangle in compressed-column form, diagonal always
present.  Regularization is signed: each row carries the sign its pivot is
expected to have, so no 2x2 pivots or row exchanges are ever needed.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, FactorError, RefinementStall

log = logging.getLogger(__name__)

STATIC_REG = 1e-7
PIVOT_TOL = 1e-13
REFINE_TOL = 1e-10
REFINE_MAX = 10


@dataclass
class SparseSymMatrix:
    """Upper triangle of a symmetric matrix in compressed-column storage."""

    n: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    values: np.ndarray

    @classmethod
    def from_scipy(cls, A) -> "SparseSymMatrix":
        """Build from any scipy sparse (or dense) symmetric matrix.

        Only the upper triangle is read.  Structural zeros on the diagonal are
        stored explicitly so that regularization always has a slot.
        """
        A = sp.coo_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {A.shape}")
        n = A.shape[0]
        keep = A.row <= A.col
        idx = np.arange(n)
        rows = np.concatenate([A.row[keep], idx])
        cols = np.concatenate([A.col[keep], idx])
        vals = np.concatenate([A.data[keep], np.zeros(n)])
        return cls.from_triplets(n, rows, cols, vals)

    @classmethod
    def from_triplets(cls, n, rows, cols, vals) -> "SparseSymMatrix":
        """Upper-triangle triplets (duplicates summed) to compressed columns."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if np.any(rows > cols):
            raise DimensionMismatch("triplets must lie in the upper triangle")
        M = sp.csc_matrix((np.asarray(vals, dtype=float), (rows, cols)), shape=(n, n))
        M.sum_duplicates()
        M.sort_indices()
        return cls(n, M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data.astype(float))

    @classmethod
    def from_dense(cls, A) -> "SparseSymMatrix":
        A = np.asarray(A, dtype=float)
        r, c = np.nonzero(np.triu(A))
        return cls.from_triplets(A.shape[0], np.r_[r, np.arange(A.shape[0])],
                                 np.r_[c, np.arange(A.shape[0])], np.r_[A[r, c], np.zeros(A.shape[0])])

    @property
    def nnz(self) -> int:
        return int(self.col_ptr[-1])

    def upper(self) -> sp.csc_matrix:
        return sp.csc_matrix((self.values, self.row_idx, self.col_ptr), shape=(self.n, self.n))

    def to_scipy(self) -> sp.csc_matrix:
        U = self.upper()
        return (U + sp.triu(U, k=1).T).tocsc()

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def diagonal_positions(self) -> np.ndarray:
        """Index into ``values`` of each diagonal entry."""
        # rows are sorted and the diagonal is the last entry of each column
        return self.col_ptr[1:] - 1

    def matvec(self, x: np.ndarray) -> np.ndarray:
        U = self.upper()
        d = self.values[self.diagonal_positions()]
        return U @ x + U.T @ x - d * x

    def with_values(self, values: np.ndarray) -> "SparseSymMatrix":
        return SparseSymMatrix(self.n, self.col_ptr, self.row_idx, np.asarray(values, dtype=float))


def _adjacency(n, col_ptr, row_idx):
    adj = [set() for _ in range(n)]
    for j in range(n):
        for i in row_idx[col_ptr[j] : col_ptr[j + 1]]:
            if i != j:
                adj[i].add(j)
                adj[j].add(int(i))
    return adj


def min_degree_order(K: SparseSymMatrix, dense_threshold: float | None = None) -> np.ndarray:
    """Minimum-degree fill-reducing ordering on the symmetric pattern of K.

    Nodes whose initial degree exceeds ``max(16, 10 sqrt(n))`` are treated as
    dense: they are removed before elimination and ordered last, which keeps
    arrowhead structures (dense rows from low-rank columns or a single
    equality constraint) from destroying sparsity.  Ties are broken by node
    index, so the result is deterministic.
    """
    n = K.n
    adj = _adjacency(n, K.col_ptr, K.row_idx)
    if dense_threshold is None:
        dense_threshold = max(16.0, 10.0 * math.sqrt(n))
    degree0 = [len(a) for a in adj]
    dense = [v for v in range(n) if degree0[v] > dense_threshold]
    dense_set = set(dense)
    if dense_set:
        for v in range(n):
            adj[v] -= dense_set
    alive = np.ones(n, dtype=bool)
    alive[dense] = False
    heap = [(len(adj[v]), v) for v in range(n) if alive[v]]
    heapq.heapify(heap)
    order = []
    while heap:
        deg, v = heapq.heappop(heap)
        if not alive[v] or deg != len(adj[v]):
            continue
        alive[v] = False
        order.append(v)
        nbrs = adj[v]
        for u in nbrs:
            adj[u].discard(v)
            adj[u] |= nbrs
            adj[u].discard(u)
            heapq.heappush(heap, (len(adj[u]), u))
        adj[v] = set()
    dense.sort(key=lambda v: (degree0[v], v))
    return np.array(order + dense, dtype=np.int64)


@numba.njit(cache=True)
def _etree(n, Ap, Ai):
    work = np.full(n, -1, dtype=np.int64)
    Lnz = np.zeros(n, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        work[j] = j
        for p in range(Ap[j], Ap[j + 1]):
            i = Ai[p]
            if i > j:
                return parent, Lnz, -1
            while work[i] != j:
                if parent[i] == -1:
                    parent[i] = j
                Lnz[i] += 1
                work[i] = j
                i = parent[i]
    return parent, Lnz, int(Lnz.sum())


@numba.njit(cache=True)
def _factor(n, Ap, Ai, Ax, Lp, Lnz, parent, signs, pivot_tol, Li, Lx, D):
    y_vals = np.zeros(n)
    y_mark = np.zeros(n, dtype=np.bool_)
    y_idx = np.empty(n, dtype=np.int64)
    buf = np.empty(n, dtype=np.int64)
    nxt = Lp[:n].copy()
    n_bumped = 0
    for k in range(n):
        nnz_y = 0
        D[k] = 0.0
        for p in range(Ap[k], Ap[k + 1]):
            b = Ai[p]
            if b == k:
                D[k] = Ax[p]
                continue
            y_vals[b] = Ax[p]
            if not y_mark[b]:
                y_mark[b] = True
                buf[0] = b
                ne = 1
                nb = parent[b]
                while nb != -1 and nb < k:
                    if y_mark[nb]:
                        break
                    y_mark[nb] = True
                    buf[ne] = nb
                    ne += 1
                    nb = parent[nb]
                while ne > 0:
                    ne -= 1
                    y_idx[nnz_y] = buf[ne]
                    nnz_y += 1
        for t in range(nnz_y - 1, -1, -1):
            c = y_idx[t]
            pos = nxt[c]
            yc = y_vals[c]
            for q in range(Lp[c], pos):
                y_vals[Li[q]] -= Lx[q] * yc
            Li[pos] = k
            Lx[pos] = yc / D[c]
            D[k] -= yc * Lx[pos]
            nxt[c] += 1
            y_vals[c] = 0.0
            y_mark[c] = False
        if abs(D[k]) < pivot_tol or not np.isfinite(D[k]):
            D[k] = signs[k] * pivot_tol
            n_bumped += 1
    return n_bumped


@numba.njit(cache=True)
def _ldl_solve(n, Lp, Li, Lx, D, x):
    for i in range(n):
        xi = x[i]
        for j in range(Lp[i], Lp[i + 1]):
            x[Li[j]] -= Lx[j] * xi
    for i in range(n):
        x[i] /= D[i]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(Lp[i], Lp[i + 1]):
            s -= Lx[j] * x[Li[j]]
        x[i] = s


@dataclass(frozen=True)
class SymbolicStructure:
    """Ordering and elimination structure for one sparsity pattern.

    ``src`` maps every entry of the permuted upper triangle to its position
    in the original ``values`` array, so a numeric refactorization is a
    single gather.
    """

    n: int
    perm: np.ndarray
    pinv: np.ndarray
    col_ptr: np.ndarray
    row_idx: np.ndarray
    src: np.ndarray
    parent: np.ndarray
    Lnz: np.ndarray
    Lp: np.ndarray
    pattern_nnz: int

    @property
    def nnz_L(self) -> int:
        return int(self.Lp[-1])


def symbolic_factor(K: SparseSymMatrix, perm: np.ndarray | None = None) -> SymbolicStructure:
    """Ordering, permuted pattern, elimination tree and column counts of K."""
    n = K.n
    if perm is None:
        perm = min_degree_order(K)
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(n)):
        raise FactorError("perm is not a permutation")
    pinv = np.empty(n, dtype=np.int64)
    pinv[perm] = np.arange(n)
    cols = np.repeat(np.arange(n), np.diff(K.col_ptr))
    pr, pc = pinv[K.row_idx], pinv[cols]
    r, c = np.minimum(pr, pc), np.maximum(pr, pc)
    order = np.lexsort((r, c))
    row_idx = r[order]
    col_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(c, minlength=n), out=col_ptr[1:])
    parent, Lnz, total = _etree(n, col_ptr, row_idx)
    if total < 0:
        raise FactorError("pattern is not upper triangular after permutation")
    Lp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(Lnz, out=Lp[1:])
    return SymbolicStructure(n, perm, pinv, col_ptr, row_idx, order.astype(np.int64), parent, Lnz, Lp, K.nnz)


@dataclass
class LdlFactorization:
    """P (K + diag(delta*signs)) P^T = L D L^T, stored in permuted order."""

    structure: SymbolicStructure
    Lx: np.ndarray
    Li: np.ndarray
    D: np.ndarray
    reg_signs: np.ndarray
    delta: float
    n_bumped: int = 0

    @property
    def perm(self) -> np.ndarray:
        return self.structure.perm

    @property
    def L(self) -> sp.csc_matrix:
        s = self.structure
        L = sp.csc_matrix((self.Lx, self.Li, s.Lp), shape=(s.n, s.n))
        return L + sp.eye(s.n, format="csc")

    @property
    def inertia(self) -> tuple[int, int, int]:
        return int(np.sum(self.D > 0)), int(np.sum(self.D < 0)), int(np.sum(self.D == 0))

    @property
    def expected_inertia(self) -> tuple[int, int, int]:
        return int(np.sum(self.reg_signs > 0)), int(np.sum(self.reg_signs < 0)), 0

    @property
    def nnz_L(self) -> int:
        return self.structure.nnz_L

    def solve_in_place(self, b: np.ndarray) -> np.ndarray:
        s = self.structure
        x = np.ascontiguousarray(b[s.perm], dtype=float)
        _ldl_solve(s.n, s.Lp, self.Li, self.Lx, self.D, x)
        out = np.empty_like(x)
        out[s.perm] = x
        return out


def numeric_factor(
    K: SparseSymMatrix,
    structure: SymbolicStructure,
    reg_signs,
    delta: float = STATIC_REG,
    pivot_tol: float = PIVOT_TOL,
) -> LdlFactorization:
    """Factor K + diag(delta * reg_signs) on a precomputed structure.

    Pivots smaller than ``pivot_tol`` in magnitude are replaced by
    ``reg_sign * pivot_tol``.
    """
    s = structure
    if K.n != s.n or K.nnz != s.pattern_nnz:
        raise FactorError("matrix pattern does not match the symbolic structure")
    signs = np.asarray(reg_signs, dtype=float)
    if signs.shape != (s.n,) or not np.all(np.abs(signs) == 1.0):
        raise FactorError("reg_signs must be a +/-1 vector of the matrix order")
    vals = K.values.copy()
    vals[K.diagonal_positions()] += delta * signs
    Ax = vals[s.src]
    Li = np.empty(s.nnz_L, dtype=np.int64)
    Lx = np.empty(s.nnz_L)
    D = np.empty(s.n)
    psigns = signs[s.perm]
    bumped = _factor(s.n, s.col_ptr, s.row_idx, Ax, s.Lp, s.Lnz, s.parent, psigns, pivot_tol, Li, Lx, D)
    if bumped:
        log.debug("ldl: %d pivots bumped to the dynamic floor", bumped)
    return LdlFactorization(s, Lx, Li, D, psigns[s.pinv], delta, bumped)


def solve(F: LdlFactorization, K: SparseSymMatrix, rhs, tol: float = REFINE_TOL, max_rounds: int = REFINE_MAX):
    """Solve K x = rhs using F, refining against the unregularized K.

    Returns ``(x, residual)`` with the final infinity-norm residual.  Raises
    :class:`RefinementStall` when the residual is not finite or refinement
    leaves it far above tolerance.
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (K.n,):
        raise DimensionMismatch(f"rhs has shape {rhs.shape}, expected ({K.n},)")
    target = tol * max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
    x = F.solve_in_place(rhs)
    r = rhs - K.matvec(x)
    res = float(np.max(np.abs(r), initial=0.0))
    for _ in range(max_rounds):
        if res <= target or not math.isfinite(res):
            break
        x_new = x + F.solve_in_place(r)
        r_new = rhs - K.matvec(x_new)
        res_new = float(np.max(np.abs(r_new), initial=0.0))
        if not res_new < res:
            break
        x, r, res = x_new, r_new, res_new
    if not math.isfinite(res):
        raise RefinementStall("linear solve produced a non-finite residual")
    if res > 1e4 * target:
        raise RefinementStall(f"iterative refinement stalled at residual {res:.3e}")
    return x, res
