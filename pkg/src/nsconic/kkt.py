"""Assembly of the reduced KKT matrix

    K = [[0, G^T, A^T], [G, 0, 0], [A, 0, -mu H*(z)]]

with the low-rank part of each nonsymmetric Hessian moved into extra rows
and columns.  For a block with H* = D + p p^T - q q^T - r r^T the z-block
gets -mu D, and three extension columns -sqrt(mu) (q, r, p) with diagonal
(-1, -1, +1).  Eliminating the extension rows gives back -mu H*(z) exactly,
while the matrix stays sparse and quasi-definite.

The pattern depends only on the problem, so it is built once together with a
slot map; later iterations only rewrite the numeric values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones import AugmentedHessian, Cone
from .errors import DimensionMismatch
from .ldl import (
    STATIC_REG,
    LdlFactorization,
    SparseSymMatrix,
    SymbolicStructure,
    numeric_factor,
    solve,
    symbolic_factor,
)

N_EXT_LOWRANK = 3


def extension_count(cone: Cone) -> int:
    return N_EXT_LOWRANK if cone.kind in ("genpow", "powmean") else 0


@dataclass
class _BlockSlots:
    offset: int  # first z row of the block (global index)
    dim: int
    diag_pos: np.ndarray  # slots of the block's D entries, or of the dense upper triangle
    ext_pos: np.ndarray | None = None  # (dim, 3) slots for the q, r, p columns


@dataclass
class KKTSystem:
    """Sparse KKT matrix with a fixed pattern and per-iteration value updates."""

    n_x: int
    n_y: int
    n_z: int
    n_ext: int
    matrix: SparseSymMatrix
    reg_signs: np.ndarray
    expanded: bool
    base_values: np.ndarray
    blocks: list[_BlockSlots]
    delta: float = STATIC_REG
    structure: SymbolicStructure | None = field(default=None, repr=False)
    factor: LdlFactorization | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return self.n_x + self.n_y + self.n_z + self.n_ext

    @property
    def predicted_inertia(self) -> tuple[int, int, int]:
        n_pos = int(np.sum(self.reg_signs > 0))
        return n_pos, self.order - n_pos, 0

    def update(self, hessians: list[AugmentedHessian]) -> SparseSymMatrix:
        """Write -mu H*(z) of every block into the matrix values."""
        if len(hessians) != len(self.blocks):
            raise DimensionMismatch(f"expected {len(self.blocks)} Hessian blocks, got {len(hessians)}")
        vals = self.base_values.copy()
        for blk, H in zip(self.blocks, hessians):
            if H.dim != blk.dim:
                raise DimensionMismatch(f"block of dimension {blk.dim} got a Hessian of dimension {H.dim}")
            if not self.expanded:
                full = H.dense()
                iu = np.triu_indices(blk.dim)
                vals[blk.diag_pos] = -full[iu]
                continue
            vals[blk.diag_pos] = -H.mu * H.vals
            if blk.ext_pos is not None:
                cols = np.column_stack([H.scaled_V, H.scaled_U])
                vals[blk.ext_pos] = -cols
        self.matrix = self.matrix.with_values(vals)
        return self.matrix

    def factorize(self) -> LdlFactorization:
        if self.structure is None:
            self.structure = symbolic_factor(self.matrix)
        self.factor = numeric_factor(self.matrix, self.structure, self.reg_signs, self.delta)
        return self.factor

    def solve(self, rhs_xyz: np.ndarray) -> tuple[np.ndarray, float]:
        """Solve with a right-hand side given on the (x, y, z) rows only.

        Extension rows get a zero right-hand side and are dropped from the
        returned solution.
        """
        if self.factor is None:
            raise RuntimeError("factorize() must be called before solve()")
        n = self.n_x + self.n_y + self.n_z
        rhs = np.zeros(self.order)
        rhs[:n] = rhs_xyz
        sol, res = solve(self.factor, self.matrix, rhs)
        return sol[:n], res

    def split(self, v: np.ndarray):
        a, b = self.n_x, self.n_x + self.n_y
        return v[:a], v[a:b], v[b : b + self.n_z]


def _positions(n, rows, cols):
    """Compressed-column pattern of upper triplets and the slot of each one."""
    key = cols.astype(np.int64) * n + rows
    uniq, pos = np.unique(key, return_inverse=True)
    col_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(uniq // n, minlength=n), out=col_ptr[1:])
    return col_ptr, (uniq % n).astype(np.int64), pos


def assemble_kkt(problem, hessians: list[AugmentedHessian], expand: bool = True,
                 delta: float = STATIC_REG) -> KKTSystem:
    """Build the KKT matrix for ``problem`` at the given cone Hessians.

    With ``expand=False`` every block is written as its dense Hessian and no
    extension columns are added; this is the reference assembly whose fill
    grows quadratically with the block size.
    """
    cones = list(problem.cones)
    if len(hessians) != len(cones):
        raise DimensionMismatch(f"{len(cones)} cones but {len(hessians)} Hessian blocks")
    G = sp.coo_matrix(problem.G)
    A = sp.coo_matrix(problem.A)
    n_x, n_y, n_z = A.shape[1], G.shape[0], A.shape[0]
    if G.shape[1] != n_x:
        raise DimensionMismatch(f"G has {G.shape[1]} columns, A has {n_x}")
    if sum(c.dim for c in cones) != n_z:
        raise DimensionMismatch(f"cone dimensions sum to {sum(c.dim for c in cones)}, A has {n_z} rows")
    oy, oz = n_x, n_x + n_y
    n_ext = sum(extension_count(c) for c in cones) if expand else 0
    oe = oz + n_z
    n = oe + n_ext

    rows, cols, vals = [np.arange(n)], [np.arange(n)], [np.zeros(n)]
    rows += [G.col, A.col]
    cols += [oy + G.row, oz + A.row]
    vals += [G.data, A.data]
    tags = []  # (block, kind, start, length)
    count = n + G.nnz + A.nnz

    def push(r, c, kind, blk):
        nonlocal count
        r, c = np.asarray(r), np.asarray(c)
        rows.append(np.minimum(r, c))
        cols.append(np.maximum(r, c))
        vals.append(np.zeros(r.size))
        tags.append((blk, kind, count, r.size))
        count += r.size

    signs = np.concatenate([np.ones(n_x), -np.ones(n_y + n_z), np.zeros(n_ext)])
    ext_diag = np.zeros(n_ext)
    off, e = oz, oe
    for k, (cone, H) in enumerate(zip(cones, hessians)):
        if H.dim != cone.dim:
            raise DimensionMismatch(f"cone {k} has dimension {cone.dim}, Hessian has {H.dim}")
        if expand:
            push(off + H.rows, off + H.cols, "D", k)
            if extension_count(cone):
                loc = np.arange(cone.dim)
                for j in range(N_EXT_LOWRANK):
                    push(off + loc, np.full(cone.dim, e + j), "E", k)
                signs[e : e + 3] = (-1.0, -1.0, 1.0)
                ext_diag[e - oe : e - oe + 3] = (-1.0, -1.0, 1.0)
                e += 3
        else:
            iu, ju = np.triu_indices(cone.dim)
            push(off + iu, off + ju, "D", k)
        off += cone.dim

    col_ptr, row_idx, pos = _positions(n, np.concatenate(rows), np.concatenate(cols))
    base = np.bincount(pos, weights=np.concatenate(vals), minlength=row_idx.size)
    diag_slots = pos[:n]
    base[diag_slots[oe:]] = ext_diag
    K = SparseSymMatrix(n, col_ptr, row_idx, base.copy())

    blocks = []
    off = oz
    for k, cone in enumerate(cones):
        mine = [t for t in tags if t[0] == k]
        dpos = next(pos[s : s + m] for _, kind, s, m in mine if kind == "D")
        epos = [pos[s : s + m] for _, kind, s, m in mine if kind == "E"]
        blk = _BlockSlots(off, cone.dim, dpos)
        if epos:
            blk.ext_pos = np.column_stack(epos)
        blocks.append(blk)
        off += cone.dim
    kkt = KKTSystem(n_x, n_y, n_z, n_ext, K, signs, expand, base, blocks, delta)
    kkt.update(hessians)
    return kkt
