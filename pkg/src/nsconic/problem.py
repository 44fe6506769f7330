"""Problem data and the JSON problem-file format.

A problem is

    minimize    c^T x
    subject to  G x = h
                A x + s = b,  s in K_1 x ... x K_k

with the cones partitioning the rows of A in order.  Files are single JSON
objects with sparse matrices as (row, col, value) triplets; duplicate
triplets are summed.  Floats are written with ``repr`` so that a read after
a write returns bit-identical numbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .cones import Cone, GenPow, NonNeg, PowMean, RelEntropy, Zero
from .errors import ParseError, ValidationError

FORMAT_VERSION = "1"


def _csc(M, shape) -> sp.csc_matrix:
    M = sp.csc_matrix(M, shape=shape, dtype=float)
    M.sum_duplicates()
    M.sort_indices()
    return M


@dataclass
class ProblemData:
    c: np.ndarray
    G: sp.csc_matrix
    h: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: list[Cone] = field(default_factory=list)

    @classmethod
    def build(cls, c, A, b, cones, G=None, h=None) -> "ProblemData":
        """Convenience constructor; G and h default to no equality rows."""
        c = np.asarray(c, dtype=float)
        n = c.size
        A = sp.csc_matrix(np.atleast_2d(A) if not sp.issparse(A) else A, dtype=float)
        if G is None:
            G = sp.csc_matrix((0, n))
            h = np.zeros(0)
        G = sp.csc_matrix(np.atleast_2d(G) if not sp.issparse(G) else G, dtype=float)
        if G.shape[0] == 0:
            G = sp.csc_matrix((0, n))
        return cls(c, _csc(G, G.shape), np.asarray(h, dtype=float), _csc(A, A.shape),
                   np.asarray(b, dtype=float), list(cones))

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def p(self) -> int:
        return self.h.size

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def nu(self) -> float:
        return float(sum(k.nu for k in self.cones))

    def cone_slices(self) -> list[slice]:
        out, off = [], 0
        for k in self.cones:
            out.append(slice(off, off + k.dim))
            off += k.dim
        return out

    def validate(self) -> list[str]:
        """Every consistency problem found, as messages.  Empty means valid."""
        errs = []
        n, p, m = self.c.size, self.h.size, self.b.size
        if self.c.ndim != 1 or self.h.ndim != 1 or self.b.ndim != 1:
            errs.append("c, h and b must be vectors")
        if self.G.shape != (p, n):
            errs.append(f"G has shape {self.G.shape}, expected ({p}, {n})")
        if self.A.shape != (m, n):
            errs.append(f"A has shape {self.A.shape}, expected ({m}, {n})")
        for name in ("c", "h", "b"):
            if not np.all(np.isfinite(getattr(self, name))):
                errs.append(f"{name} has non-finite entries")
        for name in ("G", "A"):
            if not np.all(np.isfinite(getattr(self, name).data)):
                errs.append(f"{name} has non-finite entries")
        if m > 0 and not self.cones:
            errs.append(f"A has {m} rows but the cone list is empty")
        total = 0
        for i, k in enumerate(self.cones):
            if not isinstance(k, Cone):
                errs.append(f"cones[{i}] is not a cone: {k!r}")
                continue
            errs.extend(f"cones[{i}]: {e}" for e in k.errors())
            total += k.dim
        if self.cones and total != m:
            errs.append(f"cone dimensions sum to {total}, but A has {m} rows")
        return errs

    def check(self) -> "ProblemData":
        errs = self.validate()
        if errs:
            raise ValidationError(errs)
        return self

    def equals(self, other: "ProblemData") -> bool:
        """Structural equality with bit-identical numeric values."""

        def same(a, b):
            return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()

        def same_sparse(X, Y):
            X, Y = _csc(X, X.shape), _csc(Y, Y.shape)
            return X.shape == Y.shape and all(
                same(np.asarray(getattr(X, f)), np.asarray(getattr(Y, f))) for f in ("indptr", "indices", "data")
            )

        return (
            same(self.c, other.c) and same(self.h, other.h) and same(self.b, other.b)
            and same_sparse(self.G, other.G) and same_sparse(self.A, other.A)
            and [cone_to_dict(k) for k in self.cones] == [cone_to_dict(k) for k in other.cones]
        )


def cone_to_dict(k: Cone) -> dict:
    if isinstance(k, GenPow):
        return {"type": "genpow", "alpha": [float(a) for a in k.alpha], "d1": k.d1, "d2": k.d2}
    if isinstance(k, PowMean):
        return {"type": "powmean", "alpha": [float(a) for a in k.alpha]}
    if isinstance(k, RelEntropy):
        return {"type": "relentropy", "d": k.d}
    if isinstance(k, (NonNeg, Zero)):
        return {"type": k.kind, "n": k.n}
    raise TypeError(f"cannot serialize cone {k!r}")


def _field(obj, key, where, kind=None):
    if key not in obj:
        raise ParseError(f"{where}: missing field '{key}'")
    v = obj[key]
    if kind is int and not (isinstance(v, int) and not isinstance(v, bool)):
        raise ParseError(f"{where}.{key}: expected an integer, got {v!r}")
    if kind is list and not isinstance(v, list):
        raise ParseError(f"{where}.{key}: expected a list, got {type(v).__name__}")
    return v


def _floats(v, where) -> np.ndarray:
    if not isinstance(v, list):
        raise ParseError(f"{where}: expected a list of numbers")
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ParseError(f"{where}[{i}]: expected a number, got {x!r}")
    return np.array(v, dtype=float).reshape(-1)


def cone_from_dict(d: dict, where: str = "cone") -> Cone:
    if not isinstance(d, dict):
        raise ParseError(f"{where}: expected an object")
    kind = _field(d, "type", where)
    if kind == "genpow":
        alpha = _floats(_field(d, "alpha", where, list), f"{where}.alpha")
        d1 = _field(d, "d1", where, int)
        if d1 != alpha.size:
            raise ParseError(f"{where}.d1: {d1} does not match len(alpha) = {alpha.size}")
        return GenPow(tuple(alpha.tolist()), _field(d, "d2", where, int))
    if kind == "powmean":
        return PowMean(tuple(_floats(_field(d, "alpha", where, list), f"{where}.alpha").tolist()))
    if kind == "relentropy":
        return RelEntropy(_field(d, "d", where, int))
    if kind == "nonneg":
        return NonNeg(_field(d, "n", where, int))
    if kind == "zero":
        return Zero(_field(d, "n", where, int))
    raise ParseError(f"{where}.type: unknown cone type {kind!r}")


def _matrix_from_dict(obj, shape, where) -> sp.csc_matrix:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object with 'triplets'")
    trip = _field(obj, "triplets", where, list)
    rows, cols, vals = [], [], []
    for k, t in enumerate(trip):
        if not (isinstance(t, list) and len(t) == 3):
            raise ParseError(f"{where}.triplets[{k}]: expected [row, col, value]")
        i, j, v = t
        if not (isinstance(i, int) and isinstance(j, int)) or isinstance(i, bool) or isinstance(j, bool):
            raise ParseError(f"{where}.triplets[{k}]: indices must be integers")
        if not (0 <= i < shape[0] and 0 <= j < shape[1]):
            raise ParseError(f"{where}.triplets[{k}]: index ({i}, {j}) outside shape {shape}")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{where}.triplets[{k}]: value must be a number")
        rows.append(i)
        cols.append(j)
        vals.append(float(v))
    # coo -> csc sums duplicates in input order, which is deterministic
    M = sp.coo_matrix((np.array(vals, dtype=float), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
                      shape=shape)
    return _csc(M, shape)


def problem_from_dict(obj: dict) -> ProblemData:
    if not isinstance(obj, dict):
        raise ParseError("top level: expected a JSON object")
    version = _field(obj, "version", "top level")
    if version != FORMAT_VERSION:
        raise ParseError(f"version: unsupported format version {version!r}")
    n = _field(obj, "n", "top level", int)
    p = _field(obj, "p", "top level", int)
    m = _field(obj, "m", "top level", int)
    c = _floats(_field(obj, "c", "top level"), "c")
    h = _floats(_field(obj, "h", "top level"), "h")
    b = _floats(_field(obj, "b", "top level"), "b")
    for name, vec, size in (("c", c, n), ("h", h, p), ("b", b, m)):
        if vec.size != size:
            raise ParseError(f"{name}: length {vec.size} does not match declared size {size}")
    G = _matrix_from_dict(_field(obj, "G", "top level"), (p, n), "G")
    A = _matrix_from_dict(_field(obj, "A", "top level"), (m, n), "A")
    cones = [cone_from_dict(d, f"cones[{i}]") for i, d in enumerate(_field(obj, "cones", "top level", list))]
    return ProblemData(c, G, h, A, b, cones)


def _triplets(M) -> dict:
    M = _csc(M, M.shape).tocoo()
    order = np.lexsort((M.col, M.row))
    return {"triplets": [[int(M.row[k]), int(M.col[k]), float(M.data[k])] for k in order]}


def problem_to_dict(problem: ProblemData) -> dict:
    return {
        "version": FORMAT_VERSION,
        "n": problem.n,
        "p": problem.p,
        "m": problem.m,
        "c": problem.c.tolist(),
        "h": problem.h.tolist(),
        "b": problem.b.tolist(),
        "G": _triplets(problem.G),
        "A": _triplets(problem.A),
        "cones": [cone_to_dict(k) for k in problem.cones],
    }


def read_problem(path) -> ProblemData:
    """Parse and validate a problem file."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    problem = problem_from_dict(obj)
    problem.check()
    return problem


def write_problem(problem: ProblemData, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem), indent=1) + "\n")
