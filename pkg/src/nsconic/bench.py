"""Benchmark problem families and a small timing harness.

Three families, each with a native formulation that uses one high-dimensional
nonsymmetric cone and a ``split3d`` formulation built from many
three-dimensional cones:

* ``max_likelihood``: maximize prod x_i^alpha_i over the simplex.
* ``max_volume``: maximize the geometric mean of x inside the intersection
  of a 1-norm and an inf-norm ball of radius gamma.
* ``entropy_max``: minimize the KL divergence sum p_i log(p_i/q_i) from a
  fixed prior q over the simplex.

All problems are posed as minimizations; ``objective`` in reports is the
primal objective of the minimization.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones import GenPow, NonNeg, PowMean, RelEntropy
from .problem import ProblemData
from .solver import Settings, Status, solve

FAMILIES = ("max_likelihood", "max_volume", "entropy_max")
FORMULATIONS = ("native", "split3d", "powmean")
ALPHA_FLOOR = 1e-3
DEFAULT_GAMMA = 1.0
COLUMNS = ("family", "formulation", "size", "iterations", "solve_ms", "status", "objective")


def random_weights(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform(0, 1) draws floored at ALPHA_FLOOR and normalized to sum 1."""
    a = np.maximum(rng.uniform(0.0, 1.0, n), ALPHA_FLOOR)
    return a / a.sum()


class _Rows:
    """Accumulates rows of A x + s = b, one cone block at a time."""

    def __init__(self, n_var: int):
        self.n_var = n_var
        self.rows, self.cols, self.vals, self.b = [], [], [], []
        self.cones = []
        self.m = 0

    def block(self, cone, entries, rhs):
        """Append a cone block; ``entries`` are (local row, var, coeff) of A."""
        for i, j, v in entries:
            self.rows.append(self.m + i)
            self.cols.append(j)
            self.vals.append(v)
        self.b.extend(rhs)
        self.cones.append(cone)
        self.m += cone.dim

    def matrix(self):
        return sp.csc_matrix((self.vals, (self.rows, self.cols)), shape=(self.m, self.n_var))


def _geomean_chain(rows: _Rows, alpha: np.ndarray, x_idx, t_idx, aux_idx):
    """3-D power cones enforcing t <= prod x_i^alpha_i.

    With partial sums S_i = alpha_1 + ... + alpha_i and p_i = alpha_i / S_i the
    chain t_1 = x_1, t_i <= t_{i-1}^(1-p_i) x_i^(p_i) gives
    t_i = prod_{j<=i} x_j^(alpha_j/S_i), so t_n carries the full product.
    """
    n = alpha.size
    p = alpha / np.cumsum(alpha)
    prev = x_idx[0]
    for i in range(1, n):
        cur = t_idx if i == n - 1 else aux_idx[i - 1]
        cone = GenPow((1.0 - p[i], p[i]), 1)
        rows.block(cone, [(0, prev, -1.0), (1, x_idx[i], -1.0), (2, cur, -1.0)], [0.0, 0.0, 0.0])
        prev = cur


def gen_max_likelihood(n: int, seed: int = 0, formulation: str = "native") -> ProblemData:
    """Maximize prod x_i^alpha_i subject to sum x = 1 (as: minimize -t)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    alpha = random_weights(n, np.random.default_rng(seed))
    x_idx = np.arange(n)
    if formulation in ("native", "powmean"):
        n_var = n + 1
        rows = _Rows(n_var)
        cone = GenPow(tuple(alpha), 1) if formulation == "native" else PowMean(tuple(alpha))
        rows.block(cone, [(i, i, -1.0) for i in range(n + 1)], [0.0] * (n + 1))
        t = n
    elif formulation == "split3d":
        n_var = n + (n - 1)
        t = n_var - 1
        rows = _Rows(n_var)
        rows.block(NonNeg(n), [(i, i, -1.0) for i in range(n)], [0.0] * n)
        _geomean_chain(rows, alpha, x_idx, t, np.arange(n, n_var - 1))
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    c = np.zeros(n_var)
    c[t] = -1.0
    G = sp.csc_matrix((np.ones(n), (np.zeros(n, dtype=int), x_idx)), shape=(1, n_var))
    return ProblemData(c, G, np.ones(1), rows.matrix(), np.array(rows.b, dtype=float), rows.cones)


def gen_max_volume(n: int, gamma: float = DEFAULT_GAMMA, seed: int = 0,
                   formulation: str = "native") -> ProblemData:
    """Maximize (prod x_i)^(1/n) subject to ||x||_1 <= gamma, ||x||_inf <= gamma.

    Variables are (x, u, t) with -u <= x <= u and sum u <= gamma.  The
    weights are all 1/n, so ``seed`` only labels the case.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    alpha = np.full(n, 1.0 / n)
    x_idx, u_idx = np.arange(n), np.arange(n, 2 * n)
    n_aux = n - 1 if formulation == "split3d" else 0
    n_var = 2 * n + 1 + max(n_aux - 1, 0)
    t = 2 * n
    rows = _Rows(n_var)
    # u - x >= 0, u + x >= 0, gamma - sum u >= 0, gamma -+ x >= 0
    ent = [(i, x_idx[i], 1.0) for i in range(n)] + [(i, u_idx[i], -1.0) for i in range(n)]
    ent += [(n + i, x_idx[i], -1.0) for i in range(n)] + [(n + i, u_idx[i], -1.0) for i in range(n)]
    ent += [(2 * n, u_idx[i], 1.0) for i in range(n)]
    ent += [(2 * n + 1 + i, x_idx[i], 1.0) for i in range(n)]
    ent += [(3 * n + 1 + i, x_idx[i], -1.0) for i in range(n)]
    rhs = [0.0] * (2 * n) + [gamma] + [gamma] * (2 * n)
    rows.block(NonNeg(4 * n + 1), ent, rhs)
    if formulation == "native":
        rows.block(GenPow(tuple(alpha), 1), [(i, x_idx[i], -1.0) for i in range(n)] + [(n, t, -1.0)], [0.0] * (n + 1))
    elif formulation == "powmean":
        rows.block(PowMean(tuple(alpha)), [(i, x_idx[i], -1.0) for i in range(n)] + [(n, t, -1.0)], [0.0] * (n + 1))
    elif formulation == "split3d":
        _geomean_chain(rows, alpha, x_idx, t, np.arange(2 * n + 1, n_var))
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    c = np.zeros(n_var)
    c[t] = -1.0
    return ProblemData(c, sp.csc_matrix((0, n_var)), np.zeros(0), rows.matrix(), np.array(rows.b, dtype=float),
                       rows.cones)


def gen_entropy_max(d: int, seed: int = 0, formulation: str = "native") -> ProblemData:
    """Minimize sum p_i log(p_i/q_i) over the simplex for a random prior q."""
    if d < 1:
        raise ValueError("d must be at least 1")
    q = random_weights(d, np.random.default_rng(seed))
    p_idx = np.arange(1, d + 1)
    if formulation == "native":
        n_var = d + 1
        rows = _Rows(n_var)
        ent = [(0, 0, -1.0)] + [(d + 1 + i, p_idx[i], -1.0) for i in range(d)]
        rows.block(RelEntropy(d), ent, [0.0] + q.tolist() + [0.0] * d)
    elif formulation == "split3d":
        # variables (t, p, r); r_i >= p_i log(p_i/q_i), sum r <= t
        n_var = 2 * d + 1
        r_idx = np.arange(d + 1, 2 * d + 1)
        rows = _Rows(n_var)
        rows.block(NonNeg(1), [(0, 0, -1.0)] + [(0, r_idx[i], 1.0) for i in range(d)], [0.0])
        for i in range(d):
            rows.block(RelEntropy(1), [(0, r_idx[i], -1.0), (2, p_idx[i], -1.0)], [0.0, float(q[i]), 0.0])
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    c = np.zeros(n_var)
    c[0] = 1.0
    G = sp.csc_matrix((np.ones(d), (np.zeros(d, dtype=int), p_idx)), shape=(1, n_var))
    return ProblemData(c, G, np.ones(1), rows.matrix(), np.array(rows.b, dtype=float), rows.cones)


GENERATORS = {
    "max_likelihood": lambda size, seed, form, gamma: gen_max_likelihood(size, seed, form),
    "max_volume": lambda size, seed, form, gamma: gen_max_volume(size, gamma, seed, form),
    "entropy_max": lambda size, seed, form, gamma: gen_entropy_max(size, seed, form),
}


@dataclass(frozen=True)
class BenchCase:
    family: str
    formulation: str
    n_or_d: int
    seed: int = 0
    gamma: float = DEFAULT_GAMMA

    def build(self) -> ProblemData:
        if self.family not in GENERATORS:
            raise ValueError(f"unknown family {self.family!r}")
        return GENERATORS[self.family](self.n_or_d, self.seed, self.formulation, self.gamma)


@dataclass
class BenchRow:
    case: BenchCase
    iterations: int
    solve_ms: float
    status: str
    objective: float
    error: str = ""

    def as_dict(self) -> dict:
        return {
            "family": self.case.family,
            "formulation": self.case.formulation,
            "size": self.case.n_or_d,
            "iterations": self.iterations,
            "solve_ms": f"{self.solve_ms:.1f}",
            "status": self.status,
            "objective": f"{self.objective:.10g}",
        }


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    @property
    def all_definitive(self) -> bool:
        return all(r.status in {s.value for s in Status if s.definitive} for r in self.rows)

    def to_csv(self, include_timing: bool = True) -> str:
        cols = [c for c in COLUMNS if include_timing or c != "solve_ms"]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(r.as_dict())
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
        for r in self.rows:
            d = r.as_dict()
            lines.append("| " + " | ".join(str(d[c]) for c in COLUMNS) + " |")
        return "\n".join(lines) + "\n"


def run_case(case: BenchCase, settings: Settings | None = None, repeats: int = 3) -> BenchRow:
    """Solve one case ``repeats`` times and report the median solve time."""
    try:
        problem = case.build()
        times, result = [], None
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            result = solve(problem, settings)
            times.append(1e3 * (time.perf_counter() - t0))
        return BenchRow(case, result.iterations, statistics.median(times), str(result.status),
                        result.primal_objective)
    except Exception as e:  # recorded, the run continues
        return BenchRow(case, 0, float("nan"), "Error", float("nan"), f"{type(e).__name__}: {e}")


def run_bench(cases, settings: Settings | None = None, repeats: int = 3) -> BenchReport:
    return BenchReport([run_case(c, settings, repeats) for c in cases])


def suite_cases(suite: str, sizes=None, seed: int = 0, formulations=None) -> list[BenchCase]:
    """Cases for a named suite: a family name or ``all``."""
    defaults = {"max_likelihood": [50, 100], "max_volume": [50, 100], "entropy_max": [50, 100]}
    families = FAMILIES if suite == "all" else (suite,)
    out = []
    for fam in families:
        if fam not in defaults:
            raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(FAMILIES + ('all',))}")
        forms = formulations or ("native", "split3d")
        for size in sizes or defaults[fam]:
            for form in forms:
                if form == "powmean" and fam == "entropy_max":
                    continue
                out.append(BenchCase(fam, form, int(size), seed))
    return out
