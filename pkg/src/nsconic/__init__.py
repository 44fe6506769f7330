"""Interior-point solver for conic programs over generalized power, power
mean and relative entropy cones, using sparse expansions of their dual
barrier Hessians inside a quasi-definite LDL^T factorization."""

from .bench import BenchCase, gen_entropy_max, gen_max_likelihood, gen_max_volume, run_bench
from .cones import GenPow, NonNeg, PowMean, RelEntropy, Zero
from .conjugate import conj_gradient, primal_barrier, proximity
from .errors import (
    DecompositionError,
    DimensionMismatch,
    DomainError,
    FactorError,
    NoConvergence,
    ParseError,
    RefinementStall,
    ValidationError,
)
from .kkt import assemble_kkt
from .problem import ProblemData, read_problem, write_problem
from .solver import Settings, SolveResult, Status, solve

__all__ = [
    "BenchCase",
    "DecompositionError",
    "DimensionMismatch",
    "DomainError",
    "FactorError",
    "GenPow",
    "NoConvergence",
    "NonNeg",
    "ParseError",
    "PowMean",
    "ProblemData",
    "RefinementStall",
    "RelEntropy",
    "Settings",
    "SolveResult",
    "Status",
    "ValidationError",
    "Zero",
    "assemble_kkt",
    "conj_gradient",
    "gen_entropy_max",
    "gen_max_likelihood",
    "gen_max_volume",
    "primal_barrier",
    "proximity",
    "read_problem",
    "run_bench",
    "solve",
    "write_problem",
]
