"""Homogeneous self-dual predictor-corrector method with dual scaling.

Each iteration factors the KKT matrix once and solves it twice per search
direction; the (tau, kappa) components are recovered in closed form.  The
affine direction only sets the centering weight sigma = (1 - alpha_a)^3;
the combined direction is then accepted along a backtracking line search
that keeps the iterate strictly interior and within a proximity
neighbourhood of the central path.

The neighbourhood is Phi <= 1 + nu_ns, where nu_ns is the total barrier
parameter of the nonsymmetric blocks.  Phi itself vanishes on the central
path; the offset widens the gate so that step lengths do not shrink like
1/sqrt(nu) on large blocks.  ``Settings(max_proximity=1.0)`` gives the
strict short-step gate.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cones import AugmentedHessian, Cone, NonNeg, Zero
from .conjugate import proximity
from .errors import DecompositionError, DomainError, FactorError, NoConvergence, RefinementStall
from .kkt import KKTSystem, assemble_kkt
from .ldl import STATIC_REG
from .problem import ProblemData

log = logging.getLogger(__name__)


class Status(enum.Enum):
    SOLVED = "Solved"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    ALMOST_SOLVED = "AlmostSolved"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_ERROR = "NumericalError"

    def __str__(self):
        return self.value

    @property
    def definitive(self) -> bool:
        return self in (Status.SOLVED, Status.PRIMAL_INFEASIBLE, Status.DUAL_INFEASIBLE)


@dataclass
class Settings:
    max_iter: int = 200
    eps: float = 1e-8
    static_reg: float = STATIC_REG
    verbose: bool = False
    reduced_eps: float = 5e-5
    step_fraction: float = 0.99
    backtrack: float = 0.9
    min_step: float = 1e-6
    max_proximity: float | None = None  # None: 1 + nu of the nonsymmetric blocks
    centering_below: float = 0.05
    min_reg: float = 1e-13  # floor when a stalled refinement forces a smaller regularization


@dataclass
class SolverState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    tau: float = 1.0
    kappa: float = 1.0
    mu: float = 1.0
    iteration: int = 0
    r_x: np.ndarray | None = None
    r_y: np.ndarray | None = None
    r_z: np.ndarray | None = None
    r_tau: float = 0.0
    status: Status | None = None


@dataclass
class Direction:
    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray
    ds: np.ndarray
    dtau: float
    dkappa: float


@dataclass
class IterationRecord:
    iteration: int
    mu: float
    primal_res: float
    dual_res: float
    gap: float
    alpha_affine: float = math.nan
    alpha: float = math.nan
    sigma: float = math.nan
    proximity: float = math.nan
    inertia: tuple = ()
    expected_inertia: tuple = ()
    refine_residual: float = math.nan


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    primal_objective: float
    dual_objective: float
    iterations: int
    tau: float
    kappa: float
    trace: list[IterationRecord] = field(default_factory=list)
    solve_time: float = 0.0
    nnz_L: int = 0


# ---------------------------------------------------------------------------
# zero cones become equality rows


@dataclass
class _Standardized:
    problem: ProblemData
    zero_rows: np.ndarray  # rows of the original A handled as equalities
    cone_rows: np.ndarray  # remaining rows, in order
    n_eq: int  # original number of equality rows


def _standardize(problem: ProblemData) -> _Standardized:
    keep, zero = [], []
    for cone, sl in zip(problem.cones, problem.cone_slices()):
        (zero if isinstance(cone, Zero) else keep).append(np.arange(sl.start, sl.stop))
    keep = np.concatenate(keep) if keep else np.zeros(0, dtype=int)
    zero = np.concatenate(zero) if zero else np.zeros(0, dtype=int)
    if zero.size == 0:
        return _Standardized(problem, zero, keep, problem.p)
    A = problem.A.tocsr()
    inner = ProblemData(
        problem.c,
        sp.vstack([problem.G, A[zero]]).tocsc(),
        np.concatenate([problem.h, problem.b[zero]]),
        A[keep].tocsc(),
        problem.b[keep],
        [k for k in problem.cones if not isinstance(k, Zero)],
    )
    return _Standardized(inner, zero, keep, problem.p)


# ---------------------------------------------------------------------------
# residuals and termination


def compute_residuals(state: SolverState, problem: ProblemData):
    """HSDE residuals and the complementarity measure mu; stored on ``state``."""
    x, y, z, s, tau, kappa = state.x, state.y, state.z, state.s, state.tau, state.kappa
    GT_y = problem.G.T @ y
    AT_z = problem.A.T @ z
    r_x = -GT_y - AT_z - problem.c * tau
    r_y = problem.G @ x - problem.h * tau
    r_z = s + problem.A @ x - problem.b * tau
    r_tau = kappa + problem.c @ x + problem.h @ y + problem.b @ z
    mu = (s @ z + kappa * tau) / (problem.nu + 1.0)
    state.r_x, state.r_y, state.r_z, state.r_tau, state.mu = r_x, r_y, r_z, float(r_tau), float(mu)
    return r_x, r_y, r_z, float(r_tau), float(mu)


def _inf(v) -> float:
    return float(np.max(np.abs(v), initial=0.0))


def _data_scale(problem: ProblemData) -> float:
    return max(1.0, _inf(problem.c), _inf(problem.h), _inf(problem.b))


def _kkt_errors(state: SolverState, problem: ProblemData):
    """(primal residual, dual residual, relative gap) of the point scaled by 1/tau."""
    tau = state.tau
    pres = max(_inf(state.r_y), _inf(state.r_z)) / tau
    dres = _inf(state.r_x) / tau
    cx = problem.c @ state.x / tau
    gap = abs(cx + (problem.h @ state.y + problem.b @ state.z) / tau) / (1.0 + abs(cx))
    return pres, dres, gap


def check_termination(state: SolverState, problem: ProblemData, settings: Settings, eps: float | None = None):
    """Status when a stopping test fires, otherwise ``None``."""
    eps = settings.eps if eps is None else eps
    scale = _data_scale(problem)
    pres, dres, gap = _kkt_errors(state, problem)
    if max(pres, dres) <= eps * scale and gap <= eps:
        return Status.SOLVED
    hy_bz = float(problem.h @ state.y + problem.b @ state.z)
    if hy_bz < 0 and state.kappa > state.tau:
        if _inf(problem.G.T @ state.y + problem.A.T @ state.z) <= eps * abs(hy_bz):
            return Status.PRIMAL_INFEASIBLE
    cx = float(problem.c @ state.x)
    if cx < 0 and state.kappa > state.tau:
        if max(_inf(problem.G @ state.x), _inf(problem.A @ state.x + state.s)) <= eps * abs(cx):
            return Status.DUAL_INFEASIBLE
    if state.iteration >= settings.max_iter:
        return Status.MAX_ITERATIONS
    return None


# ---------------------------------------------------------------------------
# Newton directions


@dataclass
class NewtonSystem:
    """The factored KKT system at the current iterate.

    ``v2`` is the solution for the right-hand side (-c, h, b), shared by the
    affine and the combined direction.
    """

    problem: ProblemData
    kkt: KKTSystem
    hessians: list[AugmentedHessian]
    v2: np.ndarray
    refine_residual: float = 0.0

    def hs_matvec(self, dz: np.ndarray) -> np.ndarray:
        out = np.empty_like(dz)
        for sl, H in zip(self.problem.cone_slices(), self.hessians):
            out[sl] = H.matvec(dz[sl])
        return out

    def direction(self, state: SolverState, d_x, d_y, d_z, d_tau, d_s, d_kappa) -> Direction:
        pr = self.problem
        v1, res = self.kkt.solve(np.concatenate([d_x, -d_y, d_s - d_z]))
        self.refine_residual = max(self.refine_residual, res)
        x1, y1, z1 = self.kkt.split(v1)
        x2, y2, z2 = self.kkt.split(self.v2)
        tau, kappa = state.tau, state.kappa
        num = d_tau - d_kappa / tau + pr.c @ x1 + pr.h @ y1 + pr.b @ z1
        den = kappa / tau - pr.c @ x2 - pr.h @ y2 - pr.b @ z2
        dtau = float(num / den)
        dx, dy, dz = x1 + dtau * x2, y1 + dtau * y2, z1 + dtau * z2
        ds = -d_z - pr.A @ dx + pr.b * dtau
        dkappa = -(d_kappa + kappa * dtau) / tau
        return Direction(dx, dy, dz, ds, dtau, float(dkappa))


def build_newton_system(state: SolverState, problem: ProblemData, kkt: KKTSystem | None = None,
                        settings: Settings | None = None) -> NewtonSystem:
    settings = settings or Settings()
    hessians = [k.augmented_hessian(state.z[sl], state.mu) for k, sl in zip(problem.cones, problem.cone_slices())]
    if kkt is None:
        kkt = assemble_kkt(problem, hessians, delta=settings.static_reg)
    else:
        kkt.update(hessians)
    kkt.factorize()
    v2, res = kkt.solve(np.concatenate([-problem.c, problem.h, problem.b]))
    return NewtonSystem(problem, kkt, hessians, v2, res)


def max_step(state: SolverState, problem: ProblemData, d: Direction) -> float:
    """Largest step in (0, 1] keeping (s, z, tau, kappa) strictly interior."""
    a = 1.0
    for k, sl in zip(problem.cones, problem.cone_slices()):
        a = min(a, k.step_to_boundary(state.s[sl], d.ds[sl], "primal"))
        a = min(a, k.step_to_boundary(state.z[sl], d.dz[sl], "dual"))
    if d.dtau < 0:
        a = min(a, -state.tau / d.dtau)
    if d.dkappa < 0:
        a = min(a, -state.kappa / d.dkappa)
    return a


def affine_step(state: SolverState, newton: NewtonSystem):
    """Direction removing the residuals of the linearized model, and its step."""
    d = newton.direction(state, state.r_x, state.r_y, state.r_z, state.r_tau, state.s, state.tau * state.kappa)
    return d, max_step(state, newton.problem, d)


def _dual_grad(problem: ProblemData, z: np.ndarray) -> np.ndarray:
    g = np.empty_like(z)
    for k, sl in zip(problem.cones, problem.cone_slices()):
        g[sl] = k.dual_barrier(z[sl]).gradient
    return g


def _mehrotra(problem: ProblemData, z: np.ndarray, aff: Direction) -> np.ndarray:
    eta = np.zeros_like(z)
    for k, sl in zip(problem.cones, problem.cone_slices()):
        if isinstance(k, NonNeg):
            eta[sl] = aff.ds[sl] * aff.dz[sl] / z[sl]
    return eta


def _moved(state: SolverState, d: Direction, a: float) -> SolverState:
    return SolverState(
        state.x + a * d.dx, state.y + a * d.dy, state.z + a * d.dz, state.s + a * d.ds,
        state.tau + a * d.dtau, state.kappa + a * d.dkappa, state.mu, state.iteration,
    )


def _proximity_or_inf(problem, st: SolverState) -> float:
    if not (st.tau > 0 and st.kappa > 0):
        return math.inf
    try:
        return proximity(problem.cones, st.s, st.z, st.tau, st.kappa)
    except (DomainError, NoConvergence, FloatingPointError, ValueError):
        return math.inf


def proximity_gate(problem: ProblemData, settings: Settings) -> float:
    """Largest Phi accepted by the line search."""
    if settings.max_proximity is not None:
        return settings.max_proximity
    return 1.0 + sum(k.nu for k in problem.cones if not k.symmetric)


def _line_search(state: SolverState, problem: ProblemData, d: Direction, settings: Settings, floor: float):
    a = settings.step_fraction * max_step(state, problem, d)
    gate = proximity_gate(problem, settings)
    while a >= floor:
        phi = _proximity_or_inf(problem, _moved(state, d, a))
        if phi <= gate:
            return a, phi
        a *= settings.backtrack
    return 0.0, math.nan


def combined_step(state: SolverState, newton: NewtonSystem, alpha_a: float, aff: Direction | None,
                  settings: Settings | None = None, floor: float | None = None):
    """Centered, corrected direction and an accepted step length.

    Returns ``(direction, alpha, phi, sigma)``.  ``alpha`` is the largest
    trial step 0.99 alpha_max 0.9^k that keeps the iterate interior with
    Phi within the gate, or 0 when none down to ``floor`` (default
    ``settings.min_step``) does.  Passing ``aff=None`` drops the
    second-order corrections, which with ``alpha_a = 0`` gives the pure
    centering direction.
    """
    settings = settings or Settings()
    floor = settings.min_step if floor is None else floor
    pr = newton.problem
    sigma = (1.0 - alpha_a) ** 3
    mu = state.mu
    d_s = state.s + sigma * mu * _dual_grad(pr, state.z)
    d_kappa = state.tau * state.kappa - sigma * mu
    if aff is not None:
        d_s = d_s + _mehrotra(pr, state.z, aff)
        d_kappa += aff.dtau * aff.dkappa
    w = 1.0 - sigma
    d = newton.direction(state, w * state.r_x, w * state.r_y, w * state.r_z, w * state.r_tau, d_s, d_kappa)
    alpha, phi = _line_search(state, pr, d, settings, floor)
    return d, alpha, phi, sigma


def centering_step(state: SolverState, newton: NewtonSystem, settings: Settings | None = None):
    """Pure centering (sigma = 1): residuals are kept, proximity is restored."""
    return combined_step(state, newton, 0.0, None, settings)


# ---------------------------------------------------------------------------
# driver


def initial_state(problem: ProblemData) -> SolverState:
    s = np.empty(problem.m)
    z = np.empty(problem.m)
    for k, sl in zip(problem.cones, problem.cone_slices()):
        s[sl], z[sl] = k.unit_init()
    return SolverState(np.zeros(problem.n), np.zeros(problem.p), z, s, 1.0, 1.0)


def _finish(status: Status, state: SolverState, std: _Standardized, original: ProblemData,
            trace, t0, nnz_L) -> SolveResult:
    pr = std.problem
    x, y, z, s = state.x, state.y, state.z, state.s
    if status == Status.PRIMAL_INFEASIBLE:
        scale = -1.0 / float(pr.h @ y + pr.b @ z)
        x, s = np.full_like(x, np.nan), np.full_like(s, np.nan)
        y, z = y * scale, z * scale
    elif status == Status.DUAL_INFEASIBLE:
        scale = -1.0 / float(pr.c @ x)
        x, s = x * scale, s * scale
        y, z = np.full_like(y, np.nan), np.full_like(z, np.nan)
    else:
        x, y, z, s = x / state.tau, y / state.tau, z / state.tau, s / state.tau
    # map back rows that were handled as equalities
    full_z = np.zeros(original.m)
    full_s = np.zeros(original.m)
    full_z[std.cone_rows] = z
    full_s[std.cone_rows] = s
    full_z[std.zero_rows] = y[std.n_eq :]
    y = y[: std.n_eq]
    pobj = float(original.c @ x)
    dobj = float(-(original.h @ y) - original.b @ full_z)
    return SolveResult(status, x, y, full_z, full_s, pobj, dobj, state.iteration, state.tau, state.kappa,
                       trace, time.perf_counter() - t0, nnz_L)


def solve(problem: ProblemData, settings: Settings | None = None) -> SolveResult:
    """Solve ``problem``; failures are reported through the status, not raised."""
    settings = settings or Settings()
    t0 = time.perf_counter()
    problem.check()
    std = _standardize(problem)
    pr = std.problem
    state = initial_state(pr)
    trace: list[IterationRecord] = []
    kkt = None
    nnz_L = 0
    if settings.verbose:
        print(f"{'it':>3} {'pres':>9} {'dres':>9} {'gap':>9} {'mu':>9} {'step':>7} {'phi':>7}")
    while True:
        compute_residuals(state, pr)
        pres, dres, gap = _kkt_errors(state, pr)
        rec = IterationRecord(state.iteration, state.mu, pres, dres, gap)
        trace.append(rec)
        status = check_termination(state, pr, settings)
        if status is not None:
            break
        while True:
            try:
                newton = build_newton_system(state, pr, kkt, settings)
                kkt = newton.kkt
                nnz_L = kkt.factor.nnz_L
                rec.inertia = kkt.factor.inertia
                rec.expected_inertia = kkt.predicted_inertia
                aff, alpha_a = affine_step(state, newton)
                d, alpha, phi, sigma = combined_step(state, newton, alpha_a, aff, settings,
                                                     floor=settings.centering_below)
                if alpha == 0.0:
                    d, alpha, phi, sigma = centering_step(state, newton, settings)
                rec.refine_residual = newton.refine_residual
            except RefinementStall as e:
                # near convergence mu H*(z) can fall below the static
                # regularization, which then dominates the z block
                if kkt is not None and kkt.delta > settings.min_reg:
                    kkt.delta = max(kkt.delta * 1e-3, settings.min_reg)
                    log.debug("iteration %d: %s; regularization lowered to %.1e", state.iteration, e, kkt.delta)
                    continue
                log.debug("iteration %d failed: %s", state.iteration, e)
                alpha = 0.0
            except (DecompositionError, FactorError, DomainError, NoConvergence, FloatingPointError) as e:
                log.debug("iteration %d failed: %s", state.iteration, e)
                alpha = 0.0
            else:
                rec.alpha_affine, rec.alpha, rec.proximity, rec.sigma = alpha_a, alpha, phi, sigma
            break
        if settings.verbose:
            print(f"{state.iteration:3d} {pres:9.2e} {dres:9.2e} {gap:9.2e} {state.mu:9.2e} {alpha:7.4f} {rec.proximity:7.3f}")
        if alpha <= 0.0:
            reduced = check_termination(state, pr, settings, eps=settings.reduced_eps)
            status = Status.ALMOST_SOLVED if reduced == Status.SOLVED else Status.NUMERICAL_ERROR
            break
        mu = state.mu
        state = _moved(state, d, alpha)
        state.mu = mu
        state.iteration += 1
    if settings.verbose:
        print(f"status: {status}  iterations: {state.iteration}")
    return _finish(status, state, std, problem, trace, t0, nnz_L)
