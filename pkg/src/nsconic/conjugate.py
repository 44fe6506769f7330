"""Primal conjugate gradients, primal barrier values and the proximity measure.

The dual barriers f* are available in closed form; their conjugates are not.
For each nonsymmetric cone the primal gradient g(s) -- the point with
-g*(-g(s)) = s -- reduces to a scalar equation h(x) = 0 whose shape
(monotone, convex or concave) makes plain Newton iteration from the chosen
starting point converge monotonically.  With g(s) in hand the primal barrier
follows from f(s) = -nu - f*(-g(s)).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cones import Cone, GenPow, NonNeg, PowMean, RelEntropy, Zero
from .errors import DomainError, NoConvergence

log = logging.getLogger(__name__)

ROOT_TOL = 1e-12
SMALL_R = 1e-14


@dataclass
class RootProblem:
    """A monotone scalar equation h(x) = 0 with a known safe starting side.

    ``monotonicity``/``curvature`` describe h to the right of ``x0``; the
    supported pairs are (decreasing, convex) with h(x0) >= 0 and
    (increasing, concave) with h(x0) <= 0.  Newton iterates then move
    monotonically to the right.  ``lower`` is an exclusive domain bound.
    """

    h: Callable[[float], float]
    h_prime: Callable[[float], float]
    x0: float
    monotonicity: str = "increasing"
    curvature: str = "concave"
    tol: float = ROOT_TOL
    max_iter: int = 100
    lower: float = -math.inf

    def start_ok(self) -> bool:
        h0 = self.h(self.x0)
        if self.monotonicity == "decreasing" and self.curvature == "convex":
            return h0 >= 0
        if self.monotonicity == "increasing" and self.curvature == "concave":
            return h0 <= 0
        return False


@dataclass
class RootInfo:
    iterations: int
    residual: float
    steps: list = field(default_factory=list)


def newton_root(p: RootProblem, full_output: bool = False):
    """Safeguarded Newton-Raphson for a :class:`RootProblem`.

    Stops once |h(x)| <= tol, or when the Newton correction is below the
    floating point resolution of x (the residual can then not be reduced
    further).  An iterate that leaves the
    domain, evaluates to a non-finite value or jumps past a point already
    known to lie beyond the root is pulled back by bisection toward the last
    valid point.
    """
    eps = np.finfo(float).eps
    start_sign = 1.0 if p.monotonicity == "decreasing" else -1.0
    x = float(p.x0)
    if not x > p.lower:
        raise NoConvergence(f"starting point {x!r} outside the domain")
    hx = p.h(x)
    if not math.isfinite(hx):
        raise NoConvergence(f"h is not finite at the starting point {x!r}")
    lo, hi = x, math.inf
    steps = []
    for it in range(p.max_iter):
        if abs(hx) <= p.tol:
            break
        if hx * start_sign > 0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        dh = p.h_prime(x)
        x_new = x - hx / dh if dh != 0 else math.nan
        if not (math.isfinite(x_new) and x_new > p.lower and lo <= x_new < hi):
            if hi == math.inf:
                raise NoConvergence(f"Newton step left the safe region at x={x!r}")
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4 * eps * max(1.0, abs(x)):
            break
        steps.append(x_new - x)
        x = x_new
        hx = p.h(x)
        while not math.isfinite(hx):
            if x - lo <= 4 * eps * max(1.0, abs(x)):
                raise NoConvergence("root finder left the domain of h")
            hi = min(hi, x)
            x = 0.5 * (x + lo)
            hx = p.h(x)
    else:
        if abs(hx) > p.tol:
            raise NoConvergence(f"no convergence in {p.max_iter} iterations (|h|={abs(hx):.3e})")
    if len(steps) >= 2 and steps[-2] != 0:
        log.debug("newton tail ratio %.3e", abs(steps[-1]) / steps[-2] ** 2)
    if full_output:
        return x, RootInfo(len(steps), abs(hx), steps)
    return x


# Scalar equations for each cone.  Each returns a RootProblem; they are kept
# separate so the shape preconditions can be checked directly in tests.

def genpow_root_problem(alpha: np.ndarray, p: np.ndarray, nr: float) -> RootProblem:
    """Equation for g_{||r||}; decreasing and convex on x > 0.

    h(x) = sum 2 a_i log(||r|| x + (1+a_i)/a_i) - log(2x/||r|| + x^2) - 2 sum a_i log p_i,
    evaluated as 2 log(||r||/phi) plus log1p terms so that the constant part
    (the distance of s to the boundary) is not swamped for large x.
    """
    ka = (1.0 + alpha) / alpha
    logs = 2.0 * float(np.dot(alpha, np.log(p)))
    base = 2.0 * math.log(nr) - logs

    def h(x):
        return base + float(np.dot(2.0 * alpha, np.log1p(ka / (nr * x)))) - math.log1p(2.0 / (nr * x))

    def dh(x):
        return -float(np.dot(2.0 * alpha, ka / (x * (nr * x + ka)))) + 2.0 / (x * (nr * x + 2.0))

    chi = math.exp(logs)
    psi = 1.0 / float(np.dot(alpha, alpha))
    x0 = -1.0 / nr + (psi * nr + math.sqrt(chi * (chi / nr**2 + psi**2 - 1.0))) / (chi - nr**2)
    return RootProblem(h, dh, x0, "decreasing", "convex", lower=0.0)


def powmean_root_problem_pos(alpha: np.ndarray, p: np.ndarray, r: float) -> RootProblem:
    """r > 0: x = 1/g_r solves sum a_i log((1+a_i) x/(a_i p_i) + r/p_i) = log(1 + x/(x+r))."""
    c1 = (1.0 + alpha) / (alpha * p)
    c0 = r / p
    base = float(np.dot(alpha, np.log(c0)))

    def h(x):
        return base + float(np.dot(alpha, np.log1p(c1 * x / c0))) - math.log1p(x / (x + r))

    def dh(x):
        return float(np.dot(alpha, c1 / (c1 * x + c0))) - r / ((2.0 * x + r) * (x + r))

    return RootProblem(h, dh, 0.0, "increasing", "concave", lower=-r / 2.0)


def _r_plus_root(r, x):
    # r + sqrt(r^2 + 4x^2) for r < 0 without cancellation
    return 4.0 * x * x / (math.sqrt(r * r + 4.0 * x * x) - r)


def powmean_root_problem_neg(alpha: np.ndarray, p: np.ndarray, r: float) -> RootProblem:
    """r < 0: x = 1/phi(-g_p) solves sum a_i log(x/(a_i p_i) + (r + sqrt(r^2+4x^2))/(2 p_i)) = 0."""
    ap = alpha * p

    def h(x):
        return float(np.dot(alpha, np.log(x / ap + _r_plus_root(r, x) / (2.0 * p))))

    def dh(x):
        sq = math.sqrt(r * r + 4.0 * x * x)
        num = 1.0 / ap + (2.0 * x / sq) / p
        den = x / ap + _r_plus_root(r, x) / (2.0 * p)
        return float(np.dot(alpha, num / den))

    x0 = math.exp(float(np.dot(alpha, np.log(ap / (1.0 + alpha)))))
    return RootProblem(h, dh, x0, "increasing", "concave", lower=0.0)


def relentropy_root_problem(u: float, v: np.ndarray, w: np.ndarray) -> RootProblem:
    """x = -1/g_u solves d x + sum w_i log((w_i + x)/v_i) = u; increasing, concave."""
    d = v.size
    base = float(np.dot(w, np.log(w / v))) - u

    def h(x):
        return d * x + float(np.dot(w, np.log1p(x / w))) + base

    def dh(x):
        return d + float(np.sum(w / (w + x)))

    return RootProblem(h, dh, 0.0, "increasing", "concave", lower=-float(np.min(w)))


def conj_gradient(cone: Cone, s) -> np.ndarray:
    """Primal gradient g(s) of the conjugate of the cone's dual barrier."""
    return _conjugate(cone, s)[0]


def _conjugate(cone: Cone, s):
    """(g(s), f*(-g(s))) with the barrier value taken from the root equation.

    Near the cone boundary -g(s) approaches the dual boundary and evaluating
    f*(-g) directly loses digits to cancellation in its log argument; the
    scalar equation gives that argument in closed form.
    """
    s = cone._check_len(s)
    if not cone.in_primal_interior(s):
        raise DomainError(f"{cone.kind}: point is not in the primal cone interior")
    if isinstance(cone, NonNeg):
        return -1.0 / s, float(np.sum(np.log(s)))
    if isinstance(cone, Zero):
        return np.zeros_like(s), 0.0
    if isinstance(cone, GenPow):
        return _genpow_conj(cone, s)
    if isinstance(cone, PowMean):
        return _powmean_conj(cone, s)
    if isinstance(cone, RelEntropy):
        return _relentropy_conj(cone, s)
    raise TypeError(f"unsupported cone {cone!r}")


def _genpow_conj(cone: GenPow, s):
    a = cone.a
    p, r = s[: cone.d1], s[cone.d1 :]
    nr = float(np.linalg.norm(r))
    if nr <= SMALL_R * float(np.linalg.norm(p)):
        g = np.concatenate([-(1.0 + a) / p, np.zeros(cone.d2)])
        return g, cone.dual_barrier(-g).value
    x = newton_root(genpow_root_problem(a, p, nr))
    gu = -(1.0 + a + a * x * nr) / p
    g = np.concatenate([gu, (x / nr) * r])
    # zeta(-g) = phi(-g_u) - x^2 = 2x/||r|| at the root
    fstar = -math.log(2.0 * x / nr) - float(np.dot(1.0 - a, np.log(-gu / a)))
    return g, fstar


def _powmean_conj(cone: PowMean, s):
    a = cone.a
    p, r = s[: cone.d], float(s[cone.d])
    if r > 0:
        x = newton_root(powmean_root_problem_pos(a, p, r))
        if not x > 0.0:
            raise NoConvergence("powmean: root underflow, point is numerically on the boundary")
        gr = 1.0 / x
        zeta = 1.0 / (x + r)
    elif r < 0:
        x = newton_root(powmean_root_problem_neg(a, p, r))
        phi = 1.0 / x
        sq = math.sqrt(phi * phi + 4.0 / (r * r))
        gr = -(4.0 / (r * r)) / (2.0 * (phi + sq)) - 1.0 / r
        zeta = 0.5 * phi + phi * phi / (2.0 * (sq + 2.0 / abs(r)))
    else:
        phi = math.exp(float(np.dot(a, np.log((1.0 + a) / (a * p)))))
        gr = phi / 2.0
        zeta = phi / 2.0
    gp = -1.0 / p - a * (1.0 + r * gr) / p
    fstar = -math.log(zeta) - float(np.dot(1.0 - a, np.log(-gp / a))) - math.log(gr)
    return np.append(gp, gr), fstar


def _relentropy_conj(cone: RelEntropy, s):
    d = cone.d
    u, v, w = float(s[0]), s[1 : d + 1], s[d + 1 :]
    x = newton_root(relentropy_root_problem(u, v, w))
    gu = -1.0 / x
    gv = (gu * w - 1.0) / v
    gw = gu * np.log(v / (x + w)) - gu - 1.0 / w
    # at -g the entropy terms gamma_i reduce to 1/w_i
    fstar = float(np.sum(np.log(w)) + 2 * d * math.log(x) - np.sum(np.log(x + w)) + np.sum(np.log(v)))
    return np.concatenate([[gu], gv, gw]), fstar


def primal_barrier(cone: Cone, s) -> float:
    """f(s) = -nu - f*(-g(s)), the exact conjugate of the dual barrier."""
    if isinstance(cone, Zero):
        return 0.0
    return -cone.nu - _conjugate(cone, s)[1]


def proximity(cones: Sequence[Cone], s, z, tau: float, kappa: float) -> float:
    """Functional distance of (s, z, tau, kappa) to the central path.

    The (tau, kappa) pair enters as a one-dimensional nonnegative block, so
    the total degree is nu + 1 and the measure vanishes exactly on the
    central path s = -mu g*(z), tau kappa = mu.
    """
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    if not (tau > 0 and kappa > 0):
        raise DomainError("tau and kappa must be positive")
    one = NonNeg(1)
    nu_bar = 1.0
    total = primal_barrier(one, [kappa]) + one.dual_barrier([tau]).value
    off = 0
    for cone in cones:
        sl = slice(off, off + cone.dim)
        off += cone.dim
        if isinstance(cone, Zero):
            continue
        nu_bar += cone.nu
        total += primal_barrier(cone, s[sl]) + cone.dual_barrier(z[sl]).value
    gap = float(np.dot(s, z)) + tau * kappa
    return nu_bar * math.log(gap) + total - nu_bar * math.log(nu_bar) + nu_bar
