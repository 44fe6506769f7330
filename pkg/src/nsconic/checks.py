"""Random interior sampling and the numerical invariant checks.

The samplers draw moderately interior points: points very close to a cone
boundary are legitimate but make the finite-difference and round-trip
comparisons measure conditioning rather than correctness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cones import Cone, GenPow, NonNeg, PowMean, RelEntropy
from .conjugate import conj_gradient, proximity

FAMILIES = ("genpow", "powmean", "relentropy")
POWMEAN_CASES = ("pos", "neg", "zero")


def _weights(n: int, rng: np.random.Generator) -> tuple[float, ...]:
    a = np.maximum(rng.uniform(0.0, 1.0, n), 1e-3)
    a = a / a.sum()
    a[-1] = 1.0 - a[:-1].sum()
    return tuple(a.tolist())


def random_cone(family: str, rng: np.random.Generator, max_dim: int = 12) -> Cone:
    """A random cone of ``family`` with total dimension at most ``max_dim``."""
    if family == "genpow":
        d1 = int(rng.integers(1, max_dim))
        d2 = int(rng.integers(1, max_dim - d1 + 1))
        return GenPow(_weights(d1, rng), d2)
    if family == "powmean":
        return PowMean(_weights(int(rng.integers(1, max_dim)), rng))
    if family == "relentropy":
        return RelEntropy(int(rng.integers(1, (max_dim - 1) // 2 + 1)))
    if family == "nonneg":
        return NonNeg(int(rng.integers(1, max_dim + 1)))
    raise ValueError(f"unknown cone family {family!r}")


def _lognormal(rng, n, sigma=0.5):
    return np.exp(rng.normal(0.0, sigma, n))


def _direction(rng, n):
    w = rng.normal(size=n)
    return w / np.linalg.norm(w)


def primal_point(cone: Cone, rng: np.random.Generator, case: str | None = None) -> np.ndarray:
    """Random point of the primal interior.

    ``case`` selects the sign of the last coordinate for power mean cones
    ("pos", "neg", "zero") and ``"zero"`` forces w = 0 for generalized power
    cones; ``None`` picks at random.
    """
    if isinstance(cone, NonNeg):
        return _lognormal(rng, cone.n)
    if isinstance(cone, GenPow):
        u = _lognormal(rng, cone.d1)
        geo = math.exp(float(np.dot(cone.a, np.log(u))))
        if case == "zero":
            return np.concatenate([u, np.zeros(cone.d2)])
        return np.concatenate([u, rng.uniform(0.05, 0.95) * geo * _direction(rng, cone.d2)])
    if isinstance(cone, PowMean):
        u = _lognormal(rng, cone.d)
        geo = math.exp(float(np.dot(cone.a, np.log(u))))
        case = case or POWMEAN_CASES[int(rng.integers(3))]
        if case == "pos":
            w = rng.uniform(0.05, 0.95) * geo
        elif case == "neg":
            w = -geo * float(np.exp(rng.normal(0.0, 1.0)))
        else:
            w = 0.0
        return np.append(u, w)
    if isinstance(cone, RelEntropy):
        v, w = _lognormal(rng, cone.d), _lognormal(rng, cone.d)
        u = float(np.sum(w * np.log(w / v))) + float(np.exp(rng.normal(0.0, 0.5))) * (1.0 + w.sum())
        return np.concatenate([[u], v, w])
    raise TypeError(f"no sampler for {cone!r}")


def dual_point(cone: Cone, rng: np.random.Generator) -> np.ndarray:
    """Random point of the dual interior."""
    if isinstance(cone, NonNeg):
        return _lognormal(rng, cone.n)
    if isinstance(cone, GenPow):
        u = _lognormal(rng, cone.d1)
        phi = math.exp(float(np.dot(cone.a, np.log(u / cone.a))))
        return np.concatenate([u, rng.uniform(0.05, 0.95) * phi * _direction(rng, cone.d2)])
    if isinstance(cone, PowMean):
        u = _lognormal(rng, cone.d)
        phi = math.exp(float(np.dot(cone.a, np.log(u / cone.a))))
        return np.append(u, -rng.uniform(0.05, 0.95) * phi)
    if isinstance(cone, RelEntropy):
        u = float(_lognormal(rng, 1)[0])
        v = _lognormal(rng, cone.d)
        w = u * (np.log(u / v) - 1.0) + u * _lognormal(rng, cone.d)
        return np.concatenate([[u], v, w])
    raise TypeError(f"no sampler for {cone!r}")


def central_point(cones: list[Cone], rng: np.random.Generator, mu: float | None = None):
    """(s, z, tau, kappa) on the central path s = -mu g*(z), tau kappa = mu."""
    mu = float(np.exp(rng.normal(0.0, 1.0))) if mu is None else mu
    z = np.concatenate([dual_point(k, rng) for k in cones])
    s = np.concatenate([-mu * k.dual_barrier(zk).gradient for k, zk in zip(cones, _split(cones, z))])
    tau = float(np.exp(rng.normal(0.0, 0.5)))
    return s, z, tau, mu / tau


def _split(cones, v):
    out, off = [], 0
    for k in cones:
        out.append(v[off : off + k.dim])
        off += k.dim
    return out


# ---------------------------------------------------------------------------
# individual checks; each returns a nonnegative error


def decomposition_error(cone: Cone, z: np.ndarray) -> float:
    """Relative gap between the augmented reconstruction and the dense Hessian."""
    H = cone.dual_hessian(z)
    aug = cone.augmented_hessian(z, 1.0).dense()
    return float(np.max(np.abs(aug - H)) / max(np.max(np.abs(H)), 1e-300))


def hessian_fd_error(cone: Cone, z: np.ndarray, h: float = 1e-6) -> float:
    """Relative gap between the dense Hessian and central differences of the gradient."""
    H = cone.dual_hessian(z)
    n = z.size
    fd = np.empty((n, n))
    for j in range(n):
        step = h * max(1.0, abs(z[j]))
        e = np.zeros(n)
        e[j] = step
        fd[:, j] = (cone.dual_barrier(z + e).gradient - cone.dual_barrier(z - e).gradient) / (2 * step)
    return float(np.max(np.abs(fd - H)) / max(np.max(np.abs(H)), 1e-300))


def bilinear_error(cone: Cone, s: np.ndarray) -> float:
    """||-g*(-g(s)) - s|| / ||s||: the primal gradient inverts the dual one."""
    g = conj_gradient(cone, s)
    back = -cone.dual_barrier(-g).gradient
    return float(np.linalg.norm(back - s) / np.linalg.norm(s))


@dataclass
class CheckResult:
    name: str
    samples: int
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name:<38} n={self.samples:<5d} worst={self.worst:.3e}  tol={self.tol:.0e}"


def run_checks(samples: int = 200, seed: int = 0) -> list[CheckResult]:
    """Run the barrier, conjugate and proximity invariants on random points."""
    rng = np.random.default_rng(seed)
    out = []
    for fam in FAMILIES:
        dec, fd = 0.0, 0.0
        for _ in range(samples):
            k = random_cone(fam, rng)
            z = dual_point(k, rng)
            dec = max(dec, decomposition_error(k, z))
            fd = max(fd, hessian_fd_error(k, z))
        out.append(CheckResult(f"{fam}: augmented vs dense Hessian", samples, dec, 1e-10))
        out.append(CheckResult(f"{fam}: Hessian vs finite differences", samples, fd, 1e-6))
    for fam in FAMILIES:
        worst = 0.0
        for i in range(samples):
            k = random_cone(fam, rng)
            case = POWMEAN_CASES[i % 3] if fam == "powmean" else ("zero" if i % 5 == 0 else None)
            worst = max(worst, bilinear_error(k, primal_point(k, rng, case)))
        out.append(CheckResult(f"{fam}: bilinear identity", samples, worst, 1e-9))
    worst = 0.0
    for _ in range(samples // 2):
        cones = [random_cone(f, rng) for f in ("genpow", "powmean", "relentropy", "nonneg")]
        worst = max(worst, abs(proximity(cones, *central_point(cones, rng))))
    out.append(CheckResult("proximity on the central path", samples // 2, worst, 1e-8))
    return out
