"""Barrier oracles for the supported cones.

Every cone works with the *dual* barrier f*(z) (dual scaling): membership
tests on both sides, the barrier value and gradient, a dense Hessian used as
a reference, and the augmented-sparse split

    H*(z) = D + p p^T - q q^T - r r^T

that lets the KKT system stay sparse.  Primal barrier information is
recovered by conjugacy in :mod:`nsconic.conjugate`.

Coordinates inside a block are ordered (u, w) for the power cones and
(u, v, w) for the relative entropy cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar

import numpy as np
import scipy.sparse as sp

from .errors import DecompositionError, DomainError

ALPHA_SUM_TOL = 1e-10
ALPHA_MIN = 1e-10
BACKTRACK = 0.9
MIN_STEP = 1e-7


@dataclass(frozen=True)
class BarrierInfo:
    nu: float
    value: float
    gradient: np.ndarray


@dataclass(frozen=True)
class AugmentedHessian:
    """Augmented-sparse form of mu * H*(z) for one cone block.

    ``rows``/``cols``/``vals`` hold the upper triangle of the unscaled sparse
    part D in block-local coordinates; the pattern depends only on the cone,
    never on z.  ``U`` has the "plus" columns (p), ``V`` the "minus" columns
    (q, r).  Scaled quantities follow the stable expansion: D is multiplied by
    mu, the expansion columns by sqrt(mu).
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    U: np.ndarray
    V: np.ndarray
    mu: float = 1.0

    @property
    def n_ext(self) -> int:
        return self.U.shape[1] + self.V.shape[1]

    @property
    def D(self) -> sp.csc_matrix:
        """mu * D as a full symmetric sparse matrix."""
        return self.mu * _sym_from_upper(self.dim, self.rows, self.cols, self.vals)

    @property
    def scaled_U(self) -> np.ndarray:
        return math.sqrt(self.mu) * self.U

    @property
    def scaled_V(self) -> np.ndarray:
        return math.sqrt(self.mu) * self.V

    def dense(self) -> np.ndarray:
        D = _sym_from_upper(self.dim, self.rows, self.cols, self.vals).toarray()
        return self.mu * (D + self.U @ self.U.T - self.V @ self.V.T)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim)
        off = self.rows != self.cols
        np.add.at(out, self.rows, self.vals * v[self.cols])
        np.add.at(out, self.cols[off], self.vals[off] * v[self.rows[off]])
        if self.U.shape[1]:
            out += self.U @ (self.U.T @ v)
        if self.V.shape[1]:
            out -= self.V @ (self.V.T @ v)
        return self.mu * out


def _sym_from_upper(n, rows, cols, vals):
    off = rows != cols
    r = np.concatenate([rows, cols[off]])
    c = np.concatenate([cols, rows[off]])
    v = np.concatenate([vals, vals[off]])
    return sp.csc_matrix((v, (r, c)), shape=(n, n))


def _diag_pattern(n):
    idx = np.arange(n)
    return idx, idx.copy()


class Cone:
    """Base class; concrete cones are frozen dataclasses."""

    kind: ClassVar[str] = ""
    symmetric: ClassVar[bool] = False

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def nu(self) -> float:
        raise NotImplementedError

    def errors(self) -> list[str]:
        return []

    def _check_len(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DomainError(f"{self.kind}: expected vector of length {self.dim}, got shape {v.shape}")
        return v

    def _require_dual(self, z):
        z = self._check_len(z)
        if not self.in_dual_interior(z):
            raise DomainError(f"{self.kind}: point is not in the dual cone interior")
        return z

    # subclasses override the following
    def in_dual_interior(self, z) -> bool:
        raise NotImplementedError

    def in_primal_interior(self, s) -> bool:
        raise NotImplementedError

    def dual_barrier(self, z) -> BarrierInfo:
        raise NotImplementedError

    def dual_hessian(self, z) -> np.ndarray:
        raise NotImplementedError

    def augmented_hessian(self, z, mu: float = 1.0) -> AugmentedHessian:
        raise NotImplementedError

    def unit_init(self) -> tuple[np.ndarray, np.ndarray]:
        z0 = self._unit_z0()
        s0 = -self.dual_barrier(z0).gradient
        return s0, z0

    def _unit_z0(self) -> np.ndarray:
        raise NotImplementedError

    def step_to_boundary(self, v, dv, side: str = "dual") -> float:
        """Largest step keeping ``v + a*dv`` strictly interior.

        Nonsymmetric cones use backtracking on 1, 0.9, 0.81, ... down to
        ``MIN_STEP``; ``inf`` is returned when ``dv`` itself lies in the cone
        interior (then every positive step stays inside).
        """
        inside = self.in_dual_interior if side == "dual" else self.in_primal_interior
        v = self._check_len(v)
        dv = self._check_len(dv)
        if not inside(v):
            raise DomainError(f"{self.kind}: step origin is not interior ({side})")
        if inside(dv):
            return math.inf
        a = 1.0
        while a >= MIN_STEP:
            if inside(v + a * dv):
                return a
            a *= BACKTRACK
        return 0.0


@dataclass(frozen=True)
class Zero(Cone):
    """The zero cone {0}; its dual is the whole space."""

    n: int
    kind: ClassVar[str] = "zero"
    symmetric: ClassVar[bool] = True

    @property
    def dim(self):
        return self.n

    @property
    def nu(self):
        return 0.0

    def errors(self):
        return [] if self.n >= 1 else [f"zero cone dimension must be >= 1, got {self.n}"]

    def in_dual_interior(self, z):
        return bool(np.all(np.isfinite(np.asarray(z, dtype=float))))

    def in_primal_interior(self, s):
        return bool(np.all(np.asarray(s, dtype=float) == 0.0))

    def dual_barrier(self, z):
        self._require_dual(z)
        return BarrierInfo(0.0, 0.0, np.zeros(self.n))

    def dual_hessian(self, z):
        self._require_dual(z)
        return np.zeros((self.n, self.n))

    def augmented_hessian(self, z, mu=1.0):
        self._require_dual(z)
        r, c = _diag_pattern(self.n)
        return AugmentedHessian(self.n, r, c, np.zeros(self.n), np.zeros((self.n, 0)), np.zeros((self.n, 0)), mu)

    def unit_init(self):
        return np.zeros(self.n), np.zeros(self.n)

    def step_to_boundary(self, v, dv, side="dual"):
        return math.inf


@dataclass(frozen=True)
class NonNeg(Cone):
    n: int
    kind: ClassVar[str] = "nonneg"
    symmetric: ClassVar[bool] = True

    @property
    def dim(self):
        return self.n

    @property
    def nu(self):
        return float(self.n)

    def errors(self):
        return [] if self.n >= 1 else [f"nonneg cone dimension must be >= 1, got {self.n}"]

    def in_dual_interior(self, z):
        z = np.asarray(z, dtype=float)
        return bool(np.all(z > 0))

    in_primal_interior = in_dual_interior

    def dual_barrier(self, z):
        z = self._require_dual(z)
        return BarrierInfo(self.nu, float(-np.sum(np.log(z))), -1.0 / z)

    def dual_hessian(self, z):
        z = self._require_dual(z)
        return np.diag(1.0 / z**2)

    def augmented_hessian(self, z, mu=1.0):
        z = self._require_dual(z)
        r, c = _diag_pattern(self.n)
        empty = np.zeros((self.n, 0))
        return AugmentedHessian(self.n, r, c, 1.0 / z**2, empty, empty, mu)

    def unit_init(self):
        return np.ones(self.n), np.ones(self.n)

    def step_to_boundary(self, v, dv, side="dual"):
        v = self._check_len(v)
        dv = self._check_len(dv)
        if not np.all(v > 0):
            raise DomainError("nonneg: step origin is not interior")
        neg = dv < 0
        if not np.any(neg):
            return math.inf
        return float(np.min(-v[neg] / dv[neg]))


def _alpha_errors(alpha, label):
    errs = []
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or a.size == 0:
        return [f"{label}: alpha must be a non-empty vector"]
    if not np.all(np.isfinite(a)):
        errs.append(f"{label}: alpha has non-finite entries")
        return errs
    if np.any(a < ALPHA_MIN):
        errs.append(f"{label}: alpha entries must be >= {ALPHA_MIN:g}")
    total = float(a.sum())
    if abs(total - 1.0) > ALPHA_SUM_TOL:
        errs.append(f"{label}: alpha sum {total:.12g} exceeds tolerance")
    return errs


@dataclass(frozen=True)
class GenPow(Cone):
    """Generalized power cone  prod u_i^alpha_i >= ||w||,  u in R^d1_+, w in R^d2."""

    alpha: tuple
    d2: int
    kind: ClassVar[str] = "genpow"

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))

    @property
    def d1(self):
        return len(self.alpha)

    @cached_property
    def a(self) -> np.ndarray:
        return np.asarray(self.alpha)

    @property
    def dim(self):
        return self.d1 + self.d2

    @property
    def nu(self):
        return float(self.d1 + 1)

    def errors(self):
        errs = _alpha_errors(self.alpha, "genpow")
        if self.d2 < 1:
            errs.append(f"genpow: d2 must be >= 1, got {self.d2}")
        return errs

    def _split(self, z):
        return z[: self.d1], z[self.d1 :]

    def in_dual_interior(self, z):
        z = np.asarray(z, dtype=float)
        u, w = self._split(z)
        if not np.all(u > 0):
            return False
        # prod (u_i/alpha_i)^alpha_i in log space
        return bool(np.exp(np.dot(self.a, np.log(u / self.a))) > np.linalg.norm(w))

    def in_primal_interior(self, s):
        s = np.asarray(s, dtype=float)
        u, w = self._split(s)
        if not np.all(u > 0):
            return False
        return bool(np.exp(np.dot(self.a, np.log(u))) > np.linalg.norm(w))

    def _parts(self, z):
        u, w = self._split(z)
        a = self.a
        phi = np.exp(2.0 * np.dot(a, np.log(u / a)))
        ww = float(np.dot(w, w))
        zeta = phi - ww
        tau = 2.0 * a / u
        return u, w, a, phi, ww, zeta, tau

    def dual_barrier(self, z):
        z = self._require_dual(z)
        u, w, a, phi, ww, zeta, tau = self._parts(z)
        value = -math.log(zeta) - float(np.dot(1.0 - a, np.log(u / a)))
        grad = np.concatenate([-tau * phi / zeta - (1.0 - a) / u, 2.0 * w / zeta])
        return BarrierInfo(self.nu, value, grad)

    def dual_hessian(self, z):
        z = self._require_dual(z)
        u, w, a, phi, ww, zeta, tau = self._parts(z)
        d1 = self.d1
        H = np.empty((self.dim, self.dim))
        H[:d1, :d1] = np.outer(tau, tau) * (phi / zeta) * (phi / zeta - 1.0)
        H[:d1, :d1] += np.diag(tau * phi / (zeta * u) + (1.0 - a) / u**2)
        H[:d1, d1:] = -2.0 * phi * np.outer(tau, w) / zeta**2
        H[d1:, :d1] = H[:d1, d1:].T
        H[d1:, d1:] = 4.0 * np.outer(w, w) / zeta**2 + (2.0 / zeta) * np.eye(self.d2)
        return H

    def augmented_hessian(self, z, mu=1.0):
        z = self._require_dual(z)
        u, w, a, phi, ww, zeta, tau = self._parts(z)
        d1, d2 = self.d1, self.d2
        Du = tau * phi / (zeta * u) + (1.0 - a) / u**2
        Dw = np.full(d2, 2.0 / zeta)
        p0 = math.sqrt(phi * (phi + ww) / 2.0)
        p1 = -2.0 * math.sqrt(2.0 * phi / (phi + ww))
        q0 = math.sqrt(zeta * phi / 2.0)
        r1 = 2.0 * math.sqrt(zeta / (phi + ww))
        p = np.concatenate([p0 * tau / zeta, p1 * w / zeta])
        q = np.concatenate([q0 * tau / zeta, np.zeros(d2)])
        r = np.concatenate([np.zeros(d1), r1 * w / zeta])
        _check_schur(Du, q[:d1], "genpow")
        _check_schur(Dw, r[d1:], "genpow")
        rows, cols = _diag_pattern(self.dim)
        return AugmentedHessian(
            self.dim, rows, cols, np.concatenate([Du, Dw]), p[:, None], np.column_stack([q, r]), mu
        )

    def unit_init(self):
        z0 = np.concatenate([np.sqrt(1.0 + self.a), np.zeros(self.d2)])
        return z0.copy(), z0

    def _unit_z0(self):
        return self.unit_init()[1]


@dataclass(frozen=True)
class PowMean(Cone):
    """Power mean cone  prod u_i^alpha_i >= w,  u in R^d_+, w in R."""

    alpha: tuple
    kind: ClassVar[str] = "powmean"

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))

    @property
    def d(self):
        return len(self.alpha)

    @cached_property
    def a(self) -> np.ndarray:
        return np.asarray(self.alpha)

    @property
    def dim(self):
        return self.d + 1

    @property
    def nu(self):
        return float(self.d + 1)

    def errors(self):
        return _alpha_errors(self.alpha, "powmean")

    def in_dual_interior(self, z):
        z = np.asarray(z, dtype=float)
        u, w = z[: self.d], z[self.d]
        if not (np.all(u > 0) and w < 0):
            return False
        return bool(np.exp(np.dot(self.a, np.log(u / self.a))) > -w)

    def in_primal_interior(self, s):
        s = np.asarray(s, dtype=float)
        u, w = s[: self.d], s[self.d]
        if not np.all(u > 0) or not np.isfinite(w):
            return False
        return bool(np.exp(np.dot(self.a, np.log(u))) > w)

    def _parts(self, z):
        u, w = z[: self.d], float(z[self.d])
        a = self.a
        phi = float(np.exp(np.dot(a, np.log(u / a))))
        zeta = phi + w
        tau = a / (u * zeta)
        return u, w, a, phi, zeta, tau

    def dual_barrier(self, z):
        z = self._require_dual(z)
        u, w, a, phi, zeta, tau = self._parts(z)
        value = -math.log(zeta) - float(np.dot(1.0 - a, np.log(u / a))) - math.log(-w)
        grad = np.append(-tau * phi - (1.0 - a) / u, -1.0 / zeta - 1.0 / w)
        return BarrierInfo(self.nu, value, grad)

    def dual_hessian(self, z):
        z = self._require_dual(z)
        u, w, a, phi, zeta, tau = self._parts(z)
        d = self.d
        H = np.empty((self.dim, self.dim))
        H[:d, :d] = -phi * w * np.outer(tau, tau) + np.diag(tau * phi / u + (1.0 - a) / u**2)
        H[:d, d] = tau * phi / zeta
        H[d, :d] = H[:d, d]
        H[d, d] = 1.0 / zeta**2 + 1.0 / w**2
        return H

    def augmented_hessian(self, z, mu=1.0):
        z = self._require_dual(z)
        u, w, a, phi, zeta, tau = self._parts(z)
        d = self.d
        Du = tau * phi / u + (1.0 - a) / u**2
        theta = 1.0 + 1.0 / w**2
        p = np.append(phi * tau, 1.0 / zeta)
        q = np.append(math.sqrt(zeta * phi) * tau, 0.0)
        r = np.zeros(self.dim)
        r[d] = 1.0
        _check_schur(Du, q[:d], "powmean")
        _check_schur(np.array([theta]), r[d:], "powmean")
        rows, cols = _diag_pattern(self.dim)
        return AugmentedHessian(
            self.dim, rows, cols, np.append(Du, theta), p[:, None], np.column_stack([q, r]), mu
        )

    def _unit_z0(self):
        return np.append(np.ones(self.d), -0.5)


@dataclass(frozen=True)
class RelEntropy(Cone):
    """Relative entropy cone  u >= sum_i w_i log(w_i / v_i),  v, w in R^d_++."""

    d: int
    kind: ClassVar[str] = "relentropy"

    @property
    def dim(self):
        return 2 * self.d + 1

    @property
    def nu(self):
        return float(3 * self.d)

    def errors(self):
        return [] if self.d >= 1 else [f"relentropy: d must be >= 1, got {self.d}"]

    def _split(self, z):
        d = self.d
        return float(z[0]), z[1 : d + 1], z[d + 1 :]

    def in_dual_interior(self, z):
        z = np.asarray(z, dtype=float)
        u, v, w = self._split(z)
        if not (u > 0 and np.all(v > 0)):
            return False
        return bool(np.all(w > u * (np.log(u / v) - 1.0)))

    def in_primal_interior(self, s):
        s = np.asarray(s, dtype=float)
        u, v, w = self._split(s)
        if not (np.all(v > 0) and np.all(w > 0)):
            return False
        return bool(u > np.sum(w * np.log(w / v)))

    def _parts(self, z):
        u, v, w = self._split(z)
        lr = np.log(u / v)
        gamma = w - u * lr + u
        return u, v, w, lr, gamma

    def dual_barrier(self, z):
        z = self._require_dual(z)
        u, v, w, lr, gamma = self._parts(z)
        d = self.d
        value = -float(np.sum(np.log(gamma))) - d * math.log(u) - float(np.sum(np.log(v)))
        grad = np.concatenate([[np.sum(lr / gamma) - d / u], -u / (gamma * v) - 1.0 / v, -1.0 / gamma])
        return BarrierInfo(self.nu, value, grad)

    def _hessian_parts(self, z):
        u, v, w, lr, gamma = self._parts(z)
        d = self.d
        huu = d / u**2 + np.sum(1.0 / (u * gamma)) + np.sum((lr / gamma) ** 2)
        huv = -1.0 / (gamma * v) - u * lr / (gamma**2 * v)
        huw = -lr / gamma**2
        Dvv = u * (gamma + u) / (gamma**2 * v**2) + 1.0 / v**2
        Dww = 1.0 / gamma**2
        Dvw = u / (gamma**2 * v)
        return huu, huv, huw, Dvv, Dww, Dvw

    def dual_hessian(self, z):
        z = self._require_dual(z)
        huu, huv, huw, Dvv, Dww, Dvw = self._hessian_parts(z)
        d = self.d
        H = np.zeros((self.dim, self.dim))
        H[0, 0] = huu
        H[0, 1 : d + 1] = H[1 : d + 1, 0] = huv
        H[0, d + 1 :] = H[d + 1 :, 0] = huw
        iv = np.arange(1, d + 1)
        iw = iv + d
        H[iv, iv] = Dvv
        H[iw, iw] = Dww
        H[iv, iw] = H[iw, iv] = Dvw
        return H

    @cached_property
    def _pattern(self):
        d = self.d
        iv = np.arange(1, d + 1)
        iw = iv + d
        rows = np.concatenate([[0], np.zeros(2 * d, dtype=int), iv, iw, iv])
        cols = np.concatenate([[0], np.arange(1, 2 * d + 1), iv, iw, iw])
        return rows, cols

    def augmented_hessian(self, z, mu=1.0):
        z = self._require_dual(z)
        huu, huv, huw, Dvv, Dww, Dvw = self._hessian_parts(z)
        rows, cols = self._pattern
        vals = np.concatenate([[huu], huv, huw, Dvv, Dww, Dvw])
        empty = np.zeros((self.dim, 0))
        return AugmentedHessian(self.dim, rows, cols, vals, empty, empty, mu)

    def _unit_z0(self):
        return np.concatenate([[1.0], np.ones(self.d), np.zeros(self.d)])


SCHUR_TOL = 1e-12


def _check_schur(Ddiag, col, label):
    # D - c c^T >= 0 for diagonal D  <=>  1 - c^T D^{-1} c >= 0.  With a single
    # exponent alpha = (1,) the u-block complement is exactly singular, so the
    # test allows round-off below zero and only flags true indefiniteness.
    if not np.all(Ddiag > 0) or not 1.0 - float(np.sum(col**2 / Ddiag)) > -SCHUR_TOL:
        raise DecompositionError(f"{label}: D - V V^T is not positive semidefinite")


CONE_TYPES = {c.kind: c for c in (Zero, NonNeg, GenPow, PowMean, RelEntropy)}


# Functional interface, mirroring the cone methods.

def degree(cone: Cone) -> float:
    return cone.nu


def in_dual_interior(cone: Cone, z) -> bool:
    try:
        return cone.in_dual_interior(cone._check_len(z))
    except (DomainError, FloatingPointError):
        return False


def in_primal_interior(cone: Cone, s) -> bool:
    try:
        return cone.in_primal_interior(cone._check_len(s))
    except (DomainError, FloatingPointError):
        return False


def dual_barrier(cone: Cone, z) -> BarrierInfo:
    return cone.dual_barrier(z)


def dense_dual_hessian(cone: Cone, z) -> np.ndarray:
    return cone.dual_hessian(z)


def augmented_hessian(cone: Cone, z, mu: float = 1.0) -> AugmentedHessian:
    if not mu > 0:
        raise DomainError("mu must be positive")
    return cone.augmented_hessian(z, mu)


def unit_init(cone: Cone):
    return cone.unit_init()


def step_to_boundary(cone: Cone, v, dv, side: str = "dual") -> float:
    return cone.step_to_boundary(v, dv, side)
