import math

import numpy as np
import pytest

from nsconic.bench import gen_max_likelihood, gen_max_volume
from nsconic.cones import GenPow, NonNeg, PowMean, RelEntropy, Zero
from nsconic.problem import ProblemData
from nsconic.solver import (
    Settings,
    SolverState,
    Status,
    affine_step,
    build_newton_system,
    check_termination,
    combined_step,
    compute_residuals,
    initial_state,
    proximity_gate,
    solve,
)


def lp_lower_bound():
    """min x s.t. x >= 1."""
    return ProblemData.build([1.0], [[-1.0]], [-1.0], [NonNeg(1)])


def geomean_simplex(n):
    """max t s.t. sum x = 1, (x, t) in the generalized power cone with equal weights."""
    c = np.zeros(n + 1)
    c[-1] = -1.0
    G = np.r_[np.ones(n), 0.0][None, :]
    return ProblemData.build(c, -np.eye(n + 1), np.zeros(n + 1), [GenPow((1.0 / n,) * n, 1)], G, [1.0])


def test_lp_solves_quickly():
    r = solve(lp_lower_bound())
    assert r.status == Status.SOLVED
    assert r.x[0] == pytest.approx(1.0, abs=1e-7)
    assert r.iterations <= 10
    assert r.primal_objective == pytest.approx(r.dual_objective, abs=1e-7)


def test_geomean_over_simplex():
    r = solve(geomean_simplex(4))
    assert r.status == Status.SOLVED
    assert -r.primal_objective == pytest.approx(0.25, abs=1e-7)
    np.testing.assert_allclose(r.x[:4], 0.25, atol=1e-6)


def test_powmean_matches_genpow_on_simplex():
    pr = geomean_simplex(5)
    pm = ProblemData(pr.c, pr.G, pr.h, pr.A, pr.b, [PowMean((0.2,) * 5)])
    a, b = solve(pr), solve(pm)
    assert a.status == b.status == Status.SOLVED
    assert a.primal_objective == pytest.approx(b.primal_objective, abs=1e-7)


def test_relative_entropy_projection():
    # min u s.t. u >= sum w log(w / v), v = (1, 2) fixed, sum w = 1;
    # optimum w = v / sum v, value log(1/3)
    c = np.array([1.0, 0.0, 0.0])
    A = np.zeros((5, 3))
    A[0, 0] = A[3, 1] = A[4, 2] = -1.0
    b = np.array([0.0, 1.0, 2.0, 0.0, 0.0])
    r = solve(ProblemData.build(c, A, b, [RelEntropy(2)], [[0.0, 1.0, 1.0]], [1.0]))
    assert r.status == Status.SOLVED
    assert r.primal_objective == pytest.approx(math.log(1.0 / 3.0), abs=1e-7)
    # the objective is flat to second order at the optimum, so x is only ~sqrt(eps) accurate
    np.testing.assert_allclose(r.x[1:], [1 / 3, 2 / 3], atol=1e-5)


def test_zero_cone_rows_act_as_equalities():
    # x1 + x2 = 1 written as a zero cone block; min x1 with x >= 0
    A = np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    r = solve(ProblemData.build([1.0, 0.0], A, [1.0, 0.0, 0.0], [Zero(1), NonNeg(2)]))
    assert r.status == Status.SOLVED
    np.testing.assert_allclose(r.x, [0.0, 1.0], atol=1e-7)
    assert r.z.size == 3 and r.s[0] == 0.0
    assert r.dual_objective == pytest.approx(0.0, abs=1e-7)


def test_primal_infeasible_lp():
    r = solve(ProblemData.build([1.0], [[-1.0], [1.0]], [-1.0, 0.0], [NonNeg(2)]))
    assert r.status == Status.PRIMAL_INFEASIBLE
    assert r.dual_objective == pytest.approx(1.0)  # normalized: b^T z = -1
    assert np.all(r.z >= 0)
    assert abs(r.z[1] - r.z[0]) <= 1e-8
    assert np.all(np.isnan(r.x))


def test_dual_infeasible_lp():
    r = solve(ProblemData.build([-1.0], [[-1.0]], [0.0], [NonNeg(1)]))
    assert r.status == Status.DUAL_INFEASIBLE
    assert r.primal_objective == pytest.approx(-1.0)
    assert r.x[0] > 0 and abs(-r.x[0] + r.s[0]) <= 1e-8


def test_residuals_at_unit_init():
    pr = geomean_simplex(3)
    st = initial_state(pr)
    r_x, r_y, r_z, r_tau, mu = compute_residuals(st, pr)
    np.testing.assert_allclose(r_x, -pr.A.T @ st.z - pr.c)
    np.testing.assert_allclose(r_y, -pr.h)
    np.testing.assert_allclose(r_z, st.s - pr.b)
    assert r_tau == pytest.approx(1.0 + pr.b @ st.z)
    assert mu == pytest.approx(1.0, rel=1e-12)


def test_exact_solution_terminates_immediately():
    pr = lp_lower_bound()
    st = SolverState(np.array([1.0]), np.zeros(0), np.array([1.0]), np.array([0.0]), 1.0, 0.0)
    compute_residuals(st, pr)
    assert check_termination(st, pr, Settings()) == Status.SOLVED


def test_infeasibility_ray_detected():
    pr = ProblemData.build([1.0], [[-1.0], [1.0]], [-1.0, 0.0], [NonNeg(2)])
    st = SolverState(np.zeros(1), np.zeros(0), np.array([1.0, 1.0]), np.array([1.0, 1.0]), 1e-9, 1.0)
    compute_residuals(st, pr)
    assert check_termination(st, pr, Settings()) == Status.PRIMAL_INFEASIBLE


def test_zero_iteration_budget():
    r = solve(geomean_simplex(3), Settings(max_iter=0))
    assert r.status == Status.MAX_ITERATIONS
    assert r.iterations == 0
    assert not r.status.definitive


def _newton(pr):
    st = initial_state(pr)
    compute_residuals(st, pr)
    return st, build_newton_system(st, pr)


@pytest.mark.parametrize("make", [lambda: geomean_simplex(4), lambda: gen_max_volume(6)])
def test_affine_direction_solves_linearized_system(make):
    pr = make()
    st, nw = _newton(pr)
    d, alpha = affine_step(st, nw)
    assert 0 < alpha <= 1
    scale = max(1.0, np.abs(st.r_x).max(), np.abs(st.r_z).max())
    np.testing.assert_allclose(-pr.G.T @ d.dy - pr.A.T @ d.dz - pr.c * d.dtau, -st.r_x, atol=1e-8 * scale)
    np.testing.assert_allclose(pr.G @ d.dx - pr.h * d.dtau, -st.r_y, atol=1e-8 * scale)
    np.testing.assert_allclose(d.ds + pr.A @ d.dx - pr.b * d.dtau, -st.r_z, atol=1e-8 * scale)
    lhs = d.dkappa + pr.c @ d.dx + pr.h @ d.dy + pr.b @ d.dz
    assert lhs == pytest.approx(-st.r_tau, abs=1e-8 * scale)
    # complementarity rows
    np.testing.assert_allclose(d.ds + nw.hs_matvec(d.dz), -st.s, atol=1e-8 * scale)
    assert st.tau * d.dkappa + st.kappa * d.dtau == pytest.approx(-st.tau * st.kappa, abs=1e-12)


def test_sigma_formula():
    pr = geomean_simplex(4)
    st, nw = _newton(pr)
    aff, _ = affine_step(st, nw)
    assert combined_step(st, nw, 1.0, aff)[3] == 0.0
    assert combined_step(st, nw, 0.0, aff)[3] == 1.0
    assert combined_step(st, nw, 0.5, aff)[3] == pytest.approx(0.125)


def test_pure_centering_keeps_residuals():
    pr = geomean_simplex(4)
    st, nw = _newton(pr)
    d, alpha, phi, sigma = combined_step(st, nw, 0.0, None)
    assert sigma == 1.0
    # with sigma = 1 the residual right-hand side vanishes
    np.testing.assert_allclose(-pr.G.T @ d.dy - pr.A.T @ d.dz - pr.c * d.dtau, 0.0, atol=1e-9)
    assert alpha > 0 and phi <= proximity_gate(pr, Settings())


def test_proximity_gate():
    pr = ProblemData.build(np.zeros(1), np.zeros((6, 1)), np.zeros(6), [GenPow((0.5, 0.5), 1), NonNeg(3)])
    assert proximity_gate(pr, Settings()) == 1.0 + 3.0
    assert proximity_gate(pr, Settings(max_proximity=1.0)) == 1.0


def test_strict_gate_respected():
    r = solve(gen_max_likelihood(10, seed=0), Settings(max_proximity=1.0))
    assert r.status == Status.SOLVED
    for rec in r.trace:
        if not math.isnan(rec.proximity):
            assert rec.proximity <= 1.0


@pytest.mark.parametrize("make", [lambda: gen_max_likelihood(30), lambda: gen_max_volume(20), lambda: geomean_simplex(6)])
def test_trace_invariants(make):
    r = solve(make())
    assert r.status == Status.SOLVED
    mus = [rec.mu for rec in r.trace]
    for i in range(0, len(mus) - 5):
        assert mus[i + 5] < mus[i]
    for rec in r.trace[:-1]:
        assert rec.inertia == rec.expected_inertia
        assert rec.inertia[2] == 0


def test_bad_input_raises():
    from nsconic.errors import ValidationError

    with pytest.raises(ValidationError):
        solve(ProblemData.build([1.0], [[1.0], [1.0]], [0.0, 0.0], [NonNeg(1)]))
