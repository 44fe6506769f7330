import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsconic.checks import decomposition_error, dual_point, hessian_fd_error, random_cone
from nsconic.cones import (
    GenPow,
    NonNeg,
    PowMean,
    RelEntropy,
    Zero,
    degree,
    step_to_boundary,
    unit_init,
)
from nsconic.errors import DomainError

FAMILIES = ("genpow", "powmean", "relentropy", "nonneg")


def test_degree():
    assert degree(GenPow((0.2, 0.3, 0.5), 2)) == 4
    assert degree(RelEntropy(5)) == 15
    assert degree(NonNeg(7)) == 7
    assert degree(PowMean((0.5, 0.5))) == 3
    assert degree(Zero(4)) == 0


def test_dimensions():
    assert GenPow((0.2, 0.3, 0.5), 2).dim == 5
    assert PowMean((0.5, 0.5)).dim == 3
    assert RelEntropy(4).dim == 9


@pytest.mark.parametrize(
    "cone, alpha_msg",
    [
        (GenPow((0.5, 0.6), 1), "alpha sum 1.1 exceeds tolerance"),
        (PowMean((0.5, 0.6)), "alpha sum 1.1 exceeds tolerance"),
        (GenPow((1.0, 0.0), 1), "alpha entries must be"),
    ],
)
def test_alpha_validation(cone, alpha_msg):
    assert any(alpha_msg in e for e in cone.errors())


def test_structural_validation():
    assert GenPow((1.0,), 0).errors()
    assert RelEntropy(0).errors()
    assert not GenPow((0.5, 0.5), 3).errors()


def test_dual_membership_examples():
    assert GenPow((0.5, 0.5), 1).in_dual_interior([1, 1, 0])
    assert PowMean((1.0,)).in_dual_interior([2, -1])
    assert not RelEntropy(1).in_dual_interior([1, 1, -2])
    assert not PowMean((1.0,)).in_dual_interior([2, 0.5])
    assert not GenPow((0.5, 0.5), 1).in_dual_interior([1, np.nan, 0])


def test_primal_membership_examples():
    assert GenPow((0.5, 0.5), 1).in_primal_interior([1, 1, 0.5])
    assert RelEntropy(1).in_primal_interior([1, 1, 1])
    assert not NonNeg(2).in_primal_interior([1, 0])
    assert not GenPow((0.5, 0.5), 1).in_primal_interior([1, 1, 1.0])


def test_genpow_barrier_at_unit_point():
    info = GenPow((1.0,), 1).dual_barrier([1.0, 0.0])
    assert info.value == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(info.gradient, [-2.0, 0.0])


def test_genpow_unit_point_gradient_is_minus_z():
    k = GenPow((0.3, 0.2, 0.5), 2)
    s0, z0 = k.unit_init()
    np.testing.assert_allclose(z0, np.r_[np.sqrt(1 + np.array(k.alpha)), 0, 0])
    np.testing.assert_allclose(k.dual_barrier(z0).gradient, -z0, atol=1e-14)


def test_relentropy_barrier_at_unit_point():
    # f*(u,v,w) = -ln(w - u ln(u/v) + u) - ln u - ln v; at (1,1,0) the
    # partial derivatives are (ln(u/v)/gamma - 1/u, -u/(gamma v) - 1/v, -1/gamma)
    info = RelEntropy(1).dual_barrier([1.0, 1.0, 0.0])
    assert info.value == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(info.gradient, [-1.0, -2.0, -1.0])


def test_dual_barrier_rejects_exterior():
    with pytest.raises(DomainError):
        RelEntropy(1).dual_barrier([1.0, 1.0, -2.0])
    with pytest.raises(DomainError):
        NonNeg(2).dual_barrier([1.0, -1.0])


def test_zero_cone_contributes_nothing():
    info = Zero(3).dual_barrier(np.zeros(3))
    assert info.nu == 0 and info.value == 0
    np.testing.assert_array_equal(info.gradient, 0)


def test_genpow_dense_hessian_example():
    H = GenPow((0.5, 0.5), 1).dual_hessian([1.0, 1.0, 0.0])
    np.testing.assert_allclose(H, np.diag([1.5, 1.5, 0.5]), atol=1e-15)


def test_relentropy_dense_hessian_example():
    H = RelEntropy(1).dual_hessian([1.0, 1.0, 0.0])
    np.testing.assert_allclose(H[1:, 1:], [[3.0, 1.0], [1.0, 1.0]])


def test_genpow_augmented_example():
    H = GenPow((0.5, 0.5), 1).augmented_hessian([1.0, 1.0, 0.0], 1.0)
    np.testing.assert_allclose(H.vals, [1.5, 1.5, 0.5])
    h = math.sqrt(2) / 2
    np.testing.assert_allclose(H.U[:, 0], [h, h, 0], atol=1e-15)
    np.testing.assert_allclose(H.V[:, 0], [h, h, 0], atol=1e-15)
    np.testing.assert_allclose(H.V[:, 1], 0, atol=1e-15)


def test_powmean_augmented_example():
    # phi = 2, zeta = 1, tau = 1/2: D_u = tau phi / u = 1/2, D_w = 1 + 1/w^2 = 2
    k = PowMean((1.0,))
    H = k.augmented_hessian([2.0, -1.0], 1.0)
    np.testing.assert_allclose(H.vals, [0.5, 2.0])
    np.testing.assert_allclose(H.U[:, 0], [1.0, 1.0])
    np.testing.assert_allclose(H.V[:, 0], [math.sqrt(2) / 2, 0.0], atol=1e-15)
    np.testing.assert_allclose(H.V[:, 1], [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(H.dense(), k.dual_hessian([2.0, -1.0]), rtol=1e-14)


@pytest.mark.parametrize("family", ["genpow", "powmean"])
def test_mu_scaling_law(family):
    rng = np.random.default_rng(1)
    k = random_cone(family, rng)
    z = dual_point(k, rng)
    H1, H4 = k.augmented_hessian(z, 1.0), k.augmented_hessian(z, 4.0)
    np.testing.assert_allclose(H4.scaled_U, 2 * H1.scaled_U, rtol=1e-15)
    np.testing.assert_allclose(H4.scaled_V, 2 * H1.scaled_V, rtol=1e-15)
    np.testing.assert_allclose(H4.dense(), 4 * H1.dense(), rtol=1e-13)


def test_unit_init_examples():
    s0, z0 = unit_init(GenPow((0.5, 0.5), 1))
    np.testing.assert_allclose(s0, [math.sqrt(1.5), math.sqrt(1.5), 0])
    np.testing.assert_allclose(z0, s0)
    s0, z0 = unit_init(NonNeg(3))
    np.testing.assert_array_equal(s0, 1.0)
    np.testing.assert_array_equal(z0, 1.0)
    s0, z0 = unit_init(PowMean((1.0,)))
    np.testing.assert_allclose(z0, [1.0, -0.5])
    assert s0 @ z0 == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize(
    "cone", [GenPow((0.25, 0.75), 3), PowMean((0.1, 0.2, 0.7)), RelEntropy(3), NonNeg(4), GenPow((1.0,), 2)]
)
def test_unit_init_on_central_path(cone):
    s0, z0 = cone.unit_init()
    assert cone.in_dual_interior(z0) and cone.in_primal_interior(s0)
    np.testing.assert_allclose(s0, -cone.dual_barrier(z0).gradient, atol=1e-12)
    assert s0 @ z0 == pytest.approx(cone.nu, rel=1e-9)


def test_step_to_boundary_examples():
    assert step_to_boundary(NonNeg(2), [1, 2], [-1, -1]) == 1.0
    assert step_to_boundary(NonNeg(1), [1], [-2]) == 0.5
    assert step_to_boundary(NonNeg(1), [1], [2]) == math.inf
    assert step_to_boundary(GenPow((1.0,), 1), [1, 0], [0, 1]) == pytest.approx(0.9)
    assert step_to_boundary(GenPow((1.0,), 1), [1, 0], [1, 0]) == math.inf
    with pytest.raises(DomainError):
        step_to_boundary(GenPow((1.0,), 1), [1, 2], [0, 1])


def test_step_to_boundary_keeps_interior():
    rng = np.random.default_rng(3)
    for fam in ("genpow", "powmean", "relentropy"):
        for _ in range(30):
            k = random_cone(fam, rng)
            z = dual_point(k, rng)
            dz = rng.normal(size=k.dim) * 3
            a = k.step_to_boundary(z, dz, "dual")
            if a <= 1:
                assert k.in_dual_interior(z + a * dz)


@pytest.mark.parametrize("family", FAMILIES)
def test_decomposition_and_finite_differences(family):
    rng = np.random.default_rng(11)
    for _ in range(40):
        k = random_cone(family, rng)
        z = dual_point(k, rng)
        assert decomposition_error(k, z) <= 1e-10
        assert hessian_fd_error(k, z) <= 1e-6


@pytest.mark.parametrize("family", FAMILIES)
def test_euler_identities(family):
    rng = np.random.default_rng(5)
    for _ in range(40):
        k = random_cone(family, rng)
        z = dual_point(k, rng)
        info = k.dual_barrier(z)
        assert info.gradient @ z == pytest.approx(-k.nu, rel=1e-9)
        np.testing.assert_allclose(k.dual_hessian(z) @ z, -info.gradient, rtol=1e-9, atol=1e-9)
        for t in (0.5, 2.0, 10.0):
            assert k.dual_barrier(t * z).value == pytest.approx(info.value - k.nu * math.log(t), abs=1e-9)


@pytest.mark.parametrize("family", ["genpow", "powmean"])
def test_schur_positivity_and_zero_pattern(family):
    rng = np.random.default_rng(7)
    for _ in range(40):
        k = random_cone(family, rng)
        z = dual_point(k, rng)
        H = k.augmented_hessian(z)
        d1 = k.d1 if family == "genpow" else k.d
        q, r = H.V[:, 0], H.V[:, 1]
        assert np.all(q[d1:] == 0) and np.all(r[:d1] == 0)
        for col in (q, r):
            assert 1.0 - np.sum(col**2 / H.vals) > -1e-12


def test_relentropy_pattern_size():
    d = 4
    H = RelEntropy(d).augmented_hessian(RelEntropy(d).unit_init()[1])
    assert H.rows.size == 5 * d + 1
    assert H.n_ext == 0


def test_augmented_matvec_matches_dense():
    rng = np.random.default_rng(2)
    for fam in ("genpow", "powmean", "relentropy"):
        k = random_cone(fam, rng)
        H = k.augmented_hessian(dual_point(k, rng), 3.0)
        v = rng.normal(size=k.dim)
        np.testing.assert_allclose(H.matvec(v), H.dense() @ v, rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    family=st.sampled_from(FAMILIES),
    seed=st.integers(0, 2**32 - 1),
    log_t=st.floats(-5.0, 5.0),
)
def test_log_homogeneity_property(family, seed, log_t):
    rng = np.random.default_rng(seed)
    k = random_cone(family, rng)
    z = dual_point(k, rng)
    t = math.exp(log_t)
    info, scaled = k.dual_barrier(z), k.dual_barrier(t * z)
    assert scaled.value == pytest.approx(info.value - k.nu * log_t, abs=1e-9 * (1 + abs(info.value)))
    np.testing.assert_allclose(scaled.gradient, info.gradient / t, rtol=1e-9, atol=1e-12)
