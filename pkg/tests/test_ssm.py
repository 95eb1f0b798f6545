import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import (
    random_oscillator_system,
    slow_model_cubic_tensor,
    ssm_oracle,
    symmetrize_last,
    tensor_to_monomials,
    to_modal,
)

from vkreduce import BeamConfig, ForcingSpec, assemble
from vkreduce.dynamics import integrate_polar
from vkreduce.sfd import build_rom
from vkreduce.ssm import (
    DiagonalizationError,
    SmallDivisorError,
    coefficient_records,
    compute_ssm,
    compute_ssm_general,
    diagonalize,
    diagonalize_first_order,
    evaluate_w,
    invariance_residual,
    lift_physical,
    loglog_slope,
    master_coordinates,
    modal_cubic_slices,
    polar_to_s,
    reduced_dynamics,
    residual_sweep,
    ssm_diagnostics,
)

from conftest import REFERENCE_ZETA

RHOS = np.logspace(-3, -1, 9)


def _dense(Q):
    return lambda z: np.einsum("ijk,j,k->i", Q, z, z)


def _dense3(C):
    return lambda z: np.einsum("ijkl,j,k,l->i", C, z, z, z)


@pytest.fixture(scope="module")
def small_system(beam2_free):
    return diagonalize(build_rom(beam2_free, 1, forced=False))


@pytest.fixture(scope="module")
def beam_system(beam20):
    b = assemble(BeamConfig(zeta=REFERENCE_ZETA, forcing=ForcingSpec(profile="none")))
    return diagonalize(build_rom(b, 1, forced=False))


def _random_system(seed, n, with_quadratic=True, with_cubic=True):
    rng = np.random.default_rng(seed)
    A, Qp, Cp = random_oscillator_system(rng, n, with_quadratic=with_quadratic, with_cubic=with_cubic)
    sys = diagonalize_first_order(A, _dense(Qp) if with_quadratic else None, _dense3(Cp) if with_cubic else None)
    return sys, Qp, Cp


# ----------------------------------------------------------------------
# diagonalization


def test_beam_diagonalization(beam_system):
    assert beam_system.diagonalization_residual() < 1e-12
    np.testing.assert_allclose(beam_system.Pinv @ beam_system.P, np.eye(beam_system.dim), atol=1e-10)
    ci = beam_system.conj_index
    np.testing.assert_array_equal(ci[ci], np.arange(beam_system.dim))
    np.testing.assert_allclose(beam_system.eigenvalues[ci], np.conj(beam_system.eigenvalues), rtol=1e-12)


def test_overdamped_modes_cannot_be_master(beam_system):
    with pytest.raises(DiagonalizationError):
        beam_system.master(20)
    with pytest.raises(ValueError):
        beam_system.master(21)


def test_forced_or_second_order_models_rejected(beam6):
    with pytest.raises(ValueError):
        diagonalize(build_rom(beam6, 1, forced=True))
    with pytest.raises(ValueError):
        diagonalize(build_rom(beam6, 2, forced=False))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_general_diagonalization(n):
    sys, _, _ = _random_system(n, n)
    assert sys.diagonalization_residual() < 1e-12
    assert np.all(np.diff(sys.eigenvalues.real[::2]) <= 1e-12)


@given(t=st.floats(-2.0, 2.0), seed=st.integers(0, 10_000))
def test_modal_nonlinearity_is_cubic(small_system, t, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=small_system.dim) + 1j * rng.normal(size=small_system.dim)
    np.testing.assert_allclose(small_system.modal_nonlinearity(t * z), t**3 * small_system.modal_nonlinearity(z),
                               rtol=1e-9, atol=1e-9)


def test_linear_system_has_trivial_manifold():
    A = np.array([[0.0, 1.0], [-4.0, -0.1]])
    sys = diagonalize_first_order(A)
    exp = compute_ssm(sys, 1)
    assert not np.any(exp.W3) and exp.beta == 0
    assert not np.any(sys.modal_nonlinearity(np.ones(2, complex)))


# ----------------------------------------------------------------------
# coefficients against independent oracles


@pytest.mark.parametrize("normalization", ["eigenvalue", "unit"])
def test_slices_match_dense_tensor(beam2_free, small_system, normalization):
    T = symmetrize_last(to_modal(slow_model_cubic_tensor(beam2_free, 1), small_system.P, small_system.Pinv))
    exp = compute_ssm(small_system, 1, normalization)
    v = (exp.W1[:, 0], exp.W1[:, 1])
    sl = modal_cubic_slices(small_system, 1, normalization)
    for j, k, l in np.ndindex(2, 2, 2):
        ref = np.einsum("ijkl,j,k,l->i", T, v[j], v[k], v[l])
        np.testing.assert_allclose(sl[j, k, l], ref, rtol=1e-9, atol=1e-9 * np.max(np.abs(ref)))


@pytest.mark.parametrize("normalization", ["eigenvalue", "unit"])
def test_beam_coefficients_match_taylor_oracle(beam2_free, small_system, normalization):
    assert small_system.dim <= 8
    T = symmetrize_last(to_modal(slow_model_cubic_tensor(beam2_free, 1), small_system.P, small_system.Pinv))
    exp = compute_ssm(small_system, 1, normalization)
    m0, m1 = exp.master
    W, R = ssm_oracle(small_system.eigenvalues, None, T, m0, m1, *exp.scale)
    assert abs(R[(2, 1)][0] - exp.beta) <= 1e-8 * abs(exp.beta)
    assert abs(R[(1, 2)][1] - exp.beta_conj) <= 1e-8 * abs(exp.beta)
    mono = tensor_to_monomials(exp.W3)
    ref = max(np.max(np.abs(W[m])) for m in mono)
    for m in mono:
        np.testing.assert_allclose(mono[m], W[m], rtol=0, atol=1e-8 * ref)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("normalization", ["eigenvalue", "unit"])
def test_general_coefficients_match_taylor_oracle(n, normalization):
    sys, Qp, Cp = _random_system(10 + n, n)
    Q2 = symmetrize_last(to_modal(Qp, sys.P, sys.Pinv))
    T3 = symmetrize_last(to_modal(Cp, sys.P, sys.Pinv))
    exp = compute_ssm_general(sys, 1, normalization)
    m0, m1 = exp.master
    W, R = ssm_oracle(sys.eigenvalues, Q2, T3, m0, m1, *exp.scale)
    assert abs(R[(2, 1)][0] - exp.beta) <= 1e-8 * abs(exp.beta)
    for Wk in (exp.W2, exp.W3):
        mono = tensor_to_monomials(Wk)
        ref = max(np.max(np.abs(W[m])) for m in mono)
        for m in mono:
            np.testing.assert_allclose(mono[m], W[m], rtol=0, atol=1e-8 * ref)


def test_kill_factors(beam_system):
    exp = compute_ssm(beam_system, 1)
    m0, m1 = exp.master
    for j, k, l in np.ndindex(2, 2, 2):
        cnt = j + k + l
        if cnt == 1:
            assert exp.W3[m0, j, k, l] == 0
        if cnt == 2:
            assert exp.W3[m1, j, k, l] == 0
    assert not np.any(exp.W2)


def test_conjugate_symmetry(beam_system):
    exp = compute_ssm(beam_system, 1)
    ci = beam_system.conj_index
    assert exp.beta_conj == pytest.approx(np.conj(exp.beta), rel=1e-12)
    flipped = np.conj(exp.W3[ci][:, ::-1, ::-1, ::-1])
    np.testing.assert_allclose(exp.W3, flipped, rtol=1e-10, atol=1e-12 * np.max(np.abs(exp.W3)))


def test_per_permutation_coefficients_are_symmetric(beam_system):
    W3 = compute_ssm(beam_system, 1).W3
    np.testing.assert_allclose(W3, W3.transpose(0, 2, 1, 3), atol=1e-14 * np.max(np.abs(W3)))
    np.testing.assert_allclose(W3, W3.transpose(0, 3, 2, 1), atol=1e-14 * np.max(np.abs(W3)))


def test_normalizations_describe_the_same_manifold(small_system):
    e1 = compute_ssm(small_system, 1, "eigenvalue")
    e2 = compute_ssm(small_system, 1, "unit")
    c = np.array(e1.scale)
    s = polar_to_s(0.05, 0.4)
    np.testing.assert_allclose(evaluate_w(e1, s), evaluate_w(e2, c * s, check=False), rtol=0,
                               atol=1e-12 * np.max(np.abs(evaluate_w(e1, s))))
    assert e1.beta == pytest.approx(e2.beta * c[0] * c[1], rel=1e-10)


# ----------------------------------------------------------------------
# invariance


@pytest.mark.parametrize("normalization", ["eigenvalue", "unit"])
def test_beam_residual_is_fourth_order_or_better(beam_system, normalization):
    exp = compute_ssm(beam_system, 1, normalization)
    assert loglog_slope(RHOS, residual_sweep(beam_system, exp, RHOS)) >= 3.5


def test_general_path_reduces_to_cubic_path(small_system):
    a = compute_ssm(small_system, 1)
    b = compute_ssm_general(small_system, 1)
    np.testing.assert_allclose(b.W3, a.W3, rtol=0, atol=1e-12 * np.max(np.abs(a.W3)))
    assert abs(b.beta - a.beta) <= 1e-12 * abs(a.beta)
    assert not np.any(b.W2)


def test_general_path_with_zero_quadratic_tensor():
    sys, _, Cp = _random_system(5, 3, with_quadratic=False)
    zero_q = diagonalize_first_order(sys.A, _dense(np.zeros((6, 6, 6))), _dense3(Cp))
    a = compute_ssm(sys, 1)
    b = compute_ssm_general(zero_q, 1)
    np.testing.assert_allclose(b.W3, a.W3, rtol=0, atol=1e-12 * np.max(np.abs(a.W3)))
    assert abs(b.beta - a.beta) <= 1e-12 * abs(a.beta)


@pytest.mark.parametrize("normalization", ["eigenvalue", "unit"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_general_residual_slope(seed, normalization):
    sys, _, _ = _random_system(seed, 3)
    exp = compute_ssm_general(sys, 1, normalization)
    assert loglog_slope(RHOS, residual_sweep(sys, exp, RHOS)) >= 3.5


def test_naive_general_variant_breaks_invariance():
    sys, _, _ = _random_system(0, 3)
    exp = compute_ssm_general(sys, 1, variant="naive")
    assert loglog_slope(RHOS, residual_sweep(sys, exp, RHOS)) < 3.5
    with pytest.raises(ValueError):
        compute_ssm_general(sys, 1, variant="bogus")


def test_small_divisor_is_reported():
    # second pair sits exactly at 2 lam + conj(lam) of the first
    A = np.zeros((4, 4))
    A[:2, :2] = [[-0.1, 1.0], [-1.0, -0.1]]
    A[2:, 2:] = [[-0.3, 1.0], [-1.0, -0.3]]
    C = np.zeros((4, 4, 4, 4))
    C[:, 0, 0, 0] = 1.0
    sys = diagonalize_first_order(A, cubic=_dense3(C))
    with pytest.raises(SmallDivisorError) as info:
        compute_ssm(sys, 1)
    assert info.value.row == 2


def test_quadratic_small_divisor_is_reported():
    A = np.zeros((4, 4))
    A[:2, :2] = [[-0.1, 1.0], [-1.0, -0.1]]
    A[2:, 2:] = [[-0.2, 2.0], [-2.0, -0.2]]
    Q = np.zeros((4, 4, 4))
    Q[:, 0, 0] = 1.0
    sys = diagonalize_first_order(A, quadratic=_dense(Q))
    with pytest.raises(SmallDivisorError):
        compute_ssm_general(sys, 1)


def test_residual_vanishes_at_origin(beam_system):
    exp = compute_ssm(beam_system, 1)
    assert not np.any(invariance_residual(beam_system, exp, np.zeros(2)))


# ----------------------------------------------------------------------
# evaluation and reduced dynamics


def test_evaluation_contract(beam_system):
    exp = compute_ssm(beam_system, 1)
    assert not np.any(evaluate_w(exp, np.zeros(2)))
    with pytest.raises(ValueError):
        evaluate_w(exp, np.array([0.1, 0.2j]))
    with pytest.raises(ValueError):
        evaluate_w(exp, np.zeros(3))


@given(rho=st.floats(0.0, 0.5), theta=st.floats(0.0, 2 * np.pi))
def test_lifted_states_are_real(small_system, rho, theta):
    exp = compute_ssm(small_system, 1)
    z = small_system.P @ evaluate_w(exp, polar_to_s(rho, theta))
    assert np.max(np.abs(z.imag)) <= 1e-10 * max(np.max(np.abs(z)), 1e-300)
    lift_physical(small_system, exp, polar_to_s(rho, theta))


def test_diagnostics_on_the_manifold(beam_system):
    exp = compute_ssm(beam_system, 1)
    z = np.array([evaluate_w(exp, polar_to_s(r, 0.2)) for r in (0.0, 0.1, 0.3)])
    dist, amp = ssm_diagnostics(beam_system, exp, z)
    assert np.max(dist) < 1e-12 * max(np.max(amp), 1.0)
    assert amp[0] == 0 and amp[2] > amp[1]
    s = master_coordinates(exp, z[2])
    np.testing.assert_allclose(s, polar_to_s(0.3, 0.2), rtol=1e-12)


def test_polar_dynamics(beam_system):
    exp = compute_ssm(beam_system, 1)
    pd = reduced_dynamics(exp)
    assert pd.re_lambda == pytest.approx(-0.0295, rel=1e-2)
    assert pd.backbone(0.0) == pytest.approx(exp.lam.imag)
    s = polar_to_s(0.2, 0.0)
    r = exp.R(s)
    assert (r[0] / s[0]).real == pytest.approx(pd.re_lambda + pd.re_beta * 0.04)
    traj = integrate_polar(pd, 0.3, 0.0, 50.0, 201)
    np.testing.assert_allclose(traj.q[:, 0], pd.rho_closed_form(0.3, traj.tau), rtol=1e-7)


def test_stationary_amplitude():
    from vkreduce.ssm import PolarDynamics
    assert PolarDynamics(-1.0, 1.0, 4.0, 0.0).stationary_amplitude() == pytest.approx(0.5)
    assert PolarDynamics(-1.0, 1.0, -4.0, 0.0).stationary_amplitude() is None


def test_conservative_model_has_imaginary_cubic_coefficient():
    b = assemble(BeamConfig(zeta=REFERENCE_ZETA, n_elements=4, forcing=ForcingSpec(profile="none")))
    sys = diagonalize(build_rom(b, 0, forced=False))
    exp = compute_ssm(sys, 1, "unit")
    assert abs(exp.beta.real) < 1e-10 * abs(exp.beta)
    assert exp.lam.real == 0


def test_coefficient_records(small_system):
    exp = compute_ssm(small_system, 1)
    recs = coefficient_records(exp)
    w1 = [r for r in recs if r[2] == 0]
    assert len(w1) == 2 and w1[0][:2] == (1, 1)
    assert all(1 <= r[1] <= 2 and r[0] >= 1 for r in recs)
    assert len(recs) == 2 + np.count_nonzero(exp.W3)
