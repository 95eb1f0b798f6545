import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import fd_gradient, fd_jacobian, hermite_mass, hermite_stiffness

from vkreduce import BeamConfig, assemble
from vkreduce.fem import (
    cubic_trilinear,
    read_coordinate_matrix,
    symmetric_bilinear,
    write_coordinate_matrix,
)
from vkreduce.spectra import beam_modes

from conftest import REFERENCE_ZETA


def _rng(seed=0):
    return np.random.default_rng(seed)


@given(n=st.integers(2, 40))
def test_dof_counts_pinned(n):
    b = assemble(BeamConfig(n_elements=n))
    assert (b.n_s, b.n_f) == (2 * (n + 1) - 2, n - 1)


@given(n=st.integers(2, 40))
def test_dof_counts_clamped(n):
    b = assemble(BeamConfig(n_elements=n, bc="clamped-clamped"))
    assert (b.n_s, b.n_f) == (2 * (n + 1) - 4, n - 1)


@pytest.mark.parametrize("bc", ["pinned-pinned", "clamped-clamped"])
def test_linear_matrices_match_classical_elements(bc):
    n = 5
    b = assemble(BeamConfig(n_elements=n, bc=bc))
    h = 1.0 / n
    K = np.zeros((2 * n + 2, 2 * n + 2))
    M = np.zeros_like(K)
    K2 = np.zeros((n + 1, n + 1))
    M2 = np.zeros_like(K2)
    for e in range(n):
        idx = np.arange(2 * e, 2 * e + 4)
        K[np.ix_(idx, idx)] += hermite_stiffness(h) / 12.0
        M[np.ix_(idx, idx)] += hermite_mass(h)
        iu = [e, e + 1]
        K2[np.ix_(iu, iu)] += np.array([[1, -1], [-1, 1]]) / h
        M2[np.ix_(iu, iu)] += h / 6 * np.array([[2, 1], [1, 2]])
    fw, fu = b.dofs.free_w, b.dofs.free_u
    np.testing.assert_allclose(b.K1, K[np.ix_(fw, fw)], rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose(b.M1, M[np.ix_(fw, fw)], rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(b.K2, K2[np.ix_(fu, fu)], rtol=1e-12)
    np.testing.assert_allclose(b.M2, M2[np.ix_(fu, fu)], rtol=1e-12)


def test_two_element_axial_matrices():
    b = assemble(BeamConfig(n_elements=2))
    assert b.K2.shape == (1, 1)
    assert b.K2[0, 0] == pytest.approx(4.0)
    assert b.M2[0, 0] == pytest.approx(1.0 / 3.0)


def test_uniform_load_resultants():
    b = assemble(BeamConfig(n_elements=7))
    # deflection DOFs carry the whole unit load; slope moments cancel
    assert np.sum(b.q_full[0::2]) == pytest.approx(1.0)
    assert np.sum(b.q_full[1::2]) == pytest.approx(0.0, abs=1e-14)
    assert np.sum(b.p_full) == pytest.approx(1.0)
    q, p = b.load_vectors(0.3)
    s = math.sin(b.omega * 0.3)
    np.testing.assert_allclose(q, s * b.q_vec)
    np.testing.assert_allclose(p, s * b.p_vec)


def test_evaluators_match_dense_tensors(beam6):
    b = beam6
    d = b.dense_tensors()
    rng = _rng(1)
    x, v = rng.normal(size=b.n_s), rng.normal(size=b.n_s)
    y = rng.normal(size=b.n_f)
    np.testing.assert_allclose(b.F(x, y), np.einsum("ijk,j,k->i", d["F"], x, y), rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(b.G(x), np.einsum("ijkl,j,k,l->i", d["G"], x, x, x), rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(b.H(x), np.einsum("ajk,j,k->a", d["H"], x, x), rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(b.C(x), np.einsum("ijkl,k,l->ij", d["C"], x, x), rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(b.D(x), np.einsum("iak,k->ia", d["D"], x), rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(b.E(x) @ v, np.einsum("ajk,j,k->a", d["E"], v, x), rtol=1e-11, atol=1e-11)


def test_dense_tensors_refused_for_large_models(beam20):
    with pytest.raises(ValueError, match="dense"):
        beam20.dense_tensors()


def test_bilinear_identities(beam6):
    b = beam6
    rng = _rng(2)
    x, y = rng.normal(size=b.n_s), rng.normal(size=b.n_f)
    np.testing.assert_allclose(b.F(x, y), b.D(x) @ y, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(b.F(x, y), b.S(y) @ x, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(b.E(x), b.D(x).T)


def test_jacobians_by_finite_differences(beam6):
    b = beam6
    rng = _rng(3)
    x, v = rng.normal(size=b.n_s), rng.normal(size=b.n_s)
    np.testing.assert_allclose(fd_jacobian(b.H, x), b.E(x), rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(fd_jacobian(b.G, x), b.dG(x), rtol=1e-6, atol=1e-5)
    np.testing.assert_allclose(fd_jacobian(lambda z: b.C(z) @ v, x), b.C_rate(x, v), rtol=1e-6, atol=1e-5)


def test_elastic_forces_are_energy_gradients(beam6):
    b = beam6
    rng = _rng(4)
    x, y = rng.normal(size=b.n_s), 1e-2 * rng.normal(size=b.n_f)
    fx, fy = b.elastic_force(x, y)
    gx = fd_gradient(lambda z: b.potential_energy(z, y), x, h=1e-5)
    gy = fd_gradient(lambda z: b.potential_energy(x, z), y, h=1e-7)
    np.testing.assert_allclose(gx, fx, rtol=1e-6, atol=1e-4 * np.max(np.abs(fx)))
    np.testing.assert_allclose(gy, fy, rtol=1e-6, atol=1e-4 * np.max(np.abs(fy)))


@given(t=st.floats(-3.0, 3.0), seed=st.integers(0, 1000))
def test_homogeneity_of_nonlinear_terms(beam6, t, seed):
    b = beam6
    x = _rng(seed).normal(size=b.n_s)
    np.testing.assert_allclose(b.H(t * x), t**2 * b.H(x), rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(b.G(t * x), t**3 * b.G(x), rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(b.C(t * x), t**2 * b.C(x), rtol=1e-10, atol=1e-10)


def test_complex_arguments_follow_polynomial_structure(beam6):
    b = beam6
    d = b.dense_tensors()
    rng = _rng(5)
    z = rng.normal(size=b.n_s) + 1j * rng.normal(size=b.n_s)
    np.testing.assert_allclose(b.G(z), np.einsum("ijkl,j,k,l->i", d["G"], z, z, z), rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(b.H(z), np.einsum("ajk,j,k->a", d["H"], z, z), rtol=1e-11, atol=1e-11)


def test_conservative_tangent_symmetry(beam20):
    from vkreduce.dynamics import FullBeamSystem
    rng = _rng(6)
    q = rng.normal(size=beam20.n_s + beam20.n_f)
    K, _ = FullBeamSystem(beam20).tangent(q, np.zeros_like(q))
    assert np.max(np.abs(K - K.T)) / np.max(np.abs(K)) < 1e-6


def test_field_extraction_reproduces_cubics():
    b = assemble(BeamConfig(n_elements=4))
    w = lambda s: s * (1 - s) * (s + 0.3)  # noqa: E731
    dw = lambda s: (1 - s) * (s + 0.3) - s * (s + 0.3) + s * (1 - s)  # noqa: E731
    full = np.zeros(2 * len(b.nodes))
    full[0::2] = w(b.nodes)
    full[1::2] = dw(b.nodes)
    x = full[b.dofs.free_w]
    for s in (0.1, 0.25, 0.6, 1.0):
        assert b.field_at(s, x) == pytest.approx(w(s), abs=1e-14)


def test_first_frequency_and_ratio():
    b = assemble(BeamConfig(n_elements=40))
    w, _ = beam_modes(b)
    assert w[0] == pytest.approx(math.pi**2 / math.sqrt(12), rel=1e-6)
    assert w[1] / w[0] == pytest.approx(4.0, rel=1e-4)


def test_mesh_convergence_order():
    target = math.pi**2 / math.sqrt(12)
    errs = [beam_modes(assemble(BeamConfig(n_elements=n)))[0][0] - target for n in (2, 4, 8)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(3.5 <= o <= 4.5 for o in orders), orders


@given(seed=st.integers(0, 10_000))
def test_trilinear_polarization_properties(seed):
    rng = _rng(seed)
    Tdense = rng.normal(size=(3, 4, 4, 4))
    g = lambda z: np.einsum("ijkl,j,k,l->i", Tdense, z, z, z)  # noqa: E731
    a, b, c, d = (rng.normal(size=4) for _ in range(4))
    t = cubic_trilinear(g, a, b, c)
    np.testing.assert_allclose(cubic_trilinear(g, a, a, a), g(a), rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(cubic_trilinear(g, b, a, c), t, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(cubic_trilinear(g, c, b, a), t, rtol=1e-9, atol=1e-9)
    lin = cubic_trilinear(g, a + 2 * d, b, c)
    np.testing.assert_allclose(lin, t + 2 * cubic_trilinear(g, d, b, c), rtol=1e-9, atol=1e-9)
    sym = sum(np.transpose(Tdense, (0,) + p) for p in
              [(1, 2, 3), (1, 3, 2), (2, 1, 3), (2, 3, 1), (3, 1, 2), (3, 2, 1)]) / 6
    np.testing.assert_allclose(t, np.einsum("ijkl,j,k,l->i", sym, a, b, c), rtol=1e-9, atol=1e-9)


def test_trilinear_rejects_non_cubic_maps():
    with pytest.raises(ValueError, match="cubic"):
        cubic_trilinear(lambda z: z**2, np.ones(3), np.ones(3), np.ones(3))


@given(seed=st.integers(0, 10_000))
def test_bilinear_polarization(seed):
    rng = _rng(seed)
    Q = rng.normal(size=(2, 3, 3))
    q = lambda z: np.einsum("ijk,j,k->i", Q, z, z)  # noqa: E731
    a, b = rng.normal(size=3), rng.normal(size=3)
    np.testing.assert_allclose(symmetric_bilinear(q, a, a), q(a), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(symmetric_bilinear(q, a, b), 0.5 * np.einsum("ijk,j,k->i", Q + Q.transpose(0, 2, 1), a, b),
                               rtol=1e-12, atol=1e-12)


def test_coordinate_matrix_roundtrip(tmp_path, beam6):
    path = tmp_path / "K1.mtx"
    write_coordinate_matrix(path, beam6.K1)
    header = path.read_text().splitlines()[0].split()
    assert header == [str(beam6.n_s), str(beam6.n_s), str(np.count_nonzero(beam6.K1))]
    np.testing.assert_array_equal(read_coordinate_matrix(path), beam6.K1)


def test_derived_damping_parameter(beam20):
    assert beam20.zeta == REFERENCE_ZETA
    assert assemble(BeamConfig()).zeta == pytest.approx(7.2739, rel=1e-4)
