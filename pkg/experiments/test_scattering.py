#!/usr/bin/env python3
"""
测试旋转不变 S 矩阵、散射与 g 向量
"""

import math

import numpy as np
import pytest

from core.angular_momentum import HalfInt, wigner_matrix
from core.entanglement import certify_max_entangled, entropy_of_entanglement, schmidt_spectrum
from core.errors import DomainError, UsageError
from core.scattering import (
    PhaseShiftVector, build_s_matrix, coupled_form, g_vector, out_state_tilde, schmidt_from_g, scatter,
)
from core.states import Basis, InStateSpec, StateVector, apply_local, basis_state, invariant_in_state, to_coupled

SPINS = ["1/2", "1", "3/2", "2"]


def random_phases(rng, sigma):
    return PhaseShiftVector(sigma, np.concatenate(([0.0], rng.uniform(-np.pi, np.pi, HalfInt.of(sigma).twice_value))))


@pytest.mark.parametrize("sigma", ["0"] + SPINS)
def test_zero_phases_give_identity(sigma):
    spin = HalfInt.of(sigma)
    s = build_s_matrix(spin, PhaseShiftVector(spin, np.zeros(spin.twice_value + 1)))
    np.testing.assert_allclose(s.matrix, np.eye(spin.dim ** 2), atol=1e-12)


@pytest.mark.parametrize("sigma", SPINS)
def test_equal_phases_give_scalar(sigma):
    spin = HalfInt.of(sigma)
    c = 0.37
    delta = PhaseShiftVector(spin, np.full(spin.twice_value + 1, c))
    assert delta.offset == pytest.approx(c)
    np.testing.assert_allclose(delta.deltas, 0.0)
    s = build_s_matrix(spin, delta)
    np.testing.assert_allclose(s.matrix, np.exp(2j * c) * np.eye(spin.dim ** 2), atol=1e-12)


def test_half_spin_coupled_form():
    """δ = (0, π/4)：耦合基下 (s=1 三列, s=0 一列) 为 diag(i, i, i, 1)"""
    s = build_s_matrix("1/2", PhaseShiftVector("1/2", [0.0, math.pi / 4]))
    np.testing.assert_allclose(coupled_form(s), np.diag([1j, 1j, 1j, 1]), atol=1e-12)


def test_scatter_basis_state_example():
    delta = PhaseShiftVector("1/2", [0.0, math.pi / 4])
    out = scatter(basis_state("1/2", "1/2", "-1/2"), delta)
    np.testing.assert_allclose(out.amplitudes, [0, (1 + 1j) / 2, (-1 + 1j) / 2, 0], atol=1e-12)
    assert entropy_of_entanglement(out) == pytest.approx(1.0, abs=1e-12)
    assert certify_max_entangled(out).is_maximal


def test_scatter_keeps_coupled_basis():
    delta = PhaseShiftVector("1/2", [0.0, math.pi / 4])
    state = basis_state("1/2", "1/2", "-1/2")
    coupled_out = scatter(to_coupled(state), delta)
    assert coupled_out.basis is Basis.COUPLED
    np.testing.assert_allclose(coupled_out.in_product_basis().amplitudes, scatter(state, delta).amplitudes, atol=1e-12)


@pytest.mark.parametrize("sigma", SPINS)
def test_s_matrix_is_unitary_and_symmetric(sigma):
    rng = np.random.default_rng(13)
    for _ in range(10):
        s = build_s_matrix(sigma, random_phases(rng, sigma))
        assert s.unitarity_deviation() <= 1e-12
        np.testing.assert_allclose(s.matrix, s.matrix.T, atol=1e-12)


@pytest.mark.parametrize("sigma", SPINS)
def test_s_matrix_commutes_with_rotations(sigma):
    rng = np.random.default_rng(17)
    for _ in range(50):
        s = build_s_matrix(sigma, random_phases(rng, sigma)).matrix
        d = wigner_matrix(sigma, rng.uniform(-np.pi, np.pi, 3)).matrix
        u = np.kron(d, d)
        np.testing.assert_allclose(u @ s, s @ u, atol=1e-12)


def test_g_vector_half_spin_example():
    g = g_vector("1/2", "1/2", PhaseShiftVector("1/2", [0.0, math.pi / 4]))
    np.testing.assert_allclose(g.values, [(1 + 1j) / 2, (-1 + 1j) / 2], atol=1e-12)


def test_g_vector_half_spin_probabilities():
    for delta1 in np.linspace(-3.0, 3.0, 13):
        g = g_vector("1/2", "1/2", PhaseShiftVector("1/2", [0.0, delta1]))
        np.testing.assert_allclose(g.probabilities, [math.cos(delta1) ** 2, math.sin(delta1) ** 2], atol=1e-12)


@pytest.mark.parametrize("sigma", SPINS)
def test_equal_phases_leave_lambda_untouched(sigma):
    spin = HalfInt.of(sigma)
    delta = PhaseShiftVector(spin, np.full(spin.twice_value + 1, -1.2))
    for i, lam in enumerate(spin.magnetic_range()):
        expected = np.zeros(spin.dim)
        expected[i] = 1.0
        np.testing.assert_allclose(g_vector(spin, lam, delta).probabilities, expected, atol=1e-12)


@pytest.mark.parametrize("sigma", SPINS)
def test_g_spectrum_matches_full_pipeline(sigma):
    """Schmidt 系数 |g_χ|² 与完整散射流程一致"""
    rng = np.random.default_rng(23)
    spin = HalfInt.of(sigma)
    for _ in range(100):
        delta = random_phases(rng, spin)
        lam = spin.magnetic_range()[int(rng.integers(spin.dim))]
        euler = tuple(rng.uniform(-np.pi, np.pi, 3))
        out = scatter(invariant_in_state(spin, InStateSpec(euler, lam)), delta)
        from_g = schmidt_from_g(g_vector(spin, lam, delta)).values
        np.testing.assert_allclose(schmidt_spectrum(out).values, from_g, atol=1e-10)
        assert sum(from_g) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sigma", SPINS)
def test_out_state_is_rotated_tilde_state(sigma):
    rng = np.random.default_rng(29)
    spin = HalfInt.of(sigma)
    for lam in spin.magnetic_range():
        delta = random_phases(rng, spin)
        euler = tuple(rng.uniform(-np.pi, np.pi, 3))
        out = scatter(invariant_in_state(spin, InStateSpec(euler, lam)), delta)
        d = wigner_matrix(spin, euler).matrix
        undone = apply_local(out, d.conj().T, d.conj().T)
        tilde = out_state_tilde(spin, lam, delta)
        np.testing.assert_allclose(undone.amplitudes, tilde.amplitudes, atol=1e-12)
        # support only on |χ, -χ⟩
        c = tilde.amplitude_matrix()
        np.testing.assert_allclose(c - np.diag(np.diag(c[:, ::-1]))[:, ::-1], 0.0, atol=1e-15)


@pytest.mark.parametrize("sigma", SPINS)
def test_equal_phases_do_not_change_entropy(sigma):
    rng = np.random.default_rng(31)
    spin = HalfInt.of(sigma)
    v = rng.normal(size=spin.dim ** 2) + 1j * rng.normal(size=spin.dim ** 2)
    state = StateVector(spin, Basis.PRODUCT, v / np.linalg.norm(v))
    out = scatter(state, PhaseShiftVector(spin, np.full(spin.twice_value + 1, 0.8)))
    assert entropy_of_entanglement(out) == pytest.approx(entropy_of_entanglement(state), abs=1e-12)


def test_phase_vector_wrapping_and_validation():
    assert PhaseShiftVector("1/2", [0.0, -math.pi]).deltas[1] == pytest.approx(math.pi)
    assert PhaseShiftVector("1/2", [0.0, 1.5 * math.pi]).deltas[1] == pytest.approx(-math.pi / 2)
    np.testing.assert_allclose(PhaseShiftVector.from_free(1, [0.1, 0.2]).deltas, [0.0, 0.1, 0.2])
    with pytest.raises(UsageError):
        PhaseShiftVector(1, [0.0, 0.1])
    with pytest.raises(DomainError):
        PhaseShiftVector("1/2", [0.0, float("nan")])


def test_sigma_mismatch_is_rejected():
    with pytest.raises(UsageError):
        scatter(basis_state(1, 0, 0), PhaseShiftVector("1/2", [0.0, 0.1]))
    with pytest.raises(UsageError):
        build_s_matrix(1, PhaseShiftVector("1/2", [0.0, 0.1]))
