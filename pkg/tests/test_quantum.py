import numpy as np
import pytest

from qlan import quantum as q
from qlan.errors import DimensionMismatch, NonHermitianInput

from conftest import random_density

PSI_PLUS = q.ket_psi_plus()
RHO_PSI_PLUS = q.pure_state_density(PSI_PLUS)


def random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return g + g.conj().T


class TestKron:
    def test_identity(self):
        assert np.allclose(q.kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_basis_bookkeeping(self):
        hh = q.pure_state_density(q.KET_H)
        vv = q.pure_state_density(q.KET_V)
        assert np.allclose(q.kron(hh, vv), np.diag([0.0, 1.0, 0.0, 0.0]))

    def test_double_bit_flip(self):
        xx = q.kron(q.PAULI_X, q.PAULI_X)
        hh = np.array([1, 0, 0, 0], dtype=complex)
        vv = np.array([0, 0, 0, 1], dtype=complex)
        assert np.allclose(xx @ hh, vv)


class TestJacobiEigensolver:
    def test_reconstruction_oracle(self, rng):
        # V diag(w) V^dagger must reproduce the input for random Hermitian
        # matrices; the reference eigenvalues come from numpy (independent
        # implementation).
        for _ in range(100):
            h = random_hermitian(rng, 4)
            w, v = q.hermitian_eigh(h)
            assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - h) < 1e-9
            assert np.allclose(w, np.sort(np.linalg.eigvalsh(h)), atol=1e-10)

    def test_two_by_two(self, rng):
        for _ in range(50):
            h = random_hermitian(rng, 2)
            assert np.allclose(q.hermitian_eigenvalues(h),
                               np.sort(np.linalg.eigvalsh(h)), atol=1e-12)


class TestPartialTranspose:
    def test_psi_plus_eigenvalues(self):
        # Oracle: independent eigendecomposition of the analytic PT matrix.
        pt = q.partial_transpose(RHO_PSI_PLUS)
        eigs = np.sort(np.linalg.eigvalsh(pt))
        assert np.allclose(eigs, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)

    def test_product_diagonal_state_invariant(self):
        rho = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
        assert np.allclose(q.partial_transpose(rho), rho)

    def test_werner_eigenvalues_analytic(self):
        # p * lambda + (1 - p)/4 against the eigendecomposition oracle.
        for p in (0.3, 0.5, 0.9):
            pt = q.partial_transpose(q.werner_state(p))
            eigs = np.sort(np.linalg.eigvalsh(pt))
            expected = np.sort(p * np.array([-0.5, 0.5, 0.5, 0.5]) + (1 - p) / 4)
            assert np.allclose(eigs, expected, atol=1e-12)
        eigs = np.sort(np.linalg.eigvalsh(q.partial_transpose(q.werner_state(0.5))))
        assert np.allclose(eigs, [-0.125, 0.375, 0.375, 0.375], atol=1e-12)

    def test_involution(self, rng):
        for _ in range(20):
            rho = random_density(rng)
            assert np.array_equal(
                q.partial_transpose(q.partial_transpose(rho)), rho)

    def test_subsystem_choice_irrelevant_for_negativity(self, rng):
        for _ in range(20):
            rho = random_density(rng)
            en_second = np.log2(q.trace_norm(q.partial_transpose(rho, 1)))
            en_first = np.log2(q.trace_norm(q.partial_transpose(rho, 0)))
            assert abs(en_first - en_second) < 1e-12


class TestTraceNorm:
    def test_identity(self):
        assert q.trace_norm(np.eye(4)) == pytest.approx(4.0, abs=1e-12)

    def test_pt_psi_plus(self):
        assert q.trace_norm(q.partial_transpose(RHO_PSI_PLUS)) == pytest.approx(
            2.0, abs=1e-10)

    def test_pt_werner_half(self):
        assert q.trace_norm(q.partial_transpose(q.werner_state(0.5))) == pytest.approx(
            1.25, abs=1e-10)

    def test_density_matrix_trace_norm_is_one(self, rng):
        for _ in range(50):
            assert q.trace_norm(random_density(rng)) == pytest.approx(1.0, abs=1e-10)

    def test_non_hermitian_rejected(self):
        bad = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(NonHermitianInput):
            q.trace_norm(bad)


class TestLogNegativity:
    def test_bell_state_is_one_ebit(self):
        assert q.log_negativity(RHO_PSI_PLUS) == pytest.approx(1.0, abs=1e-10)

    def test_separable_product_state(self):
        rho = q.pure_state_density(np.array([1, 0, 0, 0], dtype=complex))
        assert q.log_negativity(rho) == 0.0

    def test_werner_half(self):
        assert q.log_negativity(q.werner_state(0.5)) == pytest.approx(
            np.log2(1.25), abs=1e-10)

    def test_two_qubit_bound(self, rng):
        for _ in range(100):
            en = q.log_negativity(random_density(rng))
            assert 0.0 <= en <= 1.0

    def test_product_states_carry_no_entanglement(self, rng):
        for _ in range(100):
            rho = q.kron(random_density(rng, 2), random_density(rng, 2))
            assert q.log_negativity(rho) == pytest.approx(0.0, abs=1e-9)


class TestFidelity:
    def test_self_fidelity(self):
        assert q.fidelity_with_pure(RHO_PSI_PLUS, PSI_PLUS) == pytest.approx(1.0)

    def test_maximally_mixed(self):
        assert q.fidelity_with_pure(np.eye(4) / 4, PSI_PLUS) == pytest.approx(0.25)

    def test_werner_formula(self):
        # (1 + 3p)/4, verified by direct matrix contraction.
        for p in (0.0, 0.25, 0.5, 0.936, 1.0):
            rho = q.werner_state(p)
            direct = (PSI_PLUS.conj() @ rho @ PSI_PLUS).real
            assert q.fidelity_with_pure(rho, PSI_PLUS) == pytest.approx(
                (1 + 3 * p) / 4, abs=1e-12)
            assert direct == pytest.approx((1 + 3 * p) / 4, abs=1e-12)

    def test_linear_in_state(self, rng):
        for _ in range(20):
            rho1, rho2 = random_density(rng), random_density(rng)
            alpha = rng.random()
            mix = alpha * rho1 + (1 - alpha) * rho2
            expected = (alpha * q.fidelity_with_pure(rho1, PSI_PLUS)
                        + (1 - alpha) * q.fidelity_with_pure(rho2, PSI_PLUS))
            assert q.fidelity_with_pure(mix, PSI_PLUS) == pytest.approx(
                expected, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            q.fidelity_with_pure(RHO_PSI_PLUS, q.KET_H)


class TestPartialTrace:
    def test_bell_reduction_is_mixed(self):
        assert np.allclose(q.partial_trace(RHO_PSI_PLUS, keep=0), np.eye(2) / 2,
                           atol=1e-12)

    def test_product_state_keep_second(self):
        hv = np.zeros(4, dtype=complex)
        hv[1] = 1.0
        reduced = q.partial_trace(q.pure_state_density(hv), keep=1)
        assert np.allclose(reduced, q.pure_state_density(q.KET_V), atol=1e-12)

    def test_product_state_keep_first(self):
        dd = q.kron(q.KET_D.reshape(2, 1), q.KET_D.reshape(2, 1)).ravel()
        reduced = q.partial_trace(q.pure_state_density(dd), keep=0)
        assert np.allclose(reduced, 0.5 * np.ones((2, 2)), atol=1e-12)

    def test_reduced_states_are_valid(self, rng):
        for _ in range(20):
            rho = random_density(rng)
            for keep in (0, 1):
                assert q.is_density_matrix(q.partial_trace(rho, keep))


class TestEbitRate:
    def test_table_row_product(self):
        assert q.ebit_rate(0.89, 231.5) == pytest.approx(206.0, abs=0.1)

    def test_no_entanglement(self):
        assert q.ebit_rate(0.0, 1000.0) == 0.0

    def test_exact_product_identity(self):
        assert q.ebit_rate(1.0, 52.4) == 52.4

    def test_summary_invariant(self):
        summary = q.EntanglementSummary(0.89, 231.5, 0.89 * 231.5, 0.9)
        assert summary.ebit_rate == summary.log_negativity * summary.coincidence_rate
        with pytest.raises(ValueError):
            q.EntanglementSummary(0.89, 231.5, 205.0, 0.9)


class TestDensityMatrixInvariants:
    def test_random_states_pass(self, rng):
        for _ in range(20):
            assert q.is_density_matrix(random_density(rng))

    def test_violations_detected(self):
        assert not q.is_density_matrix(np.eye(4))             # trace 4
        assert not q.is_density_matrix(np.diag([1.5, -0.5]))  # negative eigenvalue
        skew = np.array([[0.5, 0.1], [-0.1, 0.5]], dtype=complex)
        assert not q.is_density_matrix(skew)                  # not Hermitian
