import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from nlsignal.errors import DomainError, ShapeError, UnsupportedDimensionError, ValidationError
from nlsignal.hilbert import (
    QUBITS,
    BipartiteShape,
    StateVector,
    basis_state,
    bell_state,
    bloch_vector,
    concurrence,
    family_psi_x,
    fano_reconstruct,
    hermitian,
    overlap,
    partial_trace_a,
    partial_trace_b,
    psi_x_for_concurrence,
    psi_x_for_overlap,
    psi_x_partner,
    purity,
    random_state,
    reduced_b,
    separable_eps_state,
    validate_density_matrix,
)

unit_x = st.floats(0.0, 1.0, allow_nan=False)


def dense_rho_b(amps, dim_a, dim_b):
    """Oracle: build |psi><psi| on the full space and trace out A by explicit sums."""
    full = np.outer(amps, np.conj(amps))
    rho = np.zeros((dim_b, dim_b), dtype=complex)
    for j in range(dim_a):
        for k in range(dim_b):
            for kp in range(dim_b):
                rho[k, kp] += full[j * dim_b + k, j * dim_b + kp]
    return rho


def family_overlap(x, y):
    """Oracle: overlap of two family members computed from the raw amplitudes."""
    a = np.array([1 + x, 0, 0, 1 - x]) / np.sqrt(2 * (1 + x**2))
    b = np.array([1 + y, 0, 0, 1 - y]) / np.sqrt(2 * (1 + y**2))
    return abs(a @ b)


class TestShapesAndStates:
    def test_flat_index_order(self):
        shape = BipartiteShape(2, 3)
        assert [shape.labels(n) for n in range(6)] == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
        assert shape.index(1, 2) == 5

    def test_unnormalized_rejected(self):
        with pytest.raises(ValidationError):
            StateVector(QUBITS, np.array([1, 1, 0, 0], dtype=complex))

    def test_normalize_flag(self):
        s = StateVector.from_amplitudes([1, 1, 0, 0], normalize=True)
        np.testing.assert_allclose(s.norm, 1.0, atol=1e-15)

    def test_wrong_length(self):
        with pytest.raises(ShapeError):
            StateVector.from_amplitudes([1, 0, 0], QUBITS)

    def test_amplitudes_read_only(self):
        s = bell_state()
        with pytest.raises(ValueError):
            s.amps[0] = 0

    def test_bell_is_family_at_zero(self):
        np.testing.assert_allclose(family_psi_x(0.0).amps, [2**-0.5, 0, 0, 2**-0.5])
        np.testing.assert_allclose(bell_state().amps, family_psi_x(0.0).amps)

    def test_family_at_one_is_separable(self):
        np.testing.assert_allclose(family_psi_x(1.0).amps, [1, 0, 0, 0], atol=1e-15)

    @pytest.mark.parametrize("x", [-0.1, 1.5, np.nan])
    def test_family_domain(self, x):
        with pytest.raises(DomainError):
            family_psi_x(x)

    def test_separable_eps_normalization(self):
        s = separable_eps_state(0.001)
        np.testing.assert_allclose(np.linalg.norm(s.amps), 1.0, atol=1e-15)
        assert abs(s.amps[2]) == 0 and abs(s.amps[3]) == 0
        np.testing.assert_allclose(concurrence(s), 0.0, atol=1e-7)

    def test_random_state_reproducible(self):
        a = random_state(np.random.default_rng(3), BipartiteShape(2, 3))
        b = random_state(np.random.default_rng(3), BipartiteShape(2, 3))
        np.testing.assert_array_equal(a.amps, b.amps)


class TestReducedStates:
    def test_psi_half_reduced_state(self):
        # (1.5|00> + 0.5|11>)/sqrt(2.5) -> diag(0.9, 0.1)
        psi = family_psi_x(0.5)
        np.testing.assert_allclose(partial_trace_b(psi), np.diag([0.9, 0.1]), atol=1e-15)
        np.testing.assert_allclose(dense_rho_b(psi.amps, 2, 2), np.diag([0.9, 0.1]), atol=1e-15)

    def test_bell_maximally_mixed(self):
        np.testing.assert_allclose(partial_trace_b(bell_state()), np.eye(2) / 2, atol=1e-15)

    def test_product_state_is_pure(self):
        psi = basis_state(1, 0)
        np.testing.assert_allclose(partial_trace_b(psi), np.diag([1, 0]))
        np.testing.assert_allclose(partial_trace_a(psi), np.diag([0, 1]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.integers(1, 4))
    def test_matches_dense_oracle(self, seed, da, db):
        shape = BipartiteShape(da, db)
        psi = random_state(np.random.default_rng(seed), shape)
        np.testing.assert_allclose(partial_trace_b(psi), dense_rho_b(psi.amps, da, db), atol=1e-14)
        rho = validate_density_matrix(partial_trace_b(psi))
        np.testing.assert_allclose(np.trace(rho).real, 1.0, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_reduced_purities_agree(self, seed):
        psi = random_state(np.random.default_rng(seed), QUBITS)
        np.testing.assert_allclose(purity(partial_trace_a(psi)), purity(partial_trace_b(psi)), atol=1e-13)

    def test_stack_of_states(self):
        rng = np.random.default_rng(1)
        stack = np.array([random_state(rng).amps for _ in range(5)])
        rhos = reduced_b(stack, QUBITS)
        assert rhos.shape == (5, 2, 2)
        np.testing.assert_allclose(rhos[3], dense_rho_b(stack[3], 2, 2), atol=1e-15)

    def test_rejects_non_density_matrix(self):
        with pytest.raises(ValidationError):
            validate_density_matrix(np.diag([1.2, -0.2]))


class TestBloch:
    def test_bell_at_origin(self):
        np.testing.assert_allclose(bloch_vector(partial_trace_b(bell_state())), [0, 0, 0], atol=1e-15)

    def test_components_against_pauli_traces(self):
        rng = np.random.default_rng(7)
        paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
        for _ in range(10):
            rho = partial_trace_b(random_state(rng))
            expect = [np.trace(p @ rho).real for p in paulis]
            np.testing.assert_allclose(bloch_vector(rho), expect, atol=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_fano_round_trip(self, seed):
        rho = partial_trace_b(random_state(np.random.default_rng(seed)))
        n = bloch_vector(rho)
        assert np.linalg.norm(n) <= 1 + 1e-12
        np.testing.assert_allclose(fano_reconstruct(n), rho, atol=1e-14)

    def test_qutrit_rejected(self):
        with pytest.raises(UnsupportedDimensionError):
            bloch_vector(np.eye(3) / 3)


class TestConcurrenceAndOverlap:
    @pytest.mark.parametrize("x", np.linspace(0, 1, 11))
    def test_family_formula(self, x):
        np.testing.assert_allclose(concurrence(family_psi_x(x)), (1 - x**2) / (1 + x**2), rtol=0, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(unit_x)
    def test_concurrence_inverse(self, c):
        np.testing.assert_allclose(concurrence(family_psi_x(psi_x_for_concurrence(c))), c, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_concurrence_in_unit_interval(self, seed):
        c = concurrence(random_state(np.random.default_rng(seed)))
        assert 0.0 <= c <= 1.0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_matches_purity_definition(self, seed):
        psi = random_state(np.random.default_rng(seed))
        p = purity(partial_trace_b(psi))
        np.testing.assert_allclose(concurrence(psi), np.sqrt(max(2 * (1 - p), 0.0)), atol=1e-7)

    def test_concurrence_qubits_only(self):
        with pytest.raises(UnsupportedDimensionError):
            concurrence(basis_state(0, 0, BipartiteShape(2, 3)))

    def test_bell_partner_matches_root_oracle(self):
        # Independent: solve overlap(Bell, Psi_x) = 0.999 by bracketing on the raw amplitudes.
        x_oracle = brentq(lambda x: family_overlap(0.0, x) - 0.999, 0.0, 1.0, xtol=1e-15)
        np.testing.assert_allclose(psi_x_for_overlap(0.999), x_oracle, rtol=1e-10)
        np.testing.assert_allclose(psi_x_partner(0.0, 0.999), x_oracle, rtol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.0, 0.95), st.floats(0.99, 0.99999))
    def test_partner_overlap(self, x0, target):
        x = psi_x_partner(x0, target)
        np.testing.assert_allclose(overlap(family_psi_x(x0), family_psi_x(x)), target, atol=1e-10)

    def test_overlap_symmetric(self):
        rng = np.random.default_rng(2)
        a, b = random_state(rng), random_state(rng)
        np.testing.assert_allclose(overlap(a, b), overlap(b, a))


class TestHermitian:
    def test_accepts_and_freezes(self):
        m = hermitian([[1, 2j], [-2j, 3]])
        assert not m.flags.writeable

    def test_rejects(self):
        with pytest.raises(ValidationError):
            hermitian([[1, 2], [0, 1]])

    def test_non_square(self):
        with pytest.raises(ShapeError):
            hermitian(np.zeros((2, 3)))
