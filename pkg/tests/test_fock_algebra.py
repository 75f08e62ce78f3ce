import numpy as np
import pytest
import scipy.sparse as sp

from dickequench.errors import SpaceMismatchError, TruncationLossError
from dickequench.fock_algebra import (
    DensityOperator,
    FockSpace,
    Operator,
    ProductSpace,
    SpinSpace,
    StateVector,
    coherent_amplitudes,
    coherent_state,
    create,
    destroy,
    embed_field,
    embed_spin,
    fock_state,
    identity,
    number_operator,
    quadratures,
    spin_operators,
    tensor,
    vacuum_spin_down,
)


def comm(A, B):
    return A @ B - B @ A


class TestSpaces:
    def test_dimensions(self):
        assert FockSpace(1).dim == 2
        assert FockSpace(40).dim == 41
        assert SpinSpace(1).dim == 2
        assert SpinSpace(5).j == 2.5
        assert ProductSpace(FockSpace(3), SpinSpace(2)).dim == 12

    @pytest.mark.parametrize("bad", [0, -1, 2.5])
    def test_invalid_cutoff(self, bad):
        with pytest.raises(ValueError):
            FockSpace(bad)

    def test_invalid_spin_count(self):
        with pytest.raises(ValueError):
            SpinSpace(0)


class TestDestroy:
    def test_cutoff_one(self):
        a = destroy(FockSpace(1)).toarray()
        np.testing.assert_array_equal(a, [[0, 1], [0, 0]])

    def test_matrix_element(self):
        a = destroy(FockSpace(3)).toarray()
        assert a[2, 3] == pytest.approx(1.7320508, abs=1e-7)

    def test_create_is_adjoint(self):
        s = FockSpace(6)
        np.testing.assert_array_equal(create(s).toarray(), destroy(s).toarray().conj().T)

    def test_truncated_commutator(self):
        s = FockSpace(7)
        a = destroy(s).toarray()
        c = comm(a, a.conj().T)
        expected = np.eye(8)
        expected[7, 7] = -7
        # sqrt(n) * sqrt(n) == n only up to rounding
        np.testing.assert_allclose(c, expected, atol=1e-13)

    def test_number_operator(self):
        s = FockSpace(5)
        a = destroy(s).toarray()
        np.testing.assert_allclose(number_operator(s).toarray(), a.conj().T @ a, atol=1e-14)

    def test_quadratures(self):
        X, P = quadratures(FockSpace(10))
        assert X.is_hermitian() and P.is_hermitian()
        c = comm(X.toarray(), P.toarray())
        np.testing.assert_allclose(np.diag(c)[:-1], 1j, atol=1e-13)


class TestSpin:
    def test_spin_half(self):
        Sx, Sy, Sz, Sm = spin_operators(SpinSpace(1))
        np.testing.assert_allclose(Sz.toarray(), np.diag([-0.5, 0.5]))
        np.testing.assert_allclose(Sx.toarray(), [[0, 0.5], [0.5, 0]])

    def test_spin_one_eigenvalues(self):
        _, _, Sz, _ = spin_operators(SpinSpace(2))
        np.testing.assert_allclose(np.diag(Sz.toarray()).real, [-1, 0, 1])

    @pytest.mark.parametrize("n", range(1, 11))
    def test_algebra_and_casimir(self, n):
        Sx, Sy, Sz, Sm = (o.toarray() for o in spin_operators(SpinSpace(n)))
        assert np.max(np.abs(comm(Sx, Sy) - 1j * Sz)) < 1e-12
        assert np.max(np.abs(comm(Sy, Sz) - 1j * Sx)) < 1e-12
        assert np.max(np.abs(comm(Sz, Sx) - 1j * Sy)) < 1e-12
        j = n / 2
        cas = Sx @ Sx + Sy @ Sy + Sz @ Sz
        assert np.max(np.abs(cas - j * (j + 1) * np.eye(n + 1))) < 1e-10
        np.testing.assert_allclose(Sm, Sx - 1j * Sy, atol=1e-15)
        for S in (Sx, Sy, Sz):
            np.testing.assert_allclose(S, S.conj().T, atol=0)

    def test_deterministic(self):
        a = spin_operators(SpinSpace(4))[0].toarray()
        b = spin_operators(SpinSpace(4))[0].toarray()
        assert a.tobytes() == b.tobytes()


class TestTensor:
    def test_identity(self):
        f, s = FockSpace(3), SpinSpace(2)
        I = tensor(identity(f), identity(s))
        np.testing.assert_array_equal(I.toarray(), np.eye(12))
        assert I.space == ProductSpace(f, s)

    def test_mixed_product(self):
        f, s = FockSpace(4), SpinSpace(1)
        a = destroy(f)
        Sz = spin_operators(s)[2]
        lhs = tensor(a, identity(s)) @ tensor(identity(f), Sz)
        np.testing.assert_allclose(lhs.toarray(), tensor(a, Sz).toarray())

    def test_trace_factorizes(self):
        rng = np.random.default_rng(7)
        f, s = FockSpace(3), SpinSpace(2)
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        B = rng.normal(size=(3, 3))
        T = tensor(Operator(A, f), Operator(B, s))
        assert np.trace(T.toarray()) == pytest.approx(np.trace(A) * np.trace(B), rel=1e-12)

    def test_ordering_field_major(self):
        f, s = FockSpace(2), SpinSpace(1)
        n = embed_field(number_operator(f), ProductSpace(f, s))
        np.testing.assert_allclose(np.diag(n.toarray()).real, [0, 0, 1, 1, 2, 2])
        Sz = embed_spin(spin_operators(s)[2], ProductSpace(f, s))
        np.testing.assert_allclose(np.diag(Sz.toarray()).real, [-0.5, 0.5] * 3)

    def test_wrong_order_rejected(self):
        f, s = FockSpace(2), SpinSpace(1)
        with pytest.raises(SpaceMismatchError):
            tensor(identity(s), identity(f))

    def test_mismatched_sum_rejected(self):
        with pytest.raises(SpaceMismatchError):
            identity(FockSpace(2)) + identity(FockSpace(3))

    def test_non_square_rejected(self):
        with pytest.raises(SpaceMismatchError):
            Operator(np.zeros((2, 3)), FockSpace(1))


class TestStates:
    def test_vacuum_spin_down(self):
        f, s = FockSpace(5), SpinSpace(1)
        psi = vacuum_spin_down(f, s)
        space = ProductSpace(f, s)
        assert psi.expect(embed_field(number_operator(f), space)) == 0
        assert psi.expect(embed_spin(spin_operators(s)[2], space)).real == -0.5

    def test_fock_state_number(self):
        s = FockSpace(10)
        assert fock_state(7, s).expect(number_operator(s)).real == 7.0

    def test_coherent_zero_is_vacuum(self):
        np.testing.assert_allclose(coherent_state(0, FockSpace(5)).amplitudes, fock_state(0, FockSpace(5)).amplitudes)

    def test_coherent_photon_number(self):
        s = FockSpace(60)
        assert coherent_state(2.0, s).expect(number_operator(s)).real == pytest.approx(4.0, abs=1e-8)

    def test_coherent_overlap(self):
        s = FockSpace(40)
        a, b = 0.7 - 0.2j, -0.3 + 0.5j
        ov = np.vdot(coherent_state(a, s).amplitudes, coherent_state(b, s).amplitudes)
        expected = np.exp(-(abs(a) ** 2 + abs(b) ** 2) / 2 + np.conj(a) * b)
        assert abs(ov - expected) < 1e-8

    def test_coherent_truncation_loss(self):
        with pytest.raises(TruncationLossError) as exc:
            coherent_state(4.0, FockSpace(10))
        assert exc.value.deficit > 1e-8

    def test_coherent_amplitudes_vectorized(self):
        alphas = np.array([0.3, 1j, -1.2 + 0.4j])
        batch = coherent_amplitudes(alphas, 12)
        for k, al in enumerate(alphas):
            np.testing.assert_allclose(batch[k], coherent_amplitudes(al, 12))

    def test_state_validation(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, 1.0]), FockSpace(1))
        with pytest.raises(SpaceMismatchError):
            StateVector(np.array([1.0, 0, 0]), FockSpace(1))

    def test_density_validation(self):
        s = FockSpace(1)
        with pytest.raises(ValueError):
            DensityOperator(np.array([[1.0, 0], [0, 1.0]]), s)
        with pytest.raises(ValueError):
            DensityOperator(np.array([[0.5, 0.5j], [0.1, 0.5]]), s)
        with pytest.raises(ValueError):
            DensityOperator(np.array([[1.5, 0], [0, -0.5]]), s)
        rho = DensityOperator(sp.csr_matrix(np.diag([0.25, 0.75])), s)
        assert rho.expect(number_operator(s)).real == 0.75
