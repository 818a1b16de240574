import numpy as np
import pytest

from csimeta.linalg import (DelayOverflow, NotHermitian, RankDeficient,
                            complex_gaussian, dft_delay_to_freq, gram_schmidt,
                            hermitian_eig, kron, top_eigvec)
from csimeta.rng import RngStream


def _rand_complex(rng, n, m):
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def _rand_psd(rng, n):
    g = _rand_complex(rng, n, n)
    return g @ g.conj().T


class TestGramSchmidt:
    def test_identity_is_fixed_point(self):
        np.testing.assert_allclose(gram_schmidt(np.eye(4)), np.eye(4), atol=1e-14)

    def test_hand_case_columns_e1_then_ones(self):
        # columns (1,0), (1,1) -> identity up to column phase
        u = gram_schmidt(np.array([[1.0, 1.0], [0.0, 1.0]]))
        np.testing.assert_allclose(np.abs(u), np.eye(2), atol=1e-12)

    def test_hand_case_columns_ones_first(self):
        # columns (1,1), (0,1) -> (1,1)/sqrt2 and its orthogonal complement
        u = gram_schmidt(np.array([[1.0, 0.0], [1.0, 1.0]]))
        inv_sqrt2 = 1 / np.sqrt(2)
        np.testing.assert_allclose(np.abs(u), np.full((2, 2), inv_sqrt2), atol=1e-12)
        assert abs(np.vdot(u[:, 0], u[:, 1])) < 1e-12

    def test_random_unitary(self):
        rng = np.random.default_rng(0)
        u = gram_schmidt(_rand_complex(rng, 8, 8))
        assert np.linalg.norm(u.conj().T @ u - np.eye(8)) < 1e-10

    def test_unitary_over_many_draws(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            u = gram_schmidt(_rand_complex(rng, 6, 6))
            # oracle: explicit pairwise inner products
            for i in range(6):
                for j in range(6):
                    want = 1.0 if i == j else 0.0
                    assert abs(np.vdot(u[:, i], u[:, j]) - want) < 1e-10

    def test_flag_property(self):
        # column k spans the same flag as input columns 1..k
        rng = np.random.default_rng(2)
        x = _rand_complex(rng, 5, 5)
        u = gram_schmidt(x)
        for k in range(5):
            # projecting x[:, :k+1] onto span(u[:, :k+1]) loses nothing
            basis = u[:, :k + 1]
            proj = basis @ (basis.conj().T @ x[:, :k + 1])
            assert np.linalg.norm(proj - x[:, :k + 1]) < 1e-9

    def test_rank_deficient_raises(self):
        x = np.ones((3, 3), dtype=complex)
        with pytest.raises(RankDeficient):
            gram_schmidt(x)


class TestKron:
    def test_identity(self):
        np.testing.assert_array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_hand_case(self):
        out = kron(np.array([[0, 1], [1, 0]]), np.array([[2]]))
        np.testing.assert_array_equal(out, [[0, 2], [2, 0]])

    def test_index_formula(self):
        rng = np.random.default_rng(3)
        a = _rand_complex(rng, 2, 3)
        b = _rand_complex(rng, 3, 2)
        out = kron(a, b)
        for i in range(2):
            for j in range(3):
                for k in range(3):
                    for l in range(2):
                        assert out[i * 3 + k, j * 2 + l] == a[i, j] * b[k, l]

    def test_mixed_product_identity(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            a = _rand_complex(rng, 3, 3)
            b = _rand_complex(rng, 2, 2)
            x = _rand_complex(rng, 3, 1)[:, 0]
            y = _rand_complex(rng, 2, 1)[:, 0]
            lhs = kron(a, b) @ np.kron(x, y)
            rhs = np.kron(a @ x, b @ y)
            assert np.linalg.norm(lhs - rhs) < 1e-12


class TestHermitianEig:
    def test_diagonal(self):
        vals, vecs = hermitian_eig(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(vals, [3.0, 1.0])
        np.testing.assert_allclose(vecs, np.eye(2), atol=1e-14)

    def test_hand_case(self):
        vals, vecs = hermitian_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(vals, [3.0, 1.0], atol=1e-12)
        inv_sqrt2 = 1 / np.sqrt(2)
        np.testing.assert_allclose(vecs[:, 0], [inv_sqrt2, inv_sqrt2], atol=1e-12)
        np.testing.assert_allclose(vecs[:, 1], [inv_sqrt2, -inv_sqrt2], atol=1e-12)

    def test_against_lapack_oracle(self):
        rng = np.random.default_rng(5)
        a = _rand_psd(rng, 16)
        vals, vecs = hermitian_eig(a)
        ref = np.sort(np.linalg.eigvalsh(a))[::-1]
        assert np.max(np.abs(vals - ref)) < 1e-9
        rec = vecs @ np.diag(vals) @ vecs.conj().T
        assert np.linalg.norm(rec - a) < 1e-8 * np.linalg.norm(a)

    def test_reconstruction_and_order_many(self):
        rng = np.random.default_rng(6)
        for n in (2, 5, 12):
            for _ in range(5):
                a = _rand_psd(rng, n)
                vals, vecs = hermitian_eig(a)
                assert np.all(np.diff(vals) <= 1e-12)
                rec = vecs @ np.diag(vals) @ vecs.conj().T
                assert np.linalg.norm(rec - a) < 1e-8 * np.linalg.norm(a)
                assert np.linalg.norm(vecs.conj().T @ vecs - np.eye(n)) < 1e-10

    def test_phase_convention(self):
        rng = np.random.default_rng(7)
        _, vecs = hermitian_eig(_rand_psd(rng, 6))
        for k in range(6):
            col = vecs[:, k]
            first = col[np.abs(col) > 1e-12][0]
            assert abs(first.imag) < 1e-12 and first.real > 0

    def test_not_hermitian_raises(self):
        with pytest.raises(NotHermitian):
            hermitian_eig(np.array([[1.0, 2.0], [0.5, 1.0]]))

    def test_zero_matrix(self):
        vals, vecs = hermitian_eig(np.zeros((3, 3)))
        np.testing.assert_array_equal(vals, np.zeros(3))
        assert np.linalg.norm(vecs.conj().T @ vecs - np.eye(3)) < 1e-12


class TestTopEigvec:
    def test_diagonal(self):
        lam, w = top_eigvec(np.diag([5.0, 2.0, 1.0]))
        assert abs(lam - 5.0) < 1e-12
        np.testing.assert_allclose(w, [1.0, 0.0, 0.0], atol=1e-10)

    def test_rank_one(self):
        rng = np.random.default_rng(8)
        v = _rand_complex(rng, 6, 1)[:, 0]
        v /= np.linalg.norm(v)
        lam, w = top_eigvec(np.outer(v, v.conj()))
        assert abs(lam - 1.0) < 1e-9
        assert abs(np.vdot(v, w)) > 1 - 1e-9

    def test_matches_full_decomposition(self):
        rng = np.random.default_rng(9)
        a = _rand_psd(rng, 32)
        lam, w = top_eigvec(a)
        vals, vecs = hermitian_eig(a)
        assert abs(lam - vals[0]) / vals[0] < 1e-8
        assert abs(np.vdot(vecs[:, 0], w)) ** 2 > 1 - 1e-10

    @pytest.mark.parametrize("n", [4, 16, 32])
    def test_residual_bound_100_random(self, n):
        rng = np.random.default_rng(n)
        for _ in range(100):
            a = _rand_psd(rng, n)
            lam, w = top_eigvec(a)
            assert np.linalg.norm(a @ w - lam * w) < 1e-9 * lam
            assert abs(np.linalg.norm(w) - 1.0) < 1e-12

    def test_degenerate_spectrum_falls_back(self):
        lam, w = top_eigvec(np.eye(4))
        assert abs(lam - 1.0) < 1e-12
        assert abs(np.linalg.norm(w) - 1.0) < 1e-12

    def test_zero_matrix(self):
        lam, w = top_eigvec(np.zeros((4, 4)))
        assert lam == 0.0
        assert abs(np.linalg.norm(w) - 1.0) < 1e-15


class TestDft:
    def test_single_tap_is_flat(self):
        h = np.ones((2, 3, 1), dtype=complex)
        hf = dft_delay_to_freq(h, 8)
        for k in range(8):
            np.testing.assert_allclose(hf[:, :, k], np.ones((2, 3)), atol=1e-14)

    def test_two_equal_taps_cancel(self):
        h = np.ones((2, 2, 2), dtype=complex)
        hf = dft_delay_to_freq(h, 2)
        np.testing.assert_allclose(hf[:, :, 1], np.zeros((2, 2)), atol=1e-14)

    def test_naive_loop_oracle_and_inverse(self):
        rng = RngStream(17)
        h = complex_gaussian(rng, 2, 3 * 4).reshape(2, 3, 4)
        hf = dft_delay_to_freq(h, 8)
        # oracle: literal triple loop over the defining sum
        want = np.zeros((2, 3, 8), dtype=complex)
        for k in range(8):
            for d in range(4):
                want[:, :, k] += h[:, :, d] * np.exp(-2j * np.pi * k * d / 8)
        assert np.linalg.norm(hf - want) < 1e-12
        # inverse DFT recovers the taps
        rec = np.zeros((2, 3, 8), dtype=complex)
        for d in range(8):
            for k in range(8):
                rec[:, :, d] += hf[:, :, k] * np.exp(2j * np.pi * k * d / 8) / 8
        assert np.linalg.norm(rec[:, :, :4] - h) < 1e-12
        assert np.linalg.norm(rec[:, :, 4:]) < 1e-12

    def test_linearity(self):
        rng = RngStream(18)
        h1 = complex_gaussian(rng, 2, 2 * 3).reshape(2, 2, 3)
        h2 = complex_gaussian(rng, 2, 2 * 3).reshape(2, 2, 3)
        lhs = dft_delay_to_freq(2.5 * h1 + 1j * h2, 6)
        rhs = 2.5 * dft_delay_to_freq(h1, 6) + 1j * dft_delay_to_freq(h2, 6)
        assert np.linalg.norm(lhs - rhs) < 1e-12

    def test_delay_overflow(self):
        with pytest.raises(DelayOverflow):
            dft_delay_to_freq(np.zeros((1, 1, 9), dtype=complex), 8)


class TestComplexGaussian:
    def test_deterministic(self):
        a = complex_gaussian(RngStream(4, 2), 5, 5)
        b = complex_gaussian(RngStream(4, 2), 5, 5)
        np.testing.assert_array_equal(a, b)

    def test_moments(self):
        x = complex_gaussian(RngStream(100), 100_000, 1)[:, 0]
        assert abs(np.mean(x)) < 0.02
        assert 0.98 < np.mean(np.abs(x) ** 2) < 1.02

    def test_cross_stream_correlation(self):
        base = RngStream(200)
        x = complex_gaussian(base.derive(0), 100_000, 1)[:, 0]
        y = complex_gaussian(base.derive(1), 100_000, 1)[:, 0]
        rho = np.mean(x * y.conj())
        assert abs(rho) < 0.02
