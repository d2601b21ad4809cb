import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdmd import numkit
from subdmd.errors import DimensionError, NumericalError, ParameterError

EPS = np.finfo(float).eps


def crandn(rs, *shape):
    return rs.standard_normal(shape) + 1j * rs.standard_normal(shape)


matrices = st.tuples(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**32 - 1)).map(
    lambda t: crandn(np.random.default_rng(t[2]), t[0], t[1])
)


class TestCompactSvd:
    def test_identity(self):
        f = numkit.compact_svd(np.eye(2))
        assert f.k == 2
        np.testing.assert_allclose(f.s, [1, 1])
        np.testing.assert_allclose(f.reconstruct(), np.eye(2), atol=1e-15)

    def test_exact_rank_deficiency(self):
        f = numkit.compact_svd(np.diag([3.0, 0.0]))
        assert f.k == 1
        np.testing.assert_allclose(f.s, [3.0])
        np.testing.assert_allclose(np.abs(f.u[:, 0]), [1, 0])
        np.testing.assert_allclose(np.abs(f.v[:, 0]), [1, 0])

    def test_rank_two_from_outer_products(self):
        rs = np.random.default_rng(0)
        m = np.outer(crandn(rs, 4), crandn(rs, 6)) + np.outer(crandn(rs, 4), crandn(rs, 6))
        f = numkit.compact_svd(m)
        assert f.k == 2
        assert np.linalg.norm(f.reconstruct() - m) < 1e-12

    def test_zero_matrix_has_no_compact_factorisation(self):
        with pytest.raises(NumericalError, match="rank zero"):
            numkit.compact_svd(np.zeros((3, 2)))

    def test_explicit_tolerance(self):
        f = numkit.compact_svd(np.diag([3.0, 2.0, 1.0]), rank_tol=1.5)
        np.testing.assert_allclose(f.s, [3.0, 2.0])

    def test_rejects_non_finite(self):
        with pytest.raises(ParameterError):
            numkit.compact_svd([[1.0, np.nan]])

    @settings(max_examples=60, deadline=None)
    @given(matrices)
    def test_round_trip_and_orthonormality(self, m):
        f = numkit.compact_svd(m)
        assert np.linalg.norm(f.reconstruct() - m) <= 10 * f.k * EPS * f.s[0]
        np.testing.assert_allclose(f.u.conj().T @ f.u, np.eye(f.k), atol=1e-10)
        np.testing.assert_allclose(f.v.conj().T @ f.v, np.eye(f.k), atol=1e-10)
        assert np.all(np.diff(f.s) <= 0) and f.s[-1] > 0


class TestTruncatedSvd:
    def test_keeps_leading_values(self):
        np.testing.assert_allclose(numkit.truncated_svd(np.diag([3.0, 2.0, 1.0]), 2).s, [3, 2])

    def test_no_op_when_rank_exceeds_numerical_rank(self):
        m = np.diag([3.0, 2.0, 0.0])
        a, b = numkit.truncated_svd(m, 3), numkit.compact_svd(m)
        assert a.k == b.k == 2
        np.testing.assert_array_equal(a.s, b.s)

    def test_eckart_young_error(self):
        m = np.diag([3.0, 2.0, 1.0])
        err = np.linalg.norm(numkit.truncated_svd(m, 1).reconstruct() - m)
        assert abs(err - np.sqrt(2.0**2 + 1.0**2)) < 1e-12

    @pytest.mark.parametrize("rank", [0, 4])
    def test_rank_out_of_range(self, rank):
        with pytest.raises(ParameterError):
            numkit.truncated_svd(np.eye(3), rank)


class TestPinv:
    def test_identity(self):
        np.testing.assert_allclose(numkit.pinv(np.eye(3)), np.eye(3))

    def test_rank_deficient_diagonal(self):
        np.testing.assert_allclose(numkit.pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_zero_matrix(self):
        np.testing.assert_array_equal(numkit.pinv(np.zeros((2, 3))), np.zeros((3, 2)))

    def test_right_inverse_of_wide_matrix(self):
        m = crandn(np.random.default_rng(1), 3, 5)
        np.testing.assert_allclose(m @ numkit.pinv(m), np.eye(3), atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(matrices)
    def test_moore_penrose_identities(self, m):
        p = numkit.pinv(m)
        tol = 1e-10 * max(1.0, np.linalg.norm(m)) * max(1.0, np.linalg.norm(p))
        assert np.linalg.norm(m @ p @ m - m) < tol
        assert np.linalg.norm(p @ m @ p - p) < tol
        assert np.linalg.norm((m @ p).conj().T - m @ p) < tol
        assert np.linalg.norm((p @ m).conj().T - p @ m) < tol

    def test_consistent_with_factors(self):
        m = crandn(np.random.default_rng(2), 6, 4)
        f = numkit.compact_svd(m)
        expected = f.v @ np.diag(1 / f.s) @ f.u.conj().T
        np.testing.assert_allclose(numkit.pinv(m), expected, atol=1e-12)


class TestRowSpaceProjection:
    def test_projection_onto_itself(self):
        f = crandn(np.random.default_rng(3), 3, 8)
        np.testing.assert_allclose(numkit.row_space_projection(f, f), f, atol=1e-12)

    def test_orthogonal_complement(self):
        p = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        f = np.array([[0.0, 0.0, 2.0]])
        np.testing.assert_allclose(numkit.row_space_projection(f, p), 0, atol=1e-15)

    def test_hankel_example(self):
        p = np.array([[1.0, 2.0], [2.0, 3.0]])
        f = np.array([[3.0, 4.0], [4.0, 5.0]])
        assert np.linalg.matrix_rank(p) == 2  # full rank in a 2-dim column space => projector = I
        np.testing.assert_allclose(numkit.row_space_projection(f, p), f, atol=1e-12)

    def test_against_normal_equations(self):
        rs = np.random.default_rng(4)
        p, f = crandn(rs, 4, 30), crandn(rs, 3, 30)
        oracle = f @ p.conj().T @ np.linalg.inv(p @ p.conj().T) @ p
        np.testing.assert_allclose(numkit.row_space_projection(f, p), oracle, atol=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            numkit.row_space_projection(np.ones((2, 3)), np.ones((2, 4)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(2, 15), st.integers(0, 2**32 - 1))
    def test_idempotent_contraction_containment(self, rows_f, rows_p, cols, seed):
        rs = np.random.default_rng(seed)
        f, p = crandn(rs, rows_f, cols), crandn(rs, rows_p, cols)
        o = numkit.row_space_projection(f, p)
        np.testing.assert_allclose(numkit.row_space_projection(o, p), o, atol=1e-10)
        assert np.linalg.norm(o) <= np.linalg.norm(f) * (1 + 1e-12)
        # rows of O lie in the row space of p: least-squares residual vanishes
        coeffs = np.linalg.lstsq(p.T, o.T, rcond=None)[0]
        assert np.linalg.norm(p.T @ coeffs - o.T) < 1e-10 * max(1.0, np.linalg.norm(f))


class TestEig:
    def test_diagonal(self):
        e = numkit.eig(np.diag([2.0, 0.5]))
        order = np.argsort(-e.values.real)
        np.testing.assert_allclose(e.values[order], [2.0, 0.5])
        np.testing.assert_allclose(np.abs(e.right[:, order]), np.eye(2), atol=1e-15)
        assert e.simple

    def test_rotation_generator(self):
        e = numkit.eig([[0.0, 1.0], [-1.0, 0.0]])
        np.testing.assert_allclose(sorted(e.values.imag), [-1.0, 1.0])
        np.testing.assert_allclose(e.values.real, 0, atol=1e-15)

    def test_defective_companion_flags_non_simple(self):
        # companion matrix of z^2 - z + 0.25 = (z - 0.5)^2
        e = numkit.eig([[1.0, -0.25], [1.0, 0.0]])
        np.testing.assert_allclose(e.values, [0.5, 0.5], atol=1e-7)
        assert not e.simple

    def test_residuals_and_biorthogonality(self):
        a = crandn(np.random.default_rng(5), 6, 6)
        e = numkit.eig(a)
        scale = np.linalg.norm(a, 2)
        assert e.simple
        for i, lam in enumerate(e.values):
            w, z = e.right[:, i], e.left[:, i]
            assert np.linalg.norm(a @ w - lam * w) < 1e-8 * scale
            assert np.linalg.norm(z.conj() @ a - lam * z.conj()) < 1e-8 * scale * np.linalg.norm(z)
            assert abs(np.linalg.norm(w) - 1) < 1e-12
        np.testing.assert_allclose(e.left.conj().T @ e.right, np.eye(6), atol=1e-8)

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            numkit.eig(np.ones((2, 3)))


class TestLyapunov:
    def test_zero_dynamics(self):
        p = np.array([[2.0, 0.5], [0.5, 1.0]])
        np.testing.assert_allclose(numkit.lyapunov_stationary_cov(np.zeros((2, 2)), p), p)

    def test_scalar(self):
        g = numkit.lyapunov_stationary_cov([[0.9]], [[1.0]])
        assert abs(g[0, 0] - 1 / (1 - 0.81)) < 1e-12
        assert abs(g[0, 0] - 5.2631578947368425) < 1e-12

    def test_diagonal_rotation(self):
        g = numkit.lyapunov_stationary_cov(np.diag([0.9j, -0.9j]), np.eye(2))
        np.testing.assert_allclose(g, np.diag([1 / 0.19, 1 / 0.19]), atol=1e-12)

    def test_against_truncated_series(self):
        rs = np.random.default_rng(6)
        a = crandn(rs, 4, 4)
        a *= 0.7 / np.max(np.abs(np.linalg.eigvals(a)))
        b = crandn(rs, 4, 4)
        p = b @ b.conj().T
        series, term = np.zeros_like(p), p.copy()
        for _ in range(400):
            series += term
            term = a @ term @ a.conj().T
        g = numkit.lyapunov_stationary_cov(a, p)
        np.testing.assert_allclose(g, series, atol=1e-10 * np.linalg.norm(series))

    def test_unstable(self):
        with pytest.raises(NumericalError, match="unstable"):
            numkit.lyapunov_stationary_cov([[1.0]], [[1.0]])
