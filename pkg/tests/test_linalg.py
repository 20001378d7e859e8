import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tdslearn.errors import DegenerateInput, InsufficientData
from tdslearn.linalg import (OrthonormalBasis, angle, empirical_mean_cov, orthonormalize, project_residual_norm,
                             rotate_towards, smallest_k_eigenpairs)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vectors(d):
    return arrays(float, d, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


class TestAngle:
    def test_identity_and_antipodal(self):
        e1 = np.array([1.0, 0.0, 0.0])
        assert angle(e1, e1) == 0.0
        assert angle(e1, -e1) == pytest.approx(math.pi, abs=1e-15)

    def test_quarter_turn_diagonal(self):
        assert angle([1, 0, 0], np.array([1, 1, 0]) / math.sqrt(2)) == pytest.approx(math.pi / 4, abs=1e-15)

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateInput):
            angle([0, 0], [1, 0])

    @given(vectors(4), vectors(4))
    def test_symmetric_and_consistent_with_dot(self, a, b):
        th = angle(a, b)
        assert angle(b, a) == pytest.approx(th, abs=1e-12)
        assert 0.0 <= th <= math.pi
        assert math.cos(th) * np.linalg.norm(a) * np.linalg.norm(b) == pytest.approx(a @ b, abs=1e-9 * (1 + abs(a @ b)))


class TestProjectResidualNorm:
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])

    def test_contained_orthogonal_diagonal(self):
        B = orthonormalize([self.e1])
        assert project_residual_norm(self.e1, B) == 1.0
        assert project_residual_norm(self.e2, B) == 0.0
        assert project_residual_norm((self.e1 + self.e2) / math.sqrt(2), B) == pytest.approx(1 / math.sqrt(2), abs=1e-15)

    def test_non_unit_rejected(self):
        with pytest.raises(DegenerateInput):
            project_residual_norm(2 * self.e1, orthonormalize([self.e1]))

    @given(vectors(5), arrays(float, (2, 5), elements=finite))
    def test_pythagoras(self, w, vs):
        w = w / np.linalg.norm(w)
        B = orthonormalize(vs, dim=5)
        p = project_residual_norm(w, B)
        assert p ** 2 + np.linalg.norm(w - B.project(w)) ** 2 == pytest.approx(1.0, abs=1e-8)


class TestOrthonormalize:
    def test_duplicates_collapse(self):
        B = orthonormalize([[1, 0, 0], [1, 0, 0]])
        assert B.rank == 1
        np.testing.assert_allclose(B.vectors, [[1, 0, 0]])

    def test_already_orthonormal(self):
        np.testing.assert_allclose(orthonormalize(np.eye(3)[:2]).vectors, np.eye(3)[:2])

    def test_two_by_two_gram_schmidt(self):
        B = orthonormalize([[1, 1], [1, 0]])
        s = 1 / math.sqrt(2)
        np.testing.assert_allclose(B.vectors, [[s, s], [s, -s]], atol=1e-15)

    def test_empty_gives_rank_zero(self):
        assert orthonormalize(np.zeros((0, 3)), dim=3).rank == 0

    def test_rejects_non_orthonormal_basis(self):
        with pytest.raises(DegenerateInput):
            OrthonormalBasis(np.array([[1.0, 0.0], [1.0, 0.0]]), 2)

    @given(arrays(float, (4, 6), elements=st.integers(-3, 3).map(float)))
    def test_output_orthonormal_and_span_preserved(self, vs):
        B = orthonormalize(vs, dim=6)
        np.testing.assert_allclose(B.vectors @ B.vectors.T, np.eye(B.rank), atol=1e-10)
        for v in vs:
            assert np.linalg.norm(v - B.project(v)) <= 1e-7 * max(1.0, np.linalg.norm(v))
        assert B.rank == np.linalg.matrix_rank(vs)


class TestEmpiricalMeanCov:
    def test_two_points(self):
        mean, cov = empirical_mean_cov([[1, 0], [-1, 0]])
        np.testing.assert_array_equal(mean, [0, 0])
        np.testing.assert_array_equal(cov, [[1, 0], [0, 0]])

    def test_constant_points(self):
        _, cov = empirical_mean_cov(np.ones((5, 3)))
        np.testing.assert_array_equal(cov, np.zeros((3, 3)))

    def test_single_point_rejected(self):
        with pytest.raises(InsufficientData):
            empirical_mean_cov([[1.0, 2.0]])

    @pytest.mark.slow
    def test_gaussian_covariance_concentrates(self):
        X = np.random.default_rng(3).standard_normal((1_000_000, 4))
        _, cov = empirical_mean_cov(X)
        assert np.linalg.norm(cov - np.eye(4), 2) <= 0.02

    @settings(max_examples=50)
    @given(arrays(float, (20, 4), elements=finite))
    def test_psd(self, X):
        _, cov = empirical_mean_cov(X)
        assert np.linalg.eigvalsh(cov).min() >= -1e-9 * max(1.0, np.abs(cov).max())


class TestSmallestEigenpairs:
    def test_diagonal(self):
        vals, B = smallest_k_eigenpairs(np.diag([0.3, 1, 1]), 1)
        assert vals[0] == pytest.approx(0.3)
        np.testing.assert_allclose(B.vectors[0], [1, 0, 0])

    def test_identity_any_orthonormal_pair(self):
        vals, B = smallest_k_eigenpairs(np.eye(3), 2)
        np.testing.assert_allclose(vals, [1, 1])
        np.testing.assert_allclose(B.vectors @ B.vectors.T, np.eye(2), atol=1e-12)

    def test_two_by_two(self):
        vals, B = smallest_k_eigenpairs([[2, 1], [1, 2]], 1)
        assert vals[0] == pytest.approx(1.0)
        assert abs(B.vectors[0] @ np.array([1, -1]) / math.sqrt(2)) == pytest.approx(1.0)
        assert B.vectors[0][np.argmax(np.abs(B.vectors[0]))] > 0

    def test_k_too_large(self):
        with pytest.raises(DegenerateInput):
            smallest_k_eigenpairs(np.eye(2), 3)

    @given(arrays(float, (5, 5), elements=finite), st.integers(1, 5))
    def test_residual_and_ordering(self, A, k):
        M = A + A.T
        vals, B = smallest_k_eigenpairs(M, k)
        scale = max(np.linalg.norm(M, 2), 1e-12)
        for lam, v in zip(vals, B.vectors):
            assert np.linalg.norm(M @ v - lam * v) <= 1e-6 * scale + 1e-12
        assert np.all(np.diff(vals) >= -1e-12)
        assert vals[-1] <= np.linalg.eigvalsh(M)[k - 1:].min() + 1e-9 * scale


def test_rotate_towards_exact_angle():
    rng = np.random.default_rng(0)
    w = np.array([0.0, 0.6, 0.8])
    for th in (1e-3, 0.5, 2.0):
        assert angle(w, rotate_towards(w, th, rng)) == pytest.approx(th, abs=1e-12)
