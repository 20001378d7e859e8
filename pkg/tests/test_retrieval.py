import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdslearn.concepts import HalfspaceIntersection
from tdslearn.errors import DegenerateInput, InsufficientData
from tdslearn.gaussian import SeededSampler, sample_gaussian
from tdslearn.linalg import project_residual_norm
from tdslearn.retrieval import retrieve_subspace_pca

HALF_NORMAL_VAR = 1 - 2 / math.pi


def labelled(c, n, seed):
    X = sample_gaussian(c.d, n, SeededSampler(seed))
    return X, c(X)


class TestRetrieval:
    def test_single_halfspace(self):
        c = HalfspaceIntersection(np.eye(3)[:1])
        X, y = labelled(c, 50_000, 1)
        R = retrieve_subspace_pca(X, y, 1)
        assert project_residual_norm(np.eye(3)[0], R.basis) >= 0.99
        assert abs(R.eigenvalues[0] - HALF_NORMAL_VAR) <= 0.02
        assert R.n_positives == int((y == 1).sum())

    def test_all_positive_is_isotropic(self):
        X = sample_gaussian(3, 50_000, SeededSampler(2))
        R = retrieve_subspace_pca(X, np.ones(50_000, dtype=int), 1)
        assert R.k == 1 and abs(R.eigenvalues[0] - 1.0) <= 0.03

    def test_two_orthogonal_in_ten_dims(self):
        W = np.eye(10)[:2]
        X, y = labelled(HalfspaceIntersection(W), 100_000, 3)
        R = retrieve_subspace_pca(X, y, 2)
        assert min(project_residual_norm(w, R.basis) for w in W) >= 0.95

    def test_too_few_positives(self):
        X = sample_gaussian(3, 100, SeededSampler(0))
        y = -np.ones(100, dtype=int)
        y[0] = 1
        with pytest.raises(InsufficientData):
            retrieve_subspace_pca(X, y, 1)

    def test_bad_labels_and_k(self):
        X = sample_gaussian(3, 100, SeededSampler(0))
        with pytest.raises(DegenerateInput):
            retrieve_subspace_pca(X, np.zeros(100), 1)
        with pytest.raises(DegenerateInput):
            retrieve_subspace_pca(X, np.ones(100), 4)

    def test_degenerate_positives_padded(self):
        X = np.zeros((50, 3))
        X[:, 0] = np.linspace(-1, 1, 50)
        R = retrieve_subspace_pca(X, np.ones(50), 2)
        assert R.diagnostics["padded"] and R.diagnostics["positive_rank"] == 1
        np.testing.assert_allclose(R.eigenvalues, 0.0, atol=1e-12)
        assert project_residual_norm(np.eye(3)[0], R.basis) < 1e-8

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10**6))
    def test_rotation_equivariance(self, seed):
        rng = np.random.default_rng(seed)
        W = rng.standard_normal((2, 5))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        c = HalfspaceIntersection(W)
        X, y = labelled(c, 5000, seed)
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        R0 = retrieve_subspace_pca(X, y, 2)
        R1 = retrieve_subspace_pca(X @ Q.T, y, 2)
        for w in W:
            assert project_residual_norm(Q @ w, R1.basis) == pytest.approx(project_residual_norm(w, R0.basis),
                                                                           abs=1e-6)

    def test_eigenvalues_ascending_with_gap(self):
        c = HalfspaceIntersection(np.eye(6)[:2], [0.3, -0.2])
        X, y = labelled(c, 100_000, 7)
        R = retrieve_subspace_pca(X, y, 3)
        assert np.all(np.diff(R.eigenvalues) >= 0)
        assert R.eigenvalues[1] < 1 - 0.05

    @pytest.mark.slow
    def test_more_samples_do_not_hurt(self):
        gains = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            W = rng.standard_normal((2, 6))
            W /= np.linalg.norm(W, axis=1, keepdims=True)
            c = HalfspaceIntersection(W)
            small = retrieve_subspace_pca(*labelled(c, 1000, seed), 2)
            big = retrieve_subspace_pca(*labelled(c, 100_000, seed + 100), 2)
            gains.append(np.mean([project_residual_norm(w, big.basis) - project_residual_norm(w, small.basis)
                                  for w in W]))
        assert np.mean(gains) >= -0.02
