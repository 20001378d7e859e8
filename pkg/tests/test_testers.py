import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdslearn.covers import CandidateSet, build_candidate_set, build_sphere_cover, build_threshold_grid
from tdslearn.errors import DegenerateInput, InsufficientData
from tdslearn.gaussian import SeededSampler, sample_gaussian, std_normal_cdf
from tdslearn.hard_instances import exact_moment_match_lp, gauss_hermite_1d
from tdslearn.linalg import orthonormalize, rotate_towards
from tdslearn.testers import (MomentTestParams, TestVerdict, band_masses, band_test_general, band_test_homogeneous,
                              discrepancy_test, first_band_failure, general_band, max_pairwise_disagreement,
                              max_pairwise_disagreement_factored, moment_test, spectral_test)


def candidate_set(normals, thresholds, index_sets):
    normals = np.asarray(normals, dtype=float)
    return CandidateSet(normals, np.asarray(thresholds, dtype=float), list(index_sets),
                        np.zeros(len(index_sets)), 1.0, len(index_sets), len(index_sets), normals.shape[1])


def disagreement(w, tw, u, tu, X):
    return float(np.mean((X @ w + tw >= 0) != (X @ u + tu >= 0)))


class TestVerdictEnvelope:
    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_accepted_iff_statistic_below_threshold(self, s, t):
        assert TestVerdict.of(s, t).accepted == (s <= t)


class TestSpectral:
    def test_gaussian_accepts(self, gaussian_1e5):
        v = spectral_test(gaussian_1e5)
        assert v.accepted and abs(v.statistic - 1) < 0.05 and v.threshold == 2.0

    def test_scaled_rejects(self, gaussian_1e5):
        v = spectral_test(2 * gaussian_1e5)
        assert not v.accepted and abs(v.statistic - 4) < 0.2

    def test_identical_points(self):
        assert spectral_test(np.ones((2, 3))).statistic == 0.0

    def test_single_point(self):
        with pytest.raises(InsufficientData):
            spectral_test(np.ones((1, 3)))


class TestBand:
    def test_homogeneous_gaussian(self, gaussian_1e5):
        v = band_test_homogeneous(np.eye(5)[0], gaussian_1e5, 0.001)
        expected = 2 * (std_normal_cdf(0.02) - 0.5)
        assert v.accepted and abs(v.statistic - expected) <= 4 * math.sqrt(expected / 1e5)
        assert v.threshold == pytest.approx(0.05)

    def test_hyperplane_rejects(self):
        X = sample_gaussian(4, 1000, SeededSampler(0))
        X[:, 0] = 0.0
        assert not band_test_homogeneous(np.eye(4)[0], X, 0.001).accepted

    def test_vacuous_range(self):
        X = np.zeros((10, 2))
        v = band_test_homogeneous(np.eye(2)[0], X, 0.1)
        assert v.threshold == pytest.approx(5 * 0.1 ** (2 / 3)) and v.threshold > 1 and v.accepted

    def test_eps1_range(self):
        with pytest.raises(DegenerateInput):
            band_test_homogeneous(np.eye(2)[0], np.zeros((3, 2)), 0.5)

    def test_general_limit_halfwidth(self):
        assert general_band(0.001, 0.0)[0] == pytest.approx(5 * 2 * 0.001 ** (2 / 3))

    def test_general_gaussian(self, gaussian_1e5):
        v = band_test_general(np.eye(5)[0], 1.0, gaussian_1e5, 0.001, 2.0)
        gamma = 10 * (0.002 + 0.01)
        expected = std_normal_cdf(-1 + gamma) - std_normal_cdf(-1 - gamma)
        assert v.accepted and v.threshold == pytest.approx(5 * gamma)
        assert abs(v.statistic - expected) <= 4 * math.sqrt(expected / 1e5)

    def test_general_concentrated_rejects(self):
        X = sample_gaussian(3, 500, SeededSampler(1))
        X[:, 0] = -0.7
        assert not band_test_general(np.eye(3)[0], 0.7, X, 0.001, 1.0).accepted

    def test_general_theta_range(self):
        with pytest.raises(DegenerateInput):
            band_test_general(np.eye(2)[0], 2.0, np.zeros((3, 2)), 0.001, 1.0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6), st.floats(0.01, 0.5))
    def test_band_masses_match_direct(self, seed, hw):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((300, 3))
        U = rng.standard_normal((4, 3))
        thetas = np.array([-0.5, 0.0, 0.3])
        got = band_masses(U, thetas, X, hw)
        for i, u in enumerate(U):
            for j, th in enumerate(thetas):
                assert got[i, j] == pytest.approx(np.mean(np.abs(X @ u + th) <= hw), abs=1e-12)
        bad = first_band_failure(got, 0.1)
        direct = [(i, j) for i in range(4) for j in range(3) if got[i, j] > 0.1]
        assert bad == (direct[0] if direct else None)


class TestDisagreementSoundness:
    eps = 0.001

    def check(self, X, u, rng):
        if not (spectral_test(X).accepted and band_test_homogeneous(u, X, self.eps).accepted):
            return False
        bound = 7 * self.eps ** (2 / 3)
        for _ in range(100):
            w = rotate_towards(u, rng.uniform(0, self.eps), rng)
            assert disagreement(w, 0.0, u, 0.0, X) <= bound
        return True

    def test_gaussian_sample(self, gaussian_1e5):
        rng = np.random.default_rng(0)
        for _ in range(5):
            u = rng.standard_normal(5)
            assert self.check(gaussian_1e5, u / np.linalg.norm(u), rng)

    def test_adversarial_far_mass_sample(self):
        rng = np.random.default_rng(1)
        X = sample_gaussian(5, 100_000, SeededSampler(8))
        u = np.eye(5)[0]
        # 5% just outside the band, far out along e2 but within the spectral budget
        far = rng.random(X.shape[0]) < 0.05
        X[far, 0] = 2.05 * self.eps ** (2 / 3) * rng.choice([-1, 1], far.sum())
        X[far, 1] = 3.5 * rng.choice([-1, 1], far.sum())
        assert self.check(X, u, rng)

    def test_subspace_concentrated_sample_rejected(self):
        X = sample_gaussian(5, 100_000, SeededSampler(9))
        on = np.random.default_rng(2).random(X.shape[0]) < 0.1
        X[on, 0] = 0.0
        assert not self.check(X, np.eye(5)[0], np.random.default_rng(3))

    def test_general_tester_soundness(self, gaussian_1e5):
        rng = np.random.default_rng(4)
        eps, T = 0.001, 2.0
        u, theta = np.eye(5)[1], 0.8
        assert band_test_general(u, theta, gaussian_1e5, eps, T).accepted
        for _ in range(100):
            w = rotate_towards(u, rng.uniform(0, eps), rng)
            tau = theta + rng.uniform(-eps, eps)
            assert disagreement(w, tau, u, theta, gaussian_1e5) <= 60 * (eps * T + eps ** (2 / 3))


class TestMoment:
    def test_quadrature_embedding_accepts_strict(self):
        D = exact_moment_match_lp(gauss_hermite_1d(6), 8)
        z, w1 = D.support, D.weights
        # product rule: the 1-D law along e1 and 3-point Gauss rules elsewhere
        g = gauss_hermite_1d(3)
        pts, wts = [], []
        for a, wa in zip(z, w1):
            for b, wb in zip(g.support, g.weights):
                for c, wc in zip(g.support, g.weights):
                    pts.append([a, b, c])
                    wts.append(wa * wb * wc)
        v = moment_test(np.array(pts), MomentTestParams(4, 1e-6, "strict"), weights=np.array(wts))
        assert v.accepted and v.statistic <= 1e-9

    def test_gaussian_calibration(self):
        p = MomentTestParams(3, 4.0 ** -3)
        accepted = [moment_test(sample_gaussian(4, 100_000, SeededSampler(s)), p).accepted for s in range(50)]
        assert np.mean(accepted) >= 0.95

    def test_strict_rule_rejects_when_delta_below_noise(self):
        p = MomentTestParams(3, 1e-4, "strict")
        rejected = [not moment_test(sample_gaussian(4, 10_000, SeededSampler(s)), p).accepted for s in range(20)]
        assert np.mean(rejected) == 1.0

    def test_mean_shift_witness(self):
        X = sample_gaussian(4, 100_000, SeededSampler(6))
        X[:, 0] += 1.0
        v = moment_test(X, MomentTestParams(2, 0.02, "strict"))
        assert not v.accepted
        X1 = sample_gaussian(4, 100_000, SeededSampler(6))
        X1[:, 0] += 1.0
        v1 = moment_test(X1, MomentTestParams(1, 0.02, "strict"))
        assert v1.witness == (1, 0, 0, 0) and abs(v1.statistic - 1) < 0.02

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6), st.floats(1e-4, 0.5), st.floats(1e-4, 0.5))
    def test_smaller_delta_never_rejects_less(self, seed, d1, d2):
        X = sample_gaussian(3, 2000, SeededSampler(seed))
        lo, hi = sorted((d1, d2))
        a = moment_test(X, MomentTestParams(3, lo, "strict"))
        b = moment_test(X, MomentTestParams(3, hi, "strict"))
        assert a.accepted <= b.accepted

    def test_params_validation(self):
        with pytest.raises(DegenerateInput):
            MomentTestParams(0, 0.1)
        with pytest.raises(DegenerateInput):
            MomentTestParams(2, 0.0)


class TestDiscrepancy:
    def test_single_member(self, gaussian_1e5):
        F = candidate_set(np.eye(5)[:1], [0.0], [(0,)])
        v = discrepancy_test(F, gaussian_1e5, 0.2)
        assert v.statistic == 0.0 and v.accepted

    def test_orthogonal_signs(self, gaussian_1e5):
        F = candidate_set(np.eye(5)[:2], [0.0, 0.0], [(0,), (1,)])
        v = discrepancy_test(F, gaussian_1e5, 0.9)
        assert abs(v.statistic - 0.5) < 0.01 and not v.accepted

    def test_small_rotation(self, gaussian_1e5):
        w = rotate_towards(np.eye(5)[0], 0.01, np.random.default_rng(0))
        F = candidate_set(np.vstack([np.eye(5)[0], w]), [0.0, 0.0], [(0,), (1,)])
        v = discrepancy_test(F, gaussian_1e5, 0.2)
        assert abs(v.statistic - 0.01 / math.pi) < 0.0015 and v.accepted

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 4))
    def test_factored_matches_brute_force(self, seed, n_pivots):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((400, 3))
        cov = build_sphere_cover(orthonormalize(rng.standard_normal((2, 3))), 0.3)
        F = build_candidate_set(cov, build_threshold_grid(0.5, 1.0), 2, X, np.ones(400), 0.6)
        bank, idx = F.factored_indicators(X)
        fast, pair = max_pairwise_disagreement_factored(bank, idx, n_pivots=n_pivots, block=7)
        slow, _ = max_pairwise_disagreement(F.indicators(X))
        assert fast == slow
        ind = F.indicators(X)
        if pair is not None:
            assert np.mean(ind[:, pair[0]] != ind[:, pair[1]]) == fast
