"""Accept/reject sub-tests run on the unlabeled test sample.

Every test returns a :class:`TestVerdict` with ``accepted == (statistic <= threshold)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DegenerateInput, InsufficientData
from .gaussian import enumerate_multi_indices, gaussian_moment_multi
from .linalg import UNIT_TOL, empirical_mean_cov

SPECTRAL_THRESHOLD = 2.0
ROW_CHUNK = 8192
GRAM_BLOCK = 2048


@dataclass(frozen=True)
class TestVerdict:
    __test__ = False

    accepted: bool
    statistic: float
    threshold: float
    witness: Any = None

    @classmethod
    def of(cls, statistic: float, threshold: float, witness: Any = None) -> "TestVerdict":
        return cls(bool(statistic <= threshold), float(statistic), float(threshold), witness)

    def to_record(self) -> dict:
        w = self.witness
        if isinstance(w, np.ndarray):
            w = w.tolist()
        elif isinstance(w, tuple):
            w = [x.tolist() if isinstance(x, np.ndarray) else x for x in w]
        return {"accepted": self.accepted, "statistic": self.statistic,
                "threshold": self.threshold, "witness": w}


@dataclass(frozen=True)
class MomentTestParams:
    r: int
    delta: float
    effective_delta_rule: str = "sampling-adjusted"
    sigmas: float = 3.0

    def __post_init__(self):
        if self.r < 1:
            raise DegenerateInput("r >= 1 required")
        if self.delta <= 0:
            raise DegenerateInput("delta must be positive")
        if self.effective_delta_rule not in ("strict", "sampling-adjusted"):
            raise DegenerateInput(f"unknown rule {self.effective_delta_rule!r}")


def _points(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DegenerateInput("X must be an (n, d) array")
    return X


def _unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(-1)
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise DegenerateInput("u must be a unit vector")
    return u


def spectral_test(X) -> TestVerdict:
    """Largest eigenvalue of the centered empirical covariance against 2."""
    X = _points(X)
    if X.shape[0] < 2:
        raise InsufficientData("spectral test needs at least 2 points")
    _, cov = empirical_mean_cov(X)
    top = float(np.linalg.eigvalsh(cov)[-1])
    return TestVerdict.of(max(top, 0.0), SPECTRAL_THRESHOLD)


def homogeneous_band(eps1: float) -> tuple[float, float]:
    """(halfwidth, mass threshold) of the homogeneous band test."""
    if not 0.0 < eps1 < 0.5:
        raise DegenerateInput(f"eps1={eps1} outside (0, 1/2)")
    e = eps1 ** (2.0 / 3.0)
    return 2.0 * e, 5.0 * e


def general_band(eps1: float, T: float) -> tuple[float, float]:
    """(gamma, 5 gamma) with gamma = 10 (eps1 T + eps1^(2/3))."""
    if eps1 <= 0 or T < 0:
        raise DegenerateInput("eps1 > 0 and T >= 0 required")
    gamma = 10.0 * (eps1 * T + eps1 ** (2.0 / 3.0))
    return gamma, 5.0 * gamma


def band_test_homogeneous(u, X, eps1: float) -> TestVerdict:
    """Empirical mass of ``{|u.x| <= 2 eps1^(2/3)}`` against ``5 eps1^(2/3)``."""
    u, X = _unit(u), _points(X)
    hw, thr = homogeneous_band(eps1)
    return TestVerdict.of(float(np.mean(np.abs(X @ u) <= hw)), thr, u)


def band_test_general(u, theta: float, X, eps1: float, T: float) -> TestVerdict:
    """Empirical mass of ``{|u.x + theta| <= gamma}`` against ``5 gamma``."""
    u, X = _unit(u), _points(X)
    if abs(theta) > T + 1e-12:
        raise DegenerateInput(f"|theta|={abs(theta)} exceeds T={T}")
    gamma, thr = general_band(eps1, T)
    return TestVerdict.of(float(np.mean(np.abs(X @ u + theta) <= gamma)), thr, (u, float(theta)))


def band_masses(U, thetas, X, halfwidth: float) -> np.ndarray:
    """Band masses ``mean(|U[i].x + thetas[j]| <= halfwidth)`` for all pairs, shape ``(len(U), len(thetas))``.

    Projections are sorted once per direction and every band count is two
    binary searches.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    thetas = np.asarray(thetas, dtype=float).reshape(-1)
    X = _points(X)
    n = X.shape[0]
    out = np.empty((U.shape[0], thetas.shape[0]))
    for i, u in enumerate(U):
        z = np.sort(X @ u)
        # |z + theta| <= h  <=>  -theta - h <= z <= -theta + h
        hi = np.searchsorted(z, -thetas + halfwidth, side="right")
        lo = np.searchsorted(z, -thetas - halfwidth, side="left")
        out[i] = (hi - lo) / n
    return out


def first_band_failure(masses: np.ndarray, threshold: float) -> tuple[int, int] | None:
    """Index ``(i, j)`` of the first failing band in row-major order, or ``None``."""
    bad = np.flatnonzero(masses.reshape(-1) > threshold)
    if bad.size == 0:
        return None
    return tuple(int(v) for v in np.unravel_index(bad[0], masses.shape))


def _monomials(X: np.ndarray, alphas: list[tuple[int, ...]], r: int) -> np.ndarray:
    powers = [np.ones_like(X)]
    for _ in range(r):
        powers.append(powers[-1] * X)
    M = np.empty((X.shape[0], len(alphas)))
    for a, alpha in enumerate(alphas):
        col = np.ones(X.shape[0])
        for j, e in enumerate(alpha):
            if e:
                col = col * powers[e][:, j]
        M[:, a] = col
    return M


def moment_deviations(X, r: int, weights=None) -> tuple[list[tuple[int, ...]], np.ndarray, np.ndarray]:
    """Multi-indices, ``E_X[x^a] - E_N[x^a]`` and the per-index sampling standard error.

    With ``weights`` the points are a weighted (population) distribution and
    the standard errors are zero.
    """
    X = _points(X)
    alphas = enumerate_multi_indices(X.shape[1], r)
    target = np.array([gaussian_moment_multi(a) for a in alphas])
    n = X.shape[0]
    if weights is not None:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != n:
            raise DegenerateInput("one weight per point required")
        mean = np.zeros(len(alphas))
        for lo in range(0, n, ROW_CHUNK):
            mean += w[lo:lo + ROW_CHUNK] @ _monomials(X[lo:lo + ROW_CHUNK], alphas, r)
        return alphas, mean - target, np.zeros(len(alphas))
    s1 = np.zeros(len(alphas))
    s2 = np.zeros(len(alphas))
    for lo in range(0, n, ROW_CHUNK):
        M = _monomials(X[lo:lo + ROW_CHUNK], alphas, r)
        s1 += M.sum(axis=0)
        s2 += (M * M).sum(axis=0)
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0)
    return alphas, mean - target, np.sqrt(var / n)


def moment_test(X, p: MomentTestParams, weights=None) -> TestVerdict:
    """Low-degree moment comparison against the standard Gaussian.

    Strict rule: statistic ``max_a |dev_a|``.  Sampling-adjusted rule:
    statistic ``max_a (|dev_a| - sigmas * se_a)``, which is equivalent to the
    per-index threshold ``delta + sigmas * se_a``.  Threshold is ``delta`` in
    both cases and the witness is the maximizing multi-index.
    """
    alphas, dev, se = moment_deviations(X, p.r, weights)
    score = np.abs(dev)
    if p.effective_delta_rule == "sampling-adjusted":
        score = score - p.sigmas * se
    a = int(np.argmax(score))
    return TestVerdict.of(float(score[a]), p.delta, alphas[a])


def max_pairwise_disagreement(ind: np.ndarray) -> tuple[float, tuple[int, int] | None]:
    """Largest disagreement fraction over all unordered column pairs of a boolean matrix.

    Plain all-pairs evaluation: disagreement of columns ``i, j`` is
    ``(s_i + s_j - 2 G_ij) / n`` with ``G`` the Gram matrix of the 0/1 columns.
    """
    n, M = ind.shape
    if M < 2 or n == 0:
        return 0.0, None
    s = ind.sum(axis=0).astype(float)
    best, arg = -1.0, None
    for b0 in range(0, M, GRAM_BLOCK):
        for c0 in range(b0, M, GRAM_BLOCK):
            G = np.zeros((min(GRAM_BLOCK, M - b0), min(GRAM_BLOCK, M - c0)))
            for lo in range(0, n, ROW_CHUNK):
                A = ind[lo:lo + ROW_CHUNK, b0:b0 + GRAM_BLOCK].astype(np.float32)
                B = ind[lo:lo + ROW_CHUNK, c0:c0 + GRAM_BLOCK].astype(np.float32)
                G += (A.T @ B).astype(float)
            D = s[b0:b0 + G.shape[0], None] + s[None, c0:c0 + G.shape[1]] - 2.0 * G
            if b0 == c0:
                D = np.triu(D, k=1)
            i, j = np.unravel_index(int(np.argmax(D)), D.shape)
            if D[i, j] > best:
                best, arg = float(D[i, j]), (int(b0 + i), int(c0 + j))
    return max(best, 0.0) / n, arg


def max_pairwise_disagreement_factored(bank: np.ndarray, idx: np.ndarray, n_pivots: int = 4,
                                       block: int = 256) -> tuple[float, tuple[int, int] | None]:
    """Same maximum as :func:`max_pairwise_disagreement` for columns given in factored form.

    Column ``i`` is the AND of ``bank[:, idx[i]]``.  Disagreement is a
    metric, so for any pivot ``p`` every pair obeys
    ``dist(i, j) <= dist(p, i) + dist(p, j)``.  The first pivot is the
    column closest in L1 to the mean column, later ones are picked farthest
    first.  Only pairs whose smallest pivot bound exceeds the best distance
    seen so far get a Gram entry, so the returned maximum is exact.
    """
    n, M = bank.shape[0], idx.shape[0]
    if M < 2 or n == 0:
        return 0.0, None
    chunk = max(256, min(ROW_CHUNK, (1 << 25) // max(M, 1)))

    s = _weighted_member_counts(bank, idx, None)
    row_mean = _member_row_means(bank, idx)
    score = _weighted_member_counts(bank, idx, 1.0 - 2.0 * row_mean)
    pivots = [int(np.argmin(score))]
    dists = []
    best, arg = -1.0, None
    for t in range(min(n_pivots, M)):
        p = pivots[-1]
        on = np.all(bank[:, idx[p]], axis=1)
        g = _weighted_member_counts(bank[on], idx, None)
        d = s + s[p] - 2.0 * g
        dists.append(d)
        j = int(np.argmax(d))
        if d[j] > best:
            best, arg = float(d[j]), tuple(sorted((p, j)))
        nxt = int(np.argmax(np.min(dists, axis=0)))
        if nxt in pivots:
            break
        pivots.append(nxt)
    dists = np.asarray(dists)

    d0 = dists[0]
    order = np.argsort(-d0, kind="stable")
    rank = np.empty(M, dtype=np.intp)
    rank[order] = np.arange(M)
    for b0 in range(0, M, block):
        rows = order[b0:b0 + block]
        if 2.0 * d0[rows[0]] <= best:
            break
        cols = order[b0 + 1:]
        for dp in dists:
            cols = cols[dp[cols] > best - dp[rows].max()]
        if cols.size == 0:
            continue
        ub = np.min(dists[:, rows, None] + dists[:, None, cols], axis=0)
        need = (ub > best) & (rank[cols][None, :] > rank[rows][:, None])
        if not need.any():
            continue
        rows, cols, need = rows[need.any(axis=1)], cols[need.any(axis=0)], need[np.ix_(need.any(axis=1), need.any(axis=0))]
        G = np.zeros((rows.size, cols.size))
        for lo in range(0, n, chunk):
            bk = bank[lo:lo + chunk]
            G += (_factored_block(bk, idx[rows]).astype(np.float32).T
                  @ _factored_block(bk, idx[cols]).astype(np.float32)).astype(float)
        D = s[rows, None] + s[None, cols] - 2.0 * G
        D[~need] = -1.0
        i, j = np.unravel_index(int(np.argmax(D)), D.shape)
        if D[i, j] > best:
            best, arg = float(D[i, j]), tuple(sorted((int(rows[i]), int(cols[j]))))
    return max(best, 0.0) / n, arg


def _weighted_member_counts(bank: np.ndarray, idx: np.ndarray, w) -> np.ndarray:
    """``sum_r w_r C[r, i]`` for every factored column ``i`` (``w = None`` means all ones).

    Members of at most two halfspaces are read off the weighted Gram matrix
    of the bank; 0/1 weights keep the float32 chunk sums exact.
    """
    n, M = bank.shape[0], idx.shape[0]
    out = np.zeros(M)
    if n == 0:
        return out
    if idx.shape[1] <= 2:
        a = idx[:, 0]
        b = idx[:, 1] if idx.shape[1] == 2 else idx[:, 0]
        G = np.zeros((bank.shape[1], bank.shape[1]))
        for lo in range(0, n, ROW_CHUNK):
            B = bank[lo:lo + ROW_CHUNK].astype(np.float32)
            Bw = B if w is None else B * np.asarray(w[lo:lo + ROW_CHUNK], dtype=np.float32)[:, None]
            G += (Bw.T @ B).astype(float)
        return G[a, b]
    for lo in range(0, n, ROW_CHUNK):
        C = _factored_block(bank[lo:lo + ROW_CHUNK], idx)
        out += C.sum(axis=0) if w is None else np.asarray(w[lo:lo + ROW_CHUNK], dtype=float) @ C
    return out


def _member_row_means(bank: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Fraction of factored columns that are true, for every row."""
    n, M = bank.shape[0], idx.shape[0]
    out = np.empty(n)
    if idx.shape[1] <= 2:
        b = idx[:, 1] if idx.shape[1] == 2 else idx[:, 0]
        N = np.zeros((bank.shape[1], bank.shape[1]), dtype=np.float32)
        np.add.at(N, (idx[:, 0], b), 1.0)
        for lo in range(0, n, ROW_CHUNK):
            B = bank[lo:lo + ROW_CHUNK].astype(np.float32)
            out[lo:lo + ROW_CHUNK] = np.sum((B @ N) * B, axis=1) / M
        return out
    for lo in range(0, n, ROW_CHUNK):
        out[lo:lo + ROW_CHUNK] = _factored_block(bank[lo:lo + ROW_CHUNK], idx).mean(axis=1)
    return out


def _factored_block(bank: np.ndarray, idx: np.ndarray) -> np.ndarray:
    out = bank[:, idx[:, 0]]
    for c in range(1, idx.shape[1]):
        out &= bank[:, idx[:, c]]
    return out


def discrepancy_test(F, X, eps: float) -> TestVerdict:
    """Maximum pairwise disagreement of the candidate set on ``X`` against ``eps / 2``."""
    X = _points(X)
    if len(F) == 0:
        raise DegenerateInput("candidate set is empty")
    bank, idx = F.factored_indicators(X)
    stat, pair = max_pairwise_disagreement_factored(bank, idx)
    return TestVerdict.of(stat, eps / 2.0, pair)


__all__ = [
    "TestVerdict",
    "MomentTestParams",
    "spectral_test",
    "band_test_homogeneous",
    "band_test_general",
    "band_masses",
    "first_band_failure",
    "homogeneous_band",
    "general_band",
    "moment_test",
    "moment_deviations",
    "discrepancy_test",
    "max_pairwise_disagreement",
    "max_pairwise_disagreement_factored",
]
