"""Sparse angular cover, threshold grid and the training-error-filtered candidate set.

Candidates are intersections of at most ``k`` halfspaces drawn from a bank
``cover x grid``; bank entry ``iu * g + it`` is the halfspace
``{x : points[iu] . x + values[it] >= 0}``.  A candidate is identified by a
strictly increasing tuple of bank indices (repeating a halfspace does not
change an intersection, so multisets collapse to sets).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .concepts import HalfspaceIntersection
from .errors import BudgetExceeded, DegenerateInput, EmptyCandidateSet
from .linalg import OrthonormalBasis

COVER_BUDGET = 10**7
CANDIDATE_BUDGET = 5 * 10**7
ROW_CHUNK = 8192
BATCH_CHUNK = 2048


@dataclass(frozen=True)
class SphereCover:
    """Normalized nonzero points of the lattice ``eps2 * Z^rank`` inside the cube, in basis coordinates."""

    points: np.ndarray
    eps2: float
    source_basis: OrthonormalBasis
    lattice_size: int = 0

    def __len__(self) -> int:
        return self.points.shape[0]


def lattice_size(rank: int, eps2: float) -> int:
    half = int(math.floor(1.0 / eps2 + 1e-12))
    return (2 * half + 1) ** rank


def build_sphere_cover(basis: OrthonormalBasis, eps2: float,
                       budget: int = COVER_BUDGET) -> SphereCover:
    """Cover of the unit sphere of ``span(basis)``.

    Points are ``u / |u|`` for ``u = eps2 * sum_i j_i v^i`` with integer
    ``|j_i| <= 1/eps2``.  Two lattice vectors give the same point exactly when
    they share the primitive vector ``j / gcd(j)``, so deduplication is exact.
    """
    m = basis.rank
    if m < 1:
        raise DegenerateInput("cover needs a basis of rank >= 1")
    if not 0.0 < eps2 < 1.0 / m:
        raise DegenerateInput(f"eps2={eps2} outside (0, 1/{m})")
    size = lattice_size(m, eps2)
    if size > budget:
        raise BudgetExceeded(f"lattice of {size} points exceeds budget {budget}", size=size, budget=budget)
    half = int(math.floor(1.0 / eps2 + 1e-12))
    prims = []
    for j in itertools.product(range(-half, half + 1), repeat=m):
        if reduce(math.gcd, j, 0) == 1:
            prims.append(j)
    J = np.asarray(prims, dtype=float).reshape(-1, m)
    J /= np.linalg.norm(J, axis=1, keepdims=True)
    pts = J @ basis.vectors
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts.setflags(write=False)
    return SphereCover(pts, float(eps2), basis, size)


@dataclass(frozen=True)
class ThresholdGrid:
    values: np.ndarray
    eps1: float
    T: float

    def __len__(self) -> int:
        return self.values.shape[0]


def build_threshold_grid(eps1: float, T: float) -> ThresholdGrid:
    """``{j * eps1 : j integer, |j| <= T / eps1}``."""
    if eps1 <= 0 or T <= 0:
        raise DegenerateInput("eps1 and T must be positive")
    jmax = int(math.floor(T / eps1 + 1e-9))
    vals = np.arange(-jmax, jmax + 1) * eps1
    vals[jmax] = 0.0
    vals.setflags(write=False)
    return ThresholdGrid(vals, float(eps1), float(T))


HOMOGENEOUS_GRID = None


@dataclass
class CandidateSet:
    """Intersections whose empirical training error is at most ``train_err_threshold``.

    ``index_sets[i]`` lists bank indices of member ``i``; members are in
    enumeration order (by size, then lexicographic).
    """

    normals_bank: np.ndarray
    thresholds_bank: np.ndarray
    index_sets: list[tuple[int, ...]]
    train_errors: np.ndarray
    train_err_threshold: float
    n_evaluated: int
    n_enumerable: int
    d: int
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.index_sets)

    def member(self, i: int) -> HalfspaceIntersection:
        idx = list(self.index_sets[i])
        return HalfspaceIntersection(self.normals_bank[idx], self.thresholds_bank[idx], self.d)

    @property
    def members(self) -> list[HalfspaceIntersection]:
        return [self.member(i) for i in range(len(self))]

    def factored_indicators(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Bank truth table on ``X`` plus a member-to-column index matrix.

        Returns ``(bank, idx)``: ``bank`` is boolean ``(n, u + 1)`` holding the
        ``u`` bank halfspaces used by some member followed by an all-true
        column, and ``idx`` is ``(|F|, max size)``; member ``i`` labels
        ``X[r]`` positive iff ``bank[r, idx[i]]`` is all true.
        """
        X = np.asarray(X, dtype=float)
        used = sorted({j for t in self.index_sets for j in t})
        pos = {j: c for c, j in enumerate(used)}
        width = max(1, max(len(t) for t in self.index_sets))
        idx = np.full((len(self), width), len(used), dtype=np.intp)
        for i, t in enumerate(self.index_sets):
            idx[i, :len(t)] = [pos[j] for j in t]
        bank = np.ones((X.shape[0], len(used) + 1), dtype=bool)
        if used:
            bank[:, :-1] = X @ self.normals_bank[used].T + self.thresholds_bank[used] >= 0.0
        return bank, idx

    def indicators(self, X) -> np.ndarray:
        """Boolean matrix ``(n, |F|)`` with entry ``[r, i]`` = member ``i`` labels ``X[r]`` positive."""
        bank, idx = self.factored_indicators(X)
        return factored_columns(bank, idx)


def factored_columns(bank: np.ndarray, idx: np.ndarray) -> np.ndarray:
    out = bank[:, idx[:, 0]]
    for c in range(1, idx.shape[1]):
        out &= bank[:, idx[:, c]]
    return out


def _multiset_count(h: int, k: int) -> int:
    return sum(math.comb(h + s - 1, s) for s in range(k + 1))


def _bank(cover: SphereCover, grid: ThresholdGrid | None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g_vals = np.zeros(1) if grid is None else np.asarray(grid.values)
    c, g = len(cover), g_vals.shape[0]
    normals = np.repeat(cover.points, g, axis=0)
    thresholds = np.tile(g_vals, c)
    directions = np.repeat(np.arange(c), g)
    return normals, thresholds, directions


def build_candidate_set(cover: SphereCover, grid: ThresholdGrid | None, k: int, X, y,
                        err_thresh: float, budget: int = CANDIDATE_BUDGET) -> CandidateSet:
    """Enumerate intersections of at most ``k`` bank halfspaces and keep the low-error ones.

    Adding a halfspace can only turn positive predictions negative, so the
    false-negative count of a partial intersection bounds the error of every
    extension from below.  Partial intersections whose false negatives
    already exceed the threshold are not extended; this changes the running
    time, not the output.  In general mode two halfspaces sharing a cover
    direction are never combined, since their intersection equals one of
    them.  ``budget`` caps the number of candidates whose error is evaluated.
    """
    if len(cover) == 0:
        raise DegenerateInput("empty cover")
    if k < 1:
        raise DegenerateInput("k >= 1 required")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).reshape(-1)
    m = X.shape[0]
    if m == 0 or y.shape[0] != m:
        raise DegenerateInput("training set must be nonempty with one label per point")
    normals, thresholds, directions = _bank(cover, grid)
    H = normals.shape[0]
    n_enum = _multiset_count(H, k)
    limit = err_thresh * m + 1e-9
    ypos = (y == 1)
    n_pos = int(ypos.sum())
    n_neg = m - n_pos

    index_sets: list[tuple[int, ...]] = []
    errors: list[int] = []
    n_eval = 1
    if n_neg <= limit:
        index_sets.append(())
        errors.append(n_neg)
    frontier: list[tuple[int, ...]] = [()]
    # every sub-intersection of a kept candidate passes the false-negative bound,
    # so extensions only use halfspaces that pass it on their own
    allowed = np.arange(H)
    per_level = []
    for level in range(1, k + 1):
        ext = [_extensions(t, allowed, directions, grid is not None) for t in frontier]
        total = int(sum(e.shape[0] for e in ext))
        if n_eval + total > budget:
            raise BudgetExceeded(f"candidate evaluation would reach {n_eval + total} > budget {budget}",
                                 size=n_eval + total, budget=budget)
        n_eval += total
        pos_in_allowed = np.full(H, -1)
        pos_in_allowed[allowed] = np.arange(allowed.shape[0])
        new_frontier: list[tuple[int, ...]] = []
        for b0 in range(0, len(frontier), BATCH_CHUNK):
            batch = frontier[b0:b0 + BATCH_CHUNK]
            local = [tuple(int(pos_in_allowed[j]) for j in t) for t in batch]
            fn, fp = _extension_counts(local, normals[allowed], thresholds[allowed], X, ypos)
            for bi, t in enumerate(batch):
                js = ext[b0 + bi]
                cols = pos_in_allowed[js]
                f_n = fn[bi, cols]
                keep = f_n <= limit
                for j, fnv, fpv in zip(js[keep], f_n[keep], fp[bi, cols[keep]]):
                    cand = t + (int(j),)
                    if fnv + fpv <= limit:
                        index_sets.append(cand)
                        errors.append(int(round(fnv + fpv)))
                    if level < k:
                        new_frontier.append(cand)
        per_level.append({"level": level, "evaluated": total, "extended": len(new_frontier)})
        if level == 1:
            allowed = np.asarray([t[0] for t in new_frontier], dtype=int)
        frontier = new_frontier
        if not frontier:
            break
    if not index_sets:
        raise EmptyCandidateSet(f"no intersection of <= {k} halfspaces has training error <= {err_thresh}")
    order = sorted(range(len(index_sets)), key=lambda i: (len(index_sets[i]), index_sets[i]))
    index_sets = [index_sets[i] for i in order]
    errs = np.asarray([errors[i] for i in order], dtype=float) / m
    return CandidateSet(normals, thresholds, index_sets, errs, float(err_thresh), int(n_eval),
                        int(n_enum), cover.source_basis.dim,
                        {"bank_size": H, "levels": per_level})


def _extensions(t: tuple[int, ...], allowed: np.ndarray, directions: np.ndarray,
                distinct_directions: bool) -> np.ndarray:
    """Bank indices that may extend ``t``: larger than its last index, optionally on a new direction."""
    js = allowed[allowed > t[-1]] if t else allowed
    if t and distinct_directions:
        js = js[~np.isin(directions[js], directions[list(t)])]
    return js


def _extension_counts(batch, normals, thresholds, X, ypos):
    """False-negative and false-positive counts of ``t AND h_j`` for every partial ``t`` and column ``j``.

    Indices in ``batch`` refer to rows of ``normals``.  Counts are
    accumulated as float32 products of 0/1 matrices, exact below 2^24 rows
    per chunk.
    """
    B, H = len(batch), normals.shape[0]
    fn = np.zeros((B, H))
    fp = np.zeros((B, H))
    for lo in range(0, X.shape[0], ROW_CHUNK):
        xb = X[lo:lo + ROW_CHUNK]
        yb = ypos[lo:lo + ROW_CHUNK]
        P = (xb @ normals.T + thresholds >= 0.0)
        I = np.ones((B, xb.shape[0]), dtype=bool)
        for bi, t in enumerate(batch):
            for j in t:
                I[bi] &= P[:, j]
        # false negatives only involve positive rows, false positives only negative rows
        Ppos, Pneg = P[yb].astype(np.float32), P[~yb].astype(np.float32)
        fn += float(yb.sum()) - (I[:, yb].astype(np.float32) @ Ppos).astype(float)
        fp += (I[:, ~yb].astype(np.float32) @ Pneg).astype(float)
    return fn, fp


__all__ = [
    "SphereCover",
    "ThresholdGrid",
    "CandidateSet",
    "build_sphere_cover",
    "build_threshold_grid",
    "build_candidate_set",
    "lattice_size",
    "HOMOGENEOUS_GRID",
    "factored_columns",
]
