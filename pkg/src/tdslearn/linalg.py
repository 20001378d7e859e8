"""Small dense linear-algebra primitives (dimension is desk scale, d <= 64).

All functions are pure and operate on numpy arrays. Vectors are 1-D arrays,
point clouds are ``(n, d)`` arrays with one sample per row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InsufficientData

ORTHO_TOL = 1e-10
SYM_TOL = 1e-10
DROP_TOL = 1e-8
UNIT_TOL = 1e-8


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal vectors stored as the rows of ``vectors`` (shape ``(rank, dim)``)."""

    vectors: np.ndarray
    dim: int

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float).reshape(-1, self.dim)
        if v.shape[0] > self.dim:
            raise DegenerateInput(f"rank {v.shape[0]} exceeds dimension {self.dim}")
        if v.shape[0]:
            gram = v @ v.T
            if not np.allclose(gram, np.eye(v.shape[0]), atol=ORTHO_TOL, rtol=0.0):
                raise DegenerateInput("vectors are not orthonormal")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def rank(self) -> int:
        return self.vectors.shape[0]

    def project(self, w: np.ndarray) -> np.ndarray:
        """Orthogonal projection of ``w`` onto the span."""
        w = np.asarray(w, dtype=float)
        return self.vectors.T @ (self.vectors @ w)

    def coords(self, w: np.ndarray) -> np.ndarray:
        return self.vectors @ np.asarray(w, dtype=float)


def _as_vector(a, name: str = "vector") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise DegenerateInput(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(a)):
        raise DegenerateInput(f"{name} has non-finite entries")
    return a


def angle(a, b) -> float:
    """Angle between two nonzero vectors, in ``[0, pi]``.

    Uses the half-angle formula ``2 atan2(|a^ - b^|, |a^ + b^|)`` which stays
    accurate near 0 and pi where ``arccos`` loses half the digits.
    """
    a = _as_vector(a, "a")
    b = _as_vector(b, "b")
    if a.shape != b.shape:
        raise DegenerateInput("dimension mismatch")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInput("angle undefined for a zero vector")
    ua, ub = a / na, b / nb
    return float(2.0 * np.arctan2(np.linalg.norm(ua - ub), np.linalg.norm(ua + ub)))


def project_residual_norm(w, basis: OrthonormalBasis) -> float:
    """Norm of the projection of the unit vector ``w`` onto ``span(basis)``."""
    w = _as_vector(w, "w")
    if w.shape[0] != basis.dim:
        raise DegenerateInput("dimension mismatch")
    if abs(np.linalg.norm(w) - 1.0) > UNIT_TOL:
        raise DegenerateInput("w must be a unit vector")
    if basis.rank == 0:
        return 0.0
    return float(min(1.0, np.linalg.norm(basis.vectors @ w)))


def orthonormalize(vs, dim: int | None = None, drop_tol: float = DROP_TOL) -> OrthonormalBasis:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    A vector whose residual after projection is below ``drop_tol`` times its
    original norm is treated as dependent and dropped.
    """
    vs = np.asarray(vs, dtype=float)
    if vs.ndim == 1:
        vs = vs.reshape(1, -1) if vs.size else vs.reshape(0, dim or 0)
    if dim is None:
        if vs.shape[0] == 0 and vs.shape[1] == 0:
            raise DegenerateInput("dimension unknown for empty input")
        dim = vs.shape[1]
    out: list[np.ndarray] = []
    for v in vs:
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            continue
        r = v.copy()
        for _ in range(2):
            for q in out:
                r -= (q @ r) * q
        nr = np.linalg.norm(r)
        if nr < drop_tol * norm0:
            continue
        out.append(r / nr)
    return OrthonormalBasis(np.array(out).reshape(-1, dim), dim)


def complete_basis(basis: OrthonormalBasis, rank: int) -> OrthonormalBasis:
    """Pad ``basis`` with standard basis directions until it has ``rank`` vectors."""
    if rank > basis.dim:
        raise DegenerateInput("requested rank exceeds dimension")
    if basis.rank >= rank:
        return basis
    rows = list(basis.vectors)
    for e in np.eye(basis.dim):
        if len(rows) >= rank:
            break
        r = e.copy()
        for _ in range(2):
            for q in rows:
                r -= (q @ r) * q
        nr = np.linalg.norm(r)
        if nr > 1e-6:
            rows.append(r / nr)
    return OrthonormalBasis(np.array(rows).reshape(-1, basis.dim), basis.dim)


def empirical_mean_cov(points) -> tuple[np.ndarray, np.ndarray]:
    """Empirical mean and centered covariance with 1/n normalization."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise DegenerateInput("points must be an (n, d) array")
    n = x.shape[0]
    if n < 2:
        raise InsufficientData(f"need at least 2 points, got {n}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / n
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # columns are eigenvectors; make the largest-magnitude coordinate positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def smallest_k_eigenpairs(M, k: int) -> tuple[np.ndarray, OrthonormalBasis]:
    """Eigenvalues (ascending) and eigenvectors of the k smallest eigenpairs of a symmetric matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DegenerateInput("matrix must be square")
    d = M.shape[0]
    if not 1 <= k <= d:
        raise DegenerateInput(f"k={k} outside [1, {d}]")
    if not np.allclose(M, M.T, atol=SYM_TOL * max(1.0, np.abs(M).max()), rtol=0.0):
        raise DegenerateInput("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    vecs = _fix_signs(vecs[:, :k])
    return vals[:k].copy(), OrthonormalBasis(vecs.T.copy(), d)


def all_eigenpairs(M) -> tuple[np.ndarray, np.ndarray]:
    """Full ascending spectrum; eigenvectors as columns, signs normalized."""
    M = np.asarray(M, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    return vals, _fix_signs(vecs)


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def rotate_towards(w, angle_rad: float, rng: np.random.Generator) -> np.ndarray:
    """Unit vector at exactly ``angle_rad`` from unit ``w`` in a random orthogonal direction."""
    w = np.asarray(w, dtype=float)
    w = w / np.linalg.norm(w)
    z = rng.standard_normal(w.shape[0])
    z -= (z @ w) * w
    z /= np.linalg.norm(z)
    return np.cos(angle_rad) * w + np.sin(angle_rad) * z
