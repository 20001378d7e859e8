"""PCA subspace retrieval from the positive training examples."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, InsufficientData
from .linalg import OrthonormalBasis, empirical_mean_cov, smallest_k_eigenpairs


@dataclass(frozen=True)
class RetrievedSubspace:
    """The ``k`` smallest-variance principal directions of the positive examples.

    ``diagnostics["positive_rank"]`` records the numerical rank of the centered
    positives; when it is below ``d`` the null directions (eigenvalue 0) come
    first in the basis.
    """

    basis: OrthonormalBasis
    eigenvalues: np.ndarray
    n_positives: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def k(self) -> int:
        return self.basis.rank


def _split_train(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DegenerateInput("train must be an (n, d) array with n labels")
    if not np.all(np.isin(y, (-1, 1))):
        raise DegenerateInput("labels must be -1 or +1")
    return X, y


def retrieve_subspace_pca(X, y, k: int) -> RetrievedSubspace:
    """Eigenvectors of the centered covariance of ``{x : y = +1}`` with the k smallest eigenvalues."""
    X, y = _split_train(X, y)
    d = X.shape[1]
    if not 1 <= k <= d:
        raise DegenerateInput(f"k={k} outside [1, {d}]")
    pos = X[y == 1]
    n_pos = pos.shape[0]
    if n_pos < k + 1:
        raise InsufficientData(f"{n_pos} positive examples, need at least {k + 1}")
    _, cov = empirical_mean_cov(pos)
    vals, basis = smallest_k_eigenpairs(cov, k)
    scale = max(float(np.trace(cov)) / d, 1e-300)
    positive_rank = int(np.sum(np.linalg.eigvalsh(cov) > 1e-10 * scale))
    vals = np.maximum(vals, 0.0)
    diag = {"positive_rank": positive_rank, "padded": positive_rank < d}
    return RetrievedSubspace(basis, vals, int(n_pos), diag)
