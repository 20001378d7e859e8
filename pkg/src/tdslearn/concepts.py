"""Ground-truth concepts: intersections of halfspaces and their Monte Carlo diagnostics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, GenerationFailed, RegionTooThin
from .gaussian import SeededSampler, as_sampler, sample_gaussian, sample_truncated_gaussian
from .linalg import UNIT_TOL, orthonormalize


@dataclass(frozen=True)
class HalfspaceIntersection:
    """``x -> +1`` iff ``normals[i] . x + thresholds[i] >= 0`` for every i.

    With ``k == 0`` the concept is the constant +1 function on R^d.
    """

    normals: np.ndarray
    thresholds: np.ndarray
    d: int

    def __init__(self, normals, thresholds=None, d: int | None = None):
        normals = np.asarray(normals, dtype=float)
        if normals.size == 0:
            if d is None:
                d = normals.shape[-1] if normals.ndim == 2 else None
            if not d:
                raise DegenerateInput("dimension required for an empty intersection")
            normals = normals.reshape(0, d)
        elif normals.ndim == 1:
            normals = normals.reshape(1, -1)
        if d is None:
            d = normals.shape[1]
        if normals.shape[1] != d:
            raise DegenerateInput("normals do not match dimension d")
        k = normals.shape[0]
        thresholds = np.zeros(k) if thresholds is None else np.asarray(thresholds, dtype=float).reshape(-1)
        if thresholds.shape[0] != k:
            raise DegenerateInput("one threshold per normal required")
        if k and np.max(np.abs(np.linalg.norm(normals, axis=1) - 1.0)) > UNIT_TOL:
            raise DegenerateInput("normals must be unit vectors")
        normals = normals.copy()
        thresholds = thresholds.copy()
        normals.setflags(write=False)
        thresholds.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "d", int(d))

    @classmethod
    def constant(cls, d: int) -> "HalfspaceIntersection":
        return cls(np.zeros((0, d)), np.zeros(0), d)

    @property
    def k(self) -> int:
        return self.normals.shape[0]

    @property
    def is_homogeneous(self) -> bool:
        return bool(np.all(self.thresholds == 0.0))

    def positive_mask(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.d:
            raise DegenerateInput(f"points have dimension {X.shape[1]}, concept has {self.d}")
        if self.k == 0:
            return np.ones(X.shape[0], dtype=bool)
        return np.all(X @ self.normals.T + self.thresholds >= 0.0, axis=1)

    def __call__(self, X) -> np.ndarray:
        return np.where(self.positive_mask(X), 1, -1)

    def to_record(self) -> dict:
        return {
            "k": self.k,
            "d": self.d,
            "normals": [float(v) for v in self.normals.reshape(-1)],
            "thresholds": [float(t) for t in self.thresholds],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "HalfspaceIntersection":
        k, d = int(rec["k"]), int(rec["d"])
        normals = np.asarray(rec["normals"], dtype=float).reshape(k, d)
        return cls(normals, np.asarray(rec["thresholds"], dtype=float), d)

    def __eq__(self, other):
        if not isinstance(other, HalfspaceIntersection):
            return NotImplemented
        return (self.d == other.d and np.array_equal(self.normals, other.normals)
                and np.array_equal(self.thresholds, other.thresholds))

    def __hash__(self):
        return hash((self.d, self.normals.tobytes(), self.thresholds.tobytes()))


def label(c: HalfspaceIntersection, x) -> int:
    """Label of a single point in {-1, +1}."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != c.d:
        raise DegenerateInput("point dimension does not match concept")
    return int(c(x)[0])


@dataclass(frozen=True)
class BalanceReport:
    eta_hat: float
    n_used: int
    eta_target: float = 0.0

    @property
    def stderr(self) -> float:
        return math.sqrt(max(self.eta_hat * (1 - self.eta_hat), 1e-300) / self.n_used)

    @property
    def balanced(self) -> bool:
        return self.eta_target <= self.eta_hat <= 1.0 - self.eta_target


def estimate_balance(c: HalfspaceIntersection, n: int, s: SeededSampler,
                     eta_target: float = 0.0) -> BalanceReport:
    """Fraction of positive labels over ``n`` fresh standard Gaussian points."""
    if n < 100:
        raise DegenerateInput("estimate_balance needs n >= 100")
    X = sample_gaussian(c.d, n, s)
    return BalanceReport(float(c.positive_mask(X).mean()), int(n), float(eta_target))


@dataclass
class NonDegeneracyReport:
    """Monte Carlo estimate of the smallest admissible non-degeneracy exponent.

    ``beta_hat`` is ``None`` when some residual direction shows no variance
    reduction distinguishable from Monte Carlo noise (reported as infeasible).
    """

    beta_hat: float | None
    n_mc: int
    noise_floor: float
    pairs: list[dict] = field(default_factory=list)

    @property
    def infeasible(self) -> bool:
        return self.beta_hat is None


def _variance_with_stderr(z: np.ndarray) -> tuple[float, float]:
    zc = z - z.mean()
    sq = zc * zc
    var = float(sq.mean())
    se = float(sq.std() / math.sqrt(z.shape[0]))
    return var, se


def check_non_degeneracy(c: HalfspaceIntersection, n_mc: int, s: SeededSampler,
                         noise_sigmas: float = 3.0) -> NonDegeneracyReport:
    """Estimate beta for the non-degeneracy condition by Monte Carlo.

    For every subset W of the normals and every normal w with nonzero
    residual w' off span(W), compares the variance reduction along w'/|w'|
    with the reduction along w under the Gaussian truncated to the positive
    region. The smallest admissible exponent is the largest
    ``log(red(w')) / log(red(w))``, floored at 1. This estimator is a
    Monte Carlo construction, not a certificate.
    """
    if c.k > 4:
        raise DegenerateInput("subset enumeration limited to k <= 4")
    if c.k <= 1:
        return NonDegeneracyReport(1.0, n_mc, 0.0, [])
    X = sample_truncated_gaussian(c, n_mc, s, min_mass=1e-3)
    normals = c.normals
    worst = 1.0
    infeasible = False
    floor_used = 0.0
    pairs = []
    for size in range(0, c.k):
        for subset in itertools.combinations(range(c.k), size):
            W = orthonormalize(normals[list(subset)], dim=c.d) if subset else None
            for i in range(c.k):
                if i in subset:
                    continue
                w = normals[i]
                resid = w - W.project(w) if W is not None else w.copy()
                nr = np.linalg.norm(resid)
                if nr < 1e-8:
                    continue
                wp = resid / nr
                var_wp, se_wp = _variance_with_stderr(X @ wp)
                var_w, se_w = _variance_with_stderr(X @ w)
                lhs, rhs = 1.0 - var_wp, 1.0 - var_w
                floor = noise_sigmas * se_wp
                floor_used = max(floor_used, floor)
                entry = {"subset": list(subset), "normal": i, "lhs": lhs, "rhs_base": rhs,
                         "stderr_lhs": se_wp, "stderr_rhs": se_w}
                if lhs <= floor:
                    infeasible = True
                    entry["ratio"] = None
                elif 0.0 < rhs < 1.0 and lhs < 1.0:
                    ratio = math.log(lhs) / math.log(rhs)
                    entry["ratio"] = ratio
                    worst = max(worst, ratio)
                else:
                    entry["ratio"] = None
                pairs.append(entry)
    return NonDegeneracyReport(None if infeasible else worst, n_mc, floor_used, pairs)


def random_balanced_intersection(d: int, k: int, eta_min: float, s: SeededSampler,
                                 max_tries: int = 200, homogeneous: bool = True,
                                 threshold_range: float = 1.0,
                                 n_balance: int = 20_000) -> HalfspaceIntersection:
    """Random intersection whose estimated positive mass lies in [eta_min, 1 - eta_min].

    Normals are uniform on the sphere; in general mode thresholds are uniform
    in ``[-threshold_range, threshold_range]``.
    """
    if k < 1:
        raise DegenerateInput("k >= 1 required")
    s = as_sampler(s)
    rng = s.rng()
    for attempt in range(max_tries):
        W = rng.standard_normal((k, d))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        tau = np.zeros(k) if homogeneous else rng.uniform(-threshold_range, threshold_range, k)
        c = HalfspaceIntersection(W, tau, d)
        rep = estimate_balance(c, n_balance, s.child(1, attempt), eta_target=eta_min)
        if rep.balanced:
            return c
    raise GenerationFailed(f"no {eta_min}-balanced intersection of {k} halfspaces in {max_tries} tries")


__all__ = [
    "HalfspaceIntersection",
    "BalanceReport",
    "NonDegeneracyReport",
    "label",
    "estimate_balance",
    "check_non_degeneracy",
    "random_balanced_intersection",
    "RegionTooThin",
]
