"""Adversarial test distributions: relocated-mass 1-D laws, exact moment matching, hidden-direction embeddings.

A one-dimensional law that agrees with N(0, 1) on its low-degree moments,
placed along a hidden direction ``v`` and completed with an independent
Gaussian on the orthogonal complement, is invisible to low-degree moment
tests while it can hide mass in regions the Gaussian almost never visits.
The scenarios at the bottom bundle such laws with ground-truth concepts for
end-to-end soundness experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import hermite_e
from scipy import optimize

from .concepts import HalfspaceIntersection, random_balanced_intersection
from .errors import DegenerateInput, GenerationFailed, Infeasible
from .gaussian import (SeededSampler, as_sampler, gaussian_moment_1d, sample_gaussian, std_normal_cdf,
                       std_normal_pdf, std_normal_ppf)
from .linalg import complete_basis, orthonormalize, random_unit_vector

SUM_TOL = 1e-12
MOMENT_VERIFY_TOL = 1e-8


# --------------------------------------------------------------------------
# Finite one-dimensional laws
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Discrete1D:
    """Probability vector on a strictly increasing finite support."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.support, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if x.size == 0 or x.shape != w.shape:
            raise DegenerateInput("support and weights must be nonempty and of equal length")
        if np.any(np.diff(x) <= 0):
            raise DegenerateInput("support must be strictly increasing")
        if np.any(w < 0) or abs(w.sum() - 1.0) > SUM_TOL:
            raise DegenerateInput("weights must be nonnegative and sum to 1")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", x)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_points(cls, points, weights=None) -> "Discrete1D":
        """Merge repeated points; ``weights`` default to uniform and are renormalized."""
        pts = np.asarray(points, dtype=float).reshape(-1)
        w = np.full(pts.shape, 1.0 / pts.size) if weights is None else np.asarray(weights, dtype=float)
        uniq, inv = np.unique(pts, return_inverse=True)
        merged = np.bincount(inv, weights=w, minlength=uniq.size)
        return cls(uniq, merged / merged.sum())

    def __len__(self) -> int:
        return self.support.shape[0]

    def moment(self, i: int) -> float:
        return float(self.weights @ self.support ** i)

    def moment_errors(self, degree: int) -> np.ndarray:
        """``|E[x^i] - E_N[x^i]|`` for ``i = 0..degree``."""
        return np.array([abs(self.moment(i) - gaussian_moment_1d(i)) for i in range(degree + 1)])

    def tail_mass(self, t: float) -> float:
        return float(self.weights[self.support >= t].sum())

    def sample(self, n: int, s: SeededSampler) -> np.ndarray:
        rng = as_sampler(s).rng()
        return self.support[rng.choice(len(self), size=int(n), p=self.weights)]

    def to_record(self) -> dict:
        return {"support": self.support.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_record(cls, rec: dict) -> "Discrete1D":
        return cls(np.asarray(rec["support"]), np.asarray(rec["weights"]))


def gauss_hermite_1d(n_nodes: int) -> Discrete1D:
    """``n_nodes``-point Gauss quadrature for N(0, 1); exact for polynomials of degree < 2 n_nodes."""
    x, w = hermite_e.hermegauss(n_nodes)
    return Discrete1D(x, w / w.sum())


def perturbed_quadrature(n_nodes: int, s: SeededSampler, node_noise: float = 1e-4,
                         weight_noise: float = 1e-6) -> Discrete1D:
    """Gauss quadrature with uniform jitter on nodes and relative jitter on weights."""
    base = gauss_hermite_1d(n_nodes)
    rng = as_sampler(s).rng()
    x = base.support + rng.uniform(-node_noise, node_noise, n_nodes)
    w = base.weights * (1.0 + rng.uniform(-weight_noise, weight_noise, n_nodes))
    order = np.argsort(x)
    return Discrete1D(x[order], w[order] / w.sum())


# --------------------------------------------------------------------------
# Relocated-mass construction
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MassRelocated:
    """Gaussian with the mass of ``[0, tau]`` moved to the single point ``t``.

    ``t = ln(1/eps)`` and ``Phi(tau) - 1/2 = 13 eps``.  ``k0`` is the integer
    part of ``ln(1/eps) / (100 ln ln(1/eps))``, which is 0 for every ``eps``
    of practical size; ``k0_raw`` keeps the real value.
    """

    eps: float
    t: float
    tau: float
    k0_raw: float

    @property
    def k0(self) -> int:
        return int(math.floor(self.k0_raw))

    @property
    def relocated_mass(self) -> float:
        return std_normal_cdf(self.tau) - 0.5

    def tail_mass(self) -> float:
        """``Pr[z >= t]`` in closed form."""
        return self.relocated_mass + 1.0 - std_normal_cdf(max(self.t, self.tau))

    def sample(self, n: int, s: SeededSampler) -> np.ndarray:
        x = as_sampler(s).rng().standard_normal(int(n))
        return np.where((x >= 0.0) & (x <= self.tau), self.t, x)

    def __call__(self, n: int, s: SeededSampler) -> np.ndarray:
        return self.sample(n, s)

    def moment(self, i: int) -> float:
        """Exact ``E[z^i]``: the Gaussian moment minus ``int_0^tau x^i phi`` plus ``t^i`` times the moved mass."""
        return gaussian_moment_1d(i) - _partial_moment(i, self.tau) + self.t ** i * self.relocated_mass

    def moment_perturbation_bound(self) -> float:
        return self.t ** self.k0_raw * 13.0 * self.eps


def _partial_moment(i: int, tau: float) -> float:
    """``int_0^tau x^i phi(x) dx`` by the recursion ``I_i = -tau^(i-1) phi(tau) + (i-1) I_(i-2)``."""
    i0 = std_normal_cdf(tau) - 0.5
    i1 = std_normal_pdf(0.0) - std_normal_pdf(tau)
    if i == 0:
        return i0
    if i == 1:
        return i1
    prev2, prev1 = i0, i1
    for j in range(2, i + 1):
        cur = -tau ** (j - 1) * std_normal_pdf(tau) + (j - 1) * prev2
        prev2, prev1 = prev1, cur
    return prev1


def build_mass_relocated_1d(eps: float) -> MassRelocated:
    if not 0.0 < eps < 1.0 / 26.0:
        raise DegenerateInput(f"eps={eps} must lie in (0, 1/26) so that tau exists")
    t = math.log(1.0 / eps)
    tau = std_normal_ppf(0.5 + 13.0 * eps)
    k0 = t / (100.0 * math.log(t)) if t > 1.0 else 0.0
    return MassRelocated(float(eps), t, tau, k0)


def discretize_1d(sampler: Callable[[int, SeededSampler], np.ndarray], K: int, s: SeededSampler,
                  accept: Callable[[Discrete1D], bool] | None = None, K_cap: int | None = None,
                  growth: int = 4) -> Discrete1D:
    """Empirical law of ``K`` draws, merged on repeated values.

    When ``accept`` rejects the result, ``K`` grows by ``growth`` (fresh
    stream per attempt) until it passes ``K_cap``.
    """
    if K < 1:
        raise DegenerateInput("K >= 1 required")
    s = as_sampler(s)
    cap = K if K_cap is None else max(K, K_cap)
    attempt = 0
    while True:
        dist = Discrete1D.from_points(sampler(K, s.child(attempt)))
        if accept is None or accept(dist):
            return dist
        attempt += 1
        K *= growth
        if K > cap:
            raise GenerationFailed(f"discretization did not pass its check up to K={cap}")


@dataclass(frozen=True)
class HardInstance1D:
    dist: Discrete1D
    t: float
    eps: float
    k0: int
    tail_mass: float
    max_moment_error: float
    matched_degree: int = 0

    def to_record(self) -> dict:
        return {"dist": self.dist.to_record(), "t": self.t, "eps": self.eps, "k0": self.k0,
                "tail_mass": self.tail_mass, "max_moment_error": self.max_moment_error,
                "matched_degree": self.matched_degree}


def build_hard_instance_1d(eps: float, K: int, s: SeededSampler, K_cap: int | None = None) -> HardInstance1D:
    """Discretized relocated-mass law whose tail beyond ``t`` keeps at least ``12 eps``."""
    mr = build_mass_relocated_1d(eps)
    dist = discretize_1d(mr, K, s, accept=lambda D: D.tail_mass(mr.t) >= 12.0 * eps, K_cap=K_cap)
    degree = int(math.floor(10 * mr.k0_raw))
    err = float(dist.moment_errors(degree).max())
    return HardInstance1D(dist, mr.t, float(eps), mr.k0, dist.tail_mass(mr.t), err, degree)


# --------------------------------------------------------------------------
# Exact moment matching by linear programming
# --------------------------------------------------------------------------


def _hermite_rows(x: np.ndarray, degree: int) -> np.ndarray:
    """Rows ``He_i(x) / sqrt(i!)`` for ``i = 0..degree``; orthonormal under N(0, 1)."""
    rows = np.empty((degree + 1, x.shape[0]))
    for i in range(degree + 1):
        c = np.zeros(i + 1)
        c[i] = 1.0
        rows[i] = hermite_e.hermeval(x, c) / math.sqrt(math.factorial(i))
    return rows


@dataclass(frozen=True)
class MomentMatchResult:
    dist: Discrete1D
    mu: np.ndarray
    moment_errors: np.ndarray


def exact_moment_match_lp(D0: Discrete1D, degree: int, floor: float = 0.9,
                          l1_max_support: int = 20_000) -> Discrete1D:
    """Reweight ``D0`` by factors ``mu_x >= floor`` so that moments ``0..degree`` equal the Gaussian ones."""
    return exact_moment_match_lp_full(D0, degree, floor, l1_max_support).dist


def exact_moment_match_lp_full(D0: Discrete1D, degree: int, floor: float = 0.9,
                               l1_max_support: int = 20_000) -> MomentMatchResult:
    """LP ``E_D0[mu p] = E_N[p]`` for all ``p`` of degree <= ``degree``, ``mu >= floor``.

    Constraints are written in the orthonormal Hermite basis, where the
    Gaussian right-hand side is ``(1, 0, ..., 0)``.  The degree-0 row forces
    total mass 1.  For supports up to ``l1_max_support`` points the objective
    keeps ``mu`` close to 1 in weighted L1, otherwise any feasible point is
    accepted.  The solution is polished by a least-squares correction (kept
    only if it respects the floor) and its monomial moments are re-verified.
    """
    if degree < 0:
        raise DegenerateInput("degree >= 0 required")
    x, w0 = D0.support, D0.weights
    K = x.shape[0]
    A = _hermite_rows(x, degree) * w0
    b = np.zeros(degree + 1)
    b[0] = 1.0
    if K <= l1_max_support:
        # variables (mu, s): minimize sum w0 s, s >= |mu - 1|
        from scipy import sparse
        eye = sparse.identity(K, format="csr")
        c = np.concatenate([np.zeros(K), w0])
        A_eq = sparse.hstack([sparse.csr_matrix(A), sparse.csr_matrix((degree + 1, K))])
        A_ub = sparse.vstack([sparse.hstack([eye, -eye]), sparse.hstack([-eye, -eye])])
        b_ub = np.concatenate([np.ones(K), -np.ones(K)])
        bounds = [(floor, None)] * K + [(0, None)] * K
        res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b, bounds=bounds, method="highs")
    else:
        res = optimize.linprog(np.zeros(K), A_eq=A, b_eq=b, bounds=[(floor, None)] * K, method="highs")
    if res.status == 2:
        raise Infeasible(f"no reweighting with mu >= {floor} matches degree {degree}",
                         certificate=_farkas_certificate(A, b, floor))
    if res.status != 0:
        raise Infeasible(f"solver stopped with status {res.status}: {res.message}")
    mu = np.asarray(res.x[:K], dtype=float)
    mu = _polish(A, b, mu, floor)
    w1 = mu * w0
    errs = np.array([abs(w1 @ x ** i - gaussian_moment_1d(i)) for i in range(degree + 1)])
    if errs.max() > MOMENT_VERIFY_TOL or mu.min() < floor - 1e-9:
        raise Infeasible(f"solver output failed verification (moment error {errs.max():.2e}, "
                         f"min mu {mu.min():.6f})")
    # the total is 1 up to rounding; renormalize within the verified tolerance
    dist = Discrete1D(x, w1 / w1.sum())
    return MomentMatchResult(dist, mu, errs)


def _polish(A: np.ndarray, b: np.ndarray, mu: np.ndarray, floor: float) -> np.ndarray:
    for _ in range(3):
        r = b - A @ mu
        if np.abs(r).max() < 1e-15:
            break
        step, *_ = np.linalg.lstsq(A, r, rcond=None)
        cand = mu + step
        if cand.min() < floor:
            break
        mu = cand
    return mu


def _farkas_certificate(A: np.ndarray, b: np.ndarray, floor: float) -> str | None:
    """Describe a polynomial witnessing infeasibility, if the dual LP finds one.

    With ``mu = floor + nu``, ``nu >= 0``, infeasibility is certified by ``y``
    with ``A^T y >= 0`` and ``y . (b - floor A 1) < 0``; ``y`` are the
    coefficients of a polynomial in the orthonormal Hermite basis that is
    nonnegative on the support yet has negative Gaussian-minus-floor mass.
    """
    rhs = b - floor * A.sum(axis=1)
    m = A.shape[0]
    res = optimize.linprog(rhs, A_ub=-A.T, b_ub=np.zeros(A.shape[1]), bounds=[(-1, 1)] * m, method="highs")
    if res.status != 0 or res.fun >= -1e-12:
        return None
    coeffs = ", ".join(f"{v:.6g}" for v in res.x)
    return (f"polynomial sum_i y_i He_i/sqrt(i!) with y = [{coeffs}] is >= 0 on the support "
            f"but y . (b - floor * A 1) = {res.fun:.6g} < 0")


# --------------------------------------------------------------------------
# Hidden-direction embedding
# --------------------------------------------------------------------------


def embed_hidden_direction(dist, v, n: int, s: SeededSampler) -> np.ndarray:
    """``z v + g_perp`` with ``z ~ dist`` and ``g_perp`` standard Gaussian orthogonal to ``v``.

    ``dist`` is a :class:`Discrete1D` or any callable ``(n, sampler) -> z``.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise DegenerateInput("v must be a unit vector")
    s = as_sampler(s)
    z = dist.sample(n, s.child(0)) if isinstance(dist, Discrete1D) else np.asarray(dist(n, s.child(0)))
    g = sample_gaussian(v.shape[0], n, s.child(1))
    g -= np.outer(g @ v, v)
    return g + np.outer(z, v)


@dataclass(frozen=True)
class EmbeddedDistribution:
    one_d: Discrete1D
    direction: np.ndarray
    d: int

    def sample(self, n: int, s: SeededSampler) -> np.ndarray:
        return embed_hidden_direction(self.one_d, self.direction, n, s)

    def quadrature(self, q: int) -> tuple[np.ndarray, np.ndarray]:
        """Weighted points reproducing every population moment of degree < 2q exactly.

        Product of the 1-D law along ``v`` with a ``q``-point Gauss rule on
        each orthogonal coordinate.
        """
        basis = complete_basis(orthonormalize(self.direction.reshape(1, -1), dim=self.d), self.d).vectors
        gh = gauss_hermite_1d(q)
        grids = np.meshgrid(*([gh.support] * (self.d - 1)), indexing="ij")
        wgrids = np.meshgrid(*([gh.weights] * (self.d - 1)), indexing="ij")
        perp = np.stack([g.reshape(-1) for g in grids], axis=1) if self.d > 1 else np.zeros((1, 0))
        wperp = np.prod(np.stack([g.reshape(-1) for g in wgrids], axis=1), axis=1) if self.d > 1 else np.ones(1)
        z = self.one_d.support
        pts = (z[:, None, None] * basis[0][None, None, :]
               + (perp @ basis[1:])[None, :, :]).reshape(-1, self.d)
        wts = (self.one_d.weights[:, None] * wperp[None, :]).reshape(-1)
        return pts, wts


# --------------------------------------------------------------------------
# Scenarios
# --------------------------------------------------------------------------

SCENARIO_KINDS = ("null-shift", "mean-shift", "cov-inflation", "subspace-concentration",
                  "ngca-embedded", "biased-halfspace")


@dataclass
class ScenarioInstance:
    concept: HalfspaceIntersection
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    X_holdout: np.ndarray
    y_holdout: np.ndarray
    extras: dict = field(default_factory=dict)


@dataclass
class Scenario:
    """Ground truth, training labels and test-distribution sampler for one experiment kind.

    Streams per seed: 0 concept, 1 train, 2 test, 3 holdout, 4 scenario
    internals (hidden directions, hard-instance construction).
    """

    kind: str
    d: int
    k: int
    params: dict

    def concept(self, seed: int) -> HalfspaceIntersection:
        s = SeededSampler(seed, (0,))
        if self.kind == "biased-halfspace":
            v = self._direction(seed)
            t = math.log(1.0 / self.params["eps"])
            return HalfspaceIntersection(v.reshape(1, -1), np.array([-t]), self.d)
        return random_balanced_intersection(self.d, self.k, self.params.get("eta_min", 0.15), s,
                                            homogeneous=self.params.get("homogeneous", True),
                                            threshold_range=self.params.get("threshold_range", 1.0))

    def _direction(self, seed: int, concept: HalfspaceIntersection | None = None) -> np.ndarray:
        if concept is not None and self.params.get("direction", "random") == "normal":
            return concept.normals[0].copy()
        return random_unit_vector(self.d, SeededSampler(seed, (4, 0)).rng())

    def train(self, c: HalfspaceIntersection, m: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
        X = sample_gaussian(self.d, m, SeededSampler(seed, (1,)))
        if self.kind == "biased-halfspace":
            return X, -np.ones(m, dtype=int)
        return X, c(X)

    def test_sampler(self, c: HalfspaceIntersection, seed: int) -> Callable[[int, SeededSampler], np.ndarray]:
        kind, d, p = self.kind, self.d, self.params
        if kind == "null-shift":
            return lambda n, s: sample_gaussian(d, n, s)
        if kind == "mean-shift":
            shift = np.zeros(d)
            shift[0] = p.get("shift", 1.0)
            return lambda n, s: sample_gaussian(d, n, s) + shift
        if kind == "cov-inflation":
            scale = math.sqrt(p.get("cov_factor", 4.0))
            return lambda n, s: scale * sample_gaussian(d, n, s)
        if kind == "subspace-concentration":
            eps = p.get("eps", 0.1)
            v = self._direction(seed, c)

            def sample(n, s):
                s = as_sampler(s)
                X = sample_gaussian(d, n, s.child(0))
                on = s.child(1).rng().random(n) < eps
                X[on] -= np.outer(X[on] @ v, v)
                return X
            return sample
        if kind == "ngca-embedded":
            emb = self.ngca_distribution(seed, c)
            return emb.sample
        if kind == "biased-halfspace":
            eps = p["eps"]
            v = self._direction(seed)
            hard = build_hard_instance_1d(eps, p.get("K", 100_000), SeededSampler(seed, (4, 1)))
            t = hard.t
            beyond = hard.dist.support >= t
            tail = Discrete1D.from_points(hard.dist.support[beyond], hard.dist.weights[beyond])
            frac = p.get("mixture", 10.0) * eps

            def sample(n, s):
                s = as_sampler(s)
                X = sample_gaussian(d, n, s.child(0))
                on = s.child(2).rng().random(n) < frac
                X[on] = embed_hidden_direction(tail, v, int(on.sum()), s.child(1))
                return X
            return sample
        raise DegenerateInput(f"unknown scenario kind {kind!r}")

    def ngca_distribution(self, seed: int, c: HalfspaceIntersection) -> EmbeddedDistribution:
        p = self.params
        D0 = perturbed_quadrature(p.get("nodes", 10), SeededSampler(seed, (4, 1)),
                                  p.get("node_noise", 1e-4), p.get("weight_noise", 1e-6))
        D1 = exact_moment_match_lp(D0, p.get("degree", 8))
        return EmbeddedDistribution(D1, self._direction(seed, c), self.d)

    def instance(self, seed: int, m_train: int, m_test: int, m_holdout: int) -> ScenarioInstance:
        c = self.concept(seed)
        X_train, y_train = self.train(c, m_train, seed)
        sampler = self.test_sampler(c, seed)
        X_test = sampler(m_test, SeededSampler(seed, (2,)))
        X_hold = sampler(m_holdout, SeededSampler(seed, (3,)))
        return ScenarioInstance(c, X_train, y_train, X_test, X_hold, c(X_hold))

    def holdout(self, seed: int, m_holdout: int) -> tuple[HalfspaceIntersection, np.ndarray, np.ndarray]:
        """Truth and held-out sample, regenerated without the training and test sets."""
        c = self.concept(seed)
        X_hold = self.test_sampler(c, seed)(m_holdout, SeededSampler(seed, (3,)))
        return c, X_hold, c(X_hold)

    def dichotomy_ok(self, accepted: bool, hypothesis: HalfspaceIntersection | None, X_test) -> bool | None:
        """Biased-halfspace contract: reject, or accept with positive test mass at most ``4 eps``."""
        if self.kind != "biased-halfspace":
            return None
        if not accepted:
            return True
        lam = float(np.mean(hypothesis(X_test) == 1))
        return lam <= 4.0 * self.params["eps"]

    def expected(self) -> str:
        return {"null-shift": "accept", "cov-inflation": "reject"}.get(self.kind, "any")


def make_scenario(kind: str, params: dict | None = None) -> Scenario:
    params = dict(params or {})
    if kind not in SCENARIO_KINDS:
        raise DegenerateInput(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")
    d = int(params.pop("d", 6))
    k = int(params.pop("k", 2))
    if d < 1 or k < 1 or k > d:
        raise DegenerateInput("need 1 <= k <= d")
    if kind == "biased-halfspace":
        eps = params.setdefault("eps", 0.02)
        if not 0.0 < eps < 1.0 / 26.0:
            raise DegenerateInput("biased-halfspace needs eps in (0, 1/26)")
        if params.get("mixture", 10.0) * eps > 1.0:
            raise DegenerateInput("mixture weight exceeds 1")
        k = 1
    if kind == "subspace-concentration":
        eps = params.setdefault("eps", 0.1)
        if not 0.0 < eps < 1.0:
            raise DegenerateInput("subspace-concentration needs eps in (0, 1)")
        if params.setdefault("direction", "normal") not in ("normal", "random"):
            raise DegenerateInput("direction must be 'normal' or 'random'")
    return Scenario(kind, d, k, params)


__all__ = [
    "Discrete1D",
    "MassRelocated",
    "HardInstance1D",
    "MomentMatchResult",
    "EmbeddedDistribution",
    "Scenario",
    "ScenarioInstance",
    "SCENARIO_KINDS",
    "gauss_hermite_1d",
    "perturbed_quadrature",
    "build_mass_relocated_1d",
    "build_hard_instance_1d",
    "discretize_1d",
    "exact_moment_match_lp",
    "exact_moment_match_lp_full",
    "embed_hidden_direction",
    "make_scenario",
]
