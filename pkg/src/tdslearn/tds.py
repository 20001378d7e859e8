"""End-to-end TDS learners for intersections of halfspaces.

Both learners see labeled Gaussian training data and an unlabeled test
sample, and either reject or return an intersection of at most ``k``
halfspaces.  Sub-tests run in a fixed order and the first failure ends the
run; diagnostics of every stage reached are kept on the outcome.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .concepts import HalfspaceIntersection
from .covers import (CANDIDATE_BUDGET, COVER_BUDGET, CandidateSet, build_candidate_set,
                     build_sphere_cover, build_threshold_grid)
from .errors import BudgetExceeded, ConfigError, DegenerateInput, EmptyCandidateSet, InsufficientData
from .retrieval import retrieve_subspace_pca
from .testers import (MomentTestParams, TestVerdict, band_masses, discrepancy_test, first_band_failure,
                      general_band, homogeneous_band, moment_test, spectral_test)

MODES = ("homogeneous", "general")
PARAMETER_MODES = ("theory", "practical")


@dataclass(frozen=True)
class TdsParams:
    """Learner parameters.

    In theory mode the derived quantities follow the closed forms
    ``eps1 = eps^(3/2) / (C k^(3/2))``, ``eps2 = eps^6 / (C' k^7)`` and, in
    general mode, ``T = 3 sqrt(ln(10k/eps))``, ``r = ceil(ln(10k/eps))``,
    ``delta_moment = d^(-r)``.  The guarantees need "large enough" constants;
    the defaults of 1 give the least conservative values.  In practical mode
    any field set explicitly overrides its closed form.  ``grid_step`` is the
    spacing of the threshold grid (defaults to ``eps1``) and ``delta`` is
    informational only.
    """

    eps: float
    k: int
    mode: str = "homogeneous"
    delta: float = 0.1
    C: float = 1.0
    C1: float = 1.0
    C2: float = 1.0
    parameter_mode: str = "practical"
    eps1: float | None = None
    eps2: float | None = None
    r: int | None = None
    delta_moment: float | None = None
    T: float | None = None
    grid_step: float | None = None
    moment_rule: str | None = None
    cover_budget: int = COVER_BUDGET
    candidate_budget: int = CANDIDATE_BUDGET

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ConfigError("learner.eps", f"{self.eps} outside (0, 1)")
        if self.k < 1:
            raise ConfigError("learner.k", "k >= 1 required")
        if self.mode not in MODES:
            raise ConfigError("learner.mode", f"{self.mode!r} not in {MODES}")
        if self.parameter_mode not in PARAMETER_MODES:
            raise ConfigError("learner.parameter_mode", f"{self.parameter_mode!r} not in {PARAMETER_MODES}")
        for name in ("C", "C1", "C2"):
            if getattr(self, name) < 1.0:
                raise ConfigError(f"learner.{name}", "constants must be >= 1")

    def resolve(self, d: int) -> "ResolvedParams":
        eps, k = self.eps, self.k
        theory = self.parameter_mode == "theory"
        eps1 = eps ** 1.5 / (self.C * k ** 1.5)
        eps2 = eps ** 6 / (self.C1 * k ** 7)
        L = math.log(10.0 * k / eps)
        T = 3.0 * math.sqrt(L)
        r = int(math.ceil(L))
        rule = "strict" if theory else "sampling-adjusted"
        if not theory:
            eps1 = self.eps1 if self.eps1 is not None else eps1
            eps2 = self.eps2 if self.eps2 is not None else eps2
            T = self.T if self.T is not None else T
            r = self.r if self.r is not None else r
            rule = self.moment_rule or rule
        delta_moment = float(d) ** (-r)
        if not theory and self.delta_moment is not None:
            delta_moment = self.delta_moment
        grid_step = eps1 if theory or self.grid_step is None else self.grid_step
        return ResolvedParams(eps=eps, k=k, mode=self.mode, eps1=eps1, eps2=eps2, T=T, r=r,
                              delta_moment=delta_moment, grid_step=grid_step, moment_rule=rule,
                              cover_budget=self.cover_budget, candidate_budget=self.candidate_budget)

    def to_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResolvedParams:
    eps: float
    k: int
    mode: str
    eps1: float
    eps2: float
    T: float
    r: int
    delta_moment: float
    grid_step: float
    moment_rule: str
    cover_budget: int
    candidate_budget: int


class RejectReason(str, enum.Enum):
    SPECTRAL_FAIL = "SpectralFail"
    BAND_FAIL = "BandFail"
    MOMENT_FAIL = "MomentFail"
    EMPTY_CANDIDATES = "EmptyCandidates"
    DISCREPANCY_FAIL = "DiscrepancyFail"
    BUDGET_EXCEEDED = "BudgetExceeded"


@dataclass
class TdsOutcome:
    """``Accept`` with a hypothesis, or ``Reject`` with a reason and its witness."""

    accepted: bool
    hypothesis: HalfspaceIntersection | None = None
    reason: RejectReason | None = None
    witness: Any = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "Accept" if self.accepted else "Reject"

    def to_record(self) -> dict:
        w = self.witness
        if isinstance(w, np.ndarray):
            w = w.tolist()
        elif isinstance(w, tuple):
            w = [v.tolist() if isinstance(v, np.ndarray) else v for v in w]
        return {
            "verdict": self.verdict,
            "reason": None if self.reason is None else self.reason.value,
            "witness": w,
            "hypothesis": None if self.hypothesis is None else self.hypothesis.to_record(),
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, TestVerdict):
        return obj.to_record()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _reject(reason: RejectReason, diag: dict, witness=None) -> TdsOutcome:
    return TdsOutcome(False, None, reason, witness, diag)


def _check_inputs(X_train, y_train, X_test) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X_train = np.asarray(X_train, dtype=float)
    y_train = np.asarray(y_train).reshape(-1)
    X_test = np.asarray(X_test, dtype=float)
    if X_train.ndim != 2 or X_test.ndim != 2 or X_train.shape[1] != X_test.shape[1]:
        raise DegenerateInput("train and test must be (n, d) arrays of the same dimension")
    if X_train.shape[0] == 0 or X_train.shape[0] != y_train.shape[0]:
        raise DegenerateInput("training set must be nonempty with one label per point")
    return X_train, y_train, X_test


def _constant_fallback(y_train, X_test, p: ResolvedParams, diag: dict) -> TdsOutcome:
    # too few positives to retrieve a subspace: only the constant +1 intersection remains
    err = float(np.mean(y_train != 1))
    diag["constant_candidate_error"] = err
    if err > p.eps / 5.0:
        return _reject(RejectReason.EMPTY_CANDIDATES, diag)
    sv = spectral_test(X_test)
    diag["spectral"] = sv
    if not sv.accepted:
        return _reject(RejectReason.SPECTRAL_FAIL, diag, sv.statistic)
    diag["n_candidates"] = 1
    return TdsOutcome(True, HalfspaceIntersection.constant(X_test.shape[1]), diagnostics=diag)


def _finish(F: CandidateSet, X_test, p: ResolvedParams, diag: dict) -> TdsOutcome:
    diag["n_candidates"] = len(F)
    diag["n_evaluated"] = F.n_evaluated
    diag["n_enumerable"] = F.n_enumerable
    dv = discrepancy_test(F, X_test, p.eps)
    diag["discrepancy"] = dv
    if not dv.accepted:
        return _reject(RejectReason.DISCREPANCY_FAIL, diag, dv.witness)
    best = int(np.argmin(F.train_errors))
    diag["train_error"] = float(F.train_errors[best])
    diag["chosen_index"] = best
    return TdsOutcome(True, F.member(best), diagnostics=diag)


def _retrieve_and_cover(X_train, y_train, p: ResolvedParams, diag: dict):
    ret = retrieve_subspace_pca(X_train, y_train, p.k)
    diag["retrieval"] = {"eigenvalues": ret.eigenvalues, "n_positives": ret.n_positives,
                         "basis": ret.basis.vectors, **ret.diagnostics}
    cover = build_sphere_cover(ret.basis, p.eps2, p.cover_budget)
    diag["cover_size"] = len(cover)
    diag["lattice_size"] = cover.lattice_size
    return ret, cover


def tds_learn_homogeneous(X_train, y_train, X_test, params: TdsParams) -> TdsOutcome:
    """Learner for homogeneous intersections.

    Retrieval, sphere cover, spectral test, band test at every cover point,
    candidate set with training error at most eps/5, discrepancy test at
    eps/2, then the minimum-training-error candidate (first in enumeration
    order on ties).
    """
    X_train, y_train, X_test = _check_inputs(X_train, y_train, X_test)
    if params.mode != "homogeneous":
        raise ConfigError("learner.mode", "tds_learn_homogeneous needs mode 'homogeneous'")
    p = params.resolve(X_train.shape[1])
    diag: dict = {"params": asdict(p), "m_train": X_train.shape[0], "m_test": X_test.shape[0]}
    try:
        _, cover = _retrieve_and_cover(X_train, y_train, p, diag)
    except InsufficientData:
        return _constant_fallback(y_train, X_test, p, diag)
    except BudgetExceeded as e:
        diag["budget"] = {"stage": "cover", "size": e.size, "budget": e.budget}
        return _reject(RejectReason.BUDGET_EXCEEDED, diag)

    sv = spectral_test(X_test)
    diag["spectral"] = sv
    if not sv.accepted:
        return _reject(RejectReason.SPECTRAL_FAIL, diag, sv.statistic)

    hw, thr = homogeneous_band(p.eps1)
    masses = band_masses(cover.points, [0.0], X_test, hw)
    diag["band"] = {"halfwidth": hw, "threshold": thr, "max_mass": float(masses.max())}
    fail = first_band_failure(masses, thr)
    if fail is not None:
        u = cover.points[fail[0]]
        diag["band"]["failed"] = TestVerdict.of(float(masses[fail]), thr, u)
        return _reject(RejectReason.BAND_FAIL, diag, (u, 0.0))

    try:
        F = build_candidate_set(cover, None, p.k, X_train, y_train, p.eps / 5.0, p.candidate_budget)
    except EmptyCandidateSet:
        return _reject(RejectReason.EMPTY_CANDIDATES, diag)
    except BudgetExceeded as e:
        diag["budget"] = {"stage": "candidates", "size": e.size, "budget": e.budget}
        return _reject(RejectReason.BUDGET_EXCEEDED, diag)
    return _finish(F, X_test, p, diag)


def tds_learn_general(X_train, y_train, X_test, params: TdsParams) -> TdsOutcome:
    """Learner for general intersections.

    Moment test first, then retrieval, cover times threshold grid, spectral
    test, general band test at every (direction, threshold) pair, candidate
    set, discrepancy test and minimum-training-error output.
    """
    X_train, y_train, X_test = _check_inputs(X_train, y_train, X_test)
    if params.mode != "general":
        raise ConfigError("learner.mode", "tds_learn_general needs mode 'general'")
    d = X_train.shape[1]
    p = params.resolve(d)
    diag: dict = {"params": asdict(p), "m_train": X_train.shape[0], "m_test": X_test.shape[0]}

    try:
        mv = moment_test(X_test, MomentTestParams(p.r, p.delta_moment, p.moment_rule))
    except BudgetExceeded as e:
        diag["budget"] = {"stage": "moments", "size": e.size, "budget": e.budget}
        return _reject(RejectReason.BUDGET_EXCEEDED, diag)
    diag["moment"] = mv
    if not mv.accepted:
        return _reject(RejectReason.MOMENT_FAIL, diag, mv.witness)

    try:
        _, cover = _retrieve_and_cover(X_train, y_train, p, diag)
    except InsufficientData:
        return _constant_fallback(y_train, X_test, p, diag)
    except BudgetExceeded as e:
        diag["budget"] = {"stage": "cover", "size": e.size, "budget": e.budget}
        return _reject(RejectReason.BUDGET_EXCEEDED, diag)
    grid = build_threshold_grid(p.grid_step, p.T)
    diag["grid_size"] = len(grid)

    sv = spectral_test(X_test)
    diag["spectral"] = sv
    if not sv.accepted:
        return _reject(RejectReason.SPECTRAL_FAIL, diag, sv.statistic)

    gamma, thr = general_band(p.eps1, p.T)
    masses = band_masses(cover.points, grid.values, X_test, gamma)
    diag["band"] = {"halfwidth": gamma, "threshold": thr, "max_mass": float(masses.max())}
    fail = first_band_failure(masses, thr)
    if fail is not None:
        u, theta = cover.points[fail[0]], float(grid.values[fail[1]])
        diag["band"]["failed"] = TestVerdict.of(float(masses[fail]), thr, (u, theta))
        return _reject(RejectReason.BAND_FAIL, diag, (u, theta))

    try:
        F = build_candidate_set(cover, grid, p.k, X_train, y_train, p.eps / 5.0, p.candidate_budget)
    except EmptyCandidateSet:
        return _reject(RejectReason.EMPTY_CANDIDATES, diag)
    except BudgetExceeded as e:
        diag["budget"] = {"stage": "candidates", "size": e.size, "budget": e.budget}
        return _reject(RejectReason.BUDGET_EXCEEDED, diag)
    return _finish(F, X_test, p, diag)


def tds_learn(X_train, y_train, X_test, params: TdsParams) -> TdsOutcome:
    if params.mode == "homogeneous":
        return tds_learn_homogeneous(X_train, y_train, X_test, params)
    return tds_learn_general(X_train, y_train, X_test, params)


__all__ = [
    "TdsParams",
    "ResolvedParams",
    "RejectReason",
    "TdsOutcome",
    "tds_learn",
    "tds_learn_homogeneous",
    "tds_learn_general",
]
