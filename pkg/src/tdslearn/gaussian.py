"""Standard Gaussian oracles: CDF / inverse CDF, exact moments, seeded sampling.

Random streams use numpy's PCG64 bit generator keyed by
``SeedSequence(seed, spawn_key=stream)``; two samplers with the same
``(seed, stream)`` produce the same draws, and distinct streams are
statistically independent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import special

from .errors import BudgetExceeded, DegenerateInput, RegionTooThin

MULTI_INDEX_CAP = 10**6
PPF_TOL = 1e-12


@dataclass(frozen=True)
class SeededSampler:
    """Value object naming one reproducible random stream."""

    seed: int
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        stream = self.stream
        if isinstance(stream, int):
            stream = (stream,)
        object.__setattr__(self, "stream", tuple(int(s) for s in stream))
        object.__setattr__(self, "seed", int(self.seed))

    def rng(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys: int) -> "SeededSampler":
        return SeededSampler(self.seed, self.stream + tuple(keys))


def as_sampler(s: SeededSampler | int) -> SeededSampler:
    return s if isinstance(s, SeededSampler) else SeededSampler(int(s))


# --------------------------------------------------------------------------
# CDF and inverse CDF
# --------------------------------------------------------------------------


def std_normal_cdf(x):
    """Phi(x) evaluated through erfc, accurate in both tails."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(-x / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return float(out) if out.ndim == 0 else out


def std_normal_ppf(p: float, tol: float = PPF_TOL) -> float:
    """Inverse of ``std_normal_cdf``: Newton steps guarded by a bisection bracket."""
    if not 0.0 < p < 1.0:
        raise DegenerateInput(f"p={p} must lie in (0, 1)")
    lo, hi = -40.0, 40.0
    x = 0.0
    for _ in range(200):
        f = std_normal_cdf(x) - p
        if f > 0:
            hi = x
        else:
            lo = x
        dens = std_normal_pdf(x)
        step = f / dens if dens > 0 else np.inf
        x_new = x - step
        if not (lo < x_new < hi) or not np.isfinite(x_new):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol * max(1.0, abs(x)):
            return float(x_new)
        x = x_new
    return float(x)


# --------------------------------------------------------------------------
# Moments
# --------------------------------------------------------------------------


def gaussian_moment_1d(i: int) -> float:
    """E[x^i] for x ~ N(0, 1): zero for odd i, (i-1)!! for even i."""
    if i < 0:
        raise DegenerateInput("negative degree")
    if i % 2:
        return 0.0
    out = 1.0
    for j in range(i - 1, 0, -2):
        out *= j
    return out


def gaussian_moment_multi(alpha: Iterable[int]) -> float:
    """E[x^alpha] for x ~ N(0, I_d), a product of one-dimensional moments."""
    out = 1.0
    for a in alpha:
        out *= gaussian_moment_1d(int(a))
        if out == 0.0:
            return 0.0
    return out


def count_multi_indices(d: int, r: int) -> int:
    return math.comb(d + r, r)


def enumerate_multi_indices(d: int, r: int, cap: int = MULTI_INDEX_CAP) -> list[tuple[int, ...]]:
    """All alpha in N^d with |alpha|_1 <= r, ordered by degree then lexicographically.

    Within a degree, indices follow ``combinations_with_replacement`` of the
    coordinates, so (1, 0) precedes (0, 1).
    """
    if d < 1 or r < 0:
        raise DegenerateInput("need d >= 1 and r >= 0")
    count = count_multi_indices(d, r)
    if count > cap:
        raise BudgetExceeded(f"{count} multi-indices exceed cap {cap}", size=count, budget=cap)
    out = []
    for deg in range(r + 1):
        for combo in itertools.combinations_with_replacement(range(d), deg):
            alpha = [0] * d
            for c in combo:
                alpha[c] += 1
            out.append(tuple(alpha))
    return out


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------


def sample_gaussian(d: int, n: int, s: SeededSampler) -> np.ndarray:
    """``n`` i.i.d. draws from N(0, I_d), shape ``(n, d)``."""
    return as_sampler(s).rng().standard_normal((int(n), int(d)))


def sample_truncated_gaussian(region, n: int, s: SeededSampler, max_tries: int = 200,
                              min_mass: float = 1e-4, pilot: int = 20_000) -> np.ndarray:
    """Rejection sampler for N(0, I_d) conditioned on ``region.positive_mask(x)``.

    ``max_tries`` bounds the number of proposal rounds after the pilot.
    """
    rng = as_sampler(s).rng()
    d = region.d
    if getattr(region, "k", 1) == 0:
        return rng.standard_normal((n, d))
    probe = rng.standard_normal((pilot, d))
    keep = probe[region.positive_mask(probe)]
    mass = keep.shape[0] / pilot
    if mass < min_mass:
        raise RegionTooThin(f"pilot mass {mass:.2e} below {min_mass:.0e}")
    chunks = [keep]
    have = keep.shape[0]
    for _ in range(max_tries):
        if have >= n:
            break
        need = n - have
        batch = int(min(5_000_000, max(1000, 1.2 * need / mass + 100)))
        x = rng.standard_normal((batch, d))
        x = x[region.positive_mask(x)]
        chunks.append(x)
        have += x.shape[0]
    if have < n:
        raise RegionTooThin(f"only {have} of {n} samples after {max_tries} rounds")
    return np.concatenate(chunks)[:n]
