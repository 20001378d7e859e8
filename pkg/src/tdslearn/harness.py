"""Config-driven experiment runner and record verifier.

Config schema (JSON, ``version`` 1)::

    {"version": 1,
     "name": "null-shift-homogeneous",
     "scenario": {"kind": "null-shift", "params": {"d": 6, "k": 2, "eta_min": 0.15}},
     "learner": {"mode": "homogeneous", "eps": 0.25, "parameter_mode": "practical",
                 "overrides": {"eps1": 0.001, "eps2": 0.15}},
     "samples": {"m_train": 50000, "m_test": 50000, "m_holdout": 10000},
     "seeds": [0, 1, 2]}

Records file (JSON lines): one ``header`` line holding the config, one
``record`` line per seed, one ``summary`` line.  A flat CSV with one row per
record is written next to it.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .concepts import HalfspaceIntersection
from .errors import ConfigError, TdsError
from .gaussian import SeededSampler
from .hard_instances import SCENARIO_KINDS, Scenario, make_scenario
from .tds import TdsParams, tds_learn

SCHEMA_VERSION = 1
LEARNER_KEYS = {"mode", "eps", "k", "parameter_mode", "delta", "C", "C1", "C2", "overrides"}
OVERRIDE_KEYS = {"eps1", "eps2", "r", "delta_moment", "T", "grid_step", "moment_rule",
                 "cover_budget", "candidate_budget"}
SAMPLE_KEYS = ("m_train", "m_test", "m_holdout")
TIMING_FIELDS = ("wall_time",)
RECOMPUTE_TOL = 1e-12
CSV_FIELDS = ("config", "kind", "seed", "verdict", "reason", "holdout_error", "bound",
              "soundness_ok", "dichotomy_ok", "positive_mass_test", "wall_time", "error")


@dataclass(frozen=True)
class RunConfig:
    name: str
    kind: str
    scenario_params: dict
    learner: TdsParams
    m_train: int
    m_test: int
    m_holdout: int
    seeds: tuple[int, ...]
    raw: dict = field(compare=False, repr=False)

    def scenario(self) -> Scenario:
        return make_scenario(self.kind, self.scenario_params)

    def with_seeds(self, seeds) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw["seeds"] = list(seeds)
        return parse_config(raw)


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise ConfigError(path, msg)


def _int_field(obj: dict, key: str, path: str, minimum: int = 1) -> int:
    v = obj.get(key)
    _require(isinstance(v, int) and not isinstance(v, bool), path, "integer required")
    _require(v >= minimum, path, f"must be >= {minimum}")
    return v


def parse_config(raw: dict) -> RunConfig:
    """Validate a config mapping; errors name the offending field."""
    _require(isinstance(raw, dict), "", "config must be an object")
    _require(raw.get("version") == SCHEMA_VERSION, "version", f"expected {SCHEMA_VERSION}")
    sc = raw.get("scenario")
    _require(isinstance(sc, dict), "scenario", "object required")
    kind = sc.get("kind")
    _require(kind in SCENARIO_KINDS, "scenario.kind", f"{kind!r} not in {SCENARIO_KINDS}")
    sparams = sc.get("params", {})
    _require(isinstance(sparams, dict), "scenario.params", "object required")
    try:
        scenario = make_scenario(kind, sparams)
    except TdsError as exc:
        raise ConfigError("scenario.params", str(exc)) from exc

    ln = raw.get("learner")
    _require(isinstance(ln, dict), "learner", "object required")
    unknown = set(ln) - LEARNER_KEYS
    _require(not unknown, f"learner.{min(unknown) if unknown else ''}", "unknown field")
    overrides = ln.get("overrides", {})
    _require(isinstance(overrides, dict), "learner.overrides", "object required")
    unknown = set(overrides) - OVERRIDE_KEYS
    _require(not unknown, f"learner.overrides.{min(unknown) if unknown else ''}", "unknown field")
    _require(isinstance(ln.get("eps"), (int, float)), "learner.eps", "number required")
    kwargs = {key: ln[key] for key in ("mode", "parameter_mode", "delta", "C", "C1", "C2") if key in ln}
    kwargs.update(overrides)
    k = ln.get("k", scenario.k)
    _require(isinstance(k, int) and k >= 1, "learner.k", "positive integer required")
    try:
        params = TdsParams(eps=float(ln["eps"]), k=k, **kwargs)
    except TypeError as exc:
        raise ConfigError("learner", str(exc)) from exc
    try:
        params.resolve(scenario.d)
    except ConfigError:
        raise
    except TdsError as exc:
        raise ConfigError("learner.overrides", str(exc)) from exc

    smp = raw.get("samples")
    _require(isinstance(smp, dict), "samples", "object required")
    sizes = {key: _int_field(smp, key, f"samples.{key}") for key in SAMPLE_KEYS}

    seeds = raw.get("seeds")
    _require(isinstance(seeds, list) and len(seeds) > 0, "seeds", "nonempty list required")
    for i, sd in enumerate(seeds):
        _require(isinstance(sd, int) and not isinstance(sd, bool) and sd >= 0, f"seeds[{i}]",
                 "nonnegative integer required")
    _require(len(set(seeds)) == len(seeds), "seeds", "duplicate seeds")
    name = raw.get("name", kind)
    _require(isinstance(name, str) and name != "", "name", "nonempty string required")
    return RunConfig(name, kind, dict(sparams), params, sizes["m_train"], sizes["m_test"],
                     sizes["m_holdout"], tuple(seeds), copy.deepcopy(raw))


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError("", f"config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc
    return parse_config(raw)


# --------------------------------------------------------------------------
# Running
# --------------------------------------------------------------------------


def holdout_stderr(eps: float, m: int) -> float:
    """Binomial standard error of an error estimate at the target rate ``eps``."""
    return math.sqrt(eps * (1.0 - eps) / m)


def holdout_error(hypothesis: HalfspaceIntersection, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(hypothesis(X) != y))


def run_seed(cfg: RunConfig, seed: int) -> dict:
    """One record: generate, learn, and on Accept score the hypothesis on fresh test samples."""
    scenario = cfg.scenario()
    eps = cfg.learner.eps
    bound = eps + 3.0 * holdout_stderr(eps, cfg.m_holdout)
    rec = {"type": "record", "version": SCHEMA_VERSION, "config": cfg.name, "kind": cfg.kind,
           "seed": seed, "verdict": None, "reason": None, "accepted": False, "hypothesis": None,
           "holdout_error": None, "m_holdout": cfg.m_holdout, "bound": bound, "soundness_ok": None,
           "dichotomy_ok": None, "positive_mass_test": None, "error": None, "witness": None,
           "diagnostics": None}
    t0 = time.perf_counter()
    try:
        inst = scenario.instance(seed, cfg.m_train, cfg.m_test, cfg.m_holdout)
        outcome = tds_learn(inst.X_train, inst.y_train, inst.X_test, cfg.learner)
    except TdsError as exc:
        rec.update(verdict="Error", error=f"{type(exc).__name__}: {exc}", wall_time=time.perf_counter() - t0)
        return rec
    out = outcome.to_record()
    rec.update(verdict=out["verdict"], reason=out["reason"], accepted=outcome.accepted,
               hypothesis=out["hypothesis"], witness=out["witness"], diagnostics=out["diagnostics"])
    if outcome.accepted:
        err = holdout_error(outcome.hypothesis, inst.X_holdout, inst.y_holdout)
        rec["holdout_error"] = err
        rec["soundness_ok"] = err <= bound
        rec["positive_mass_test"] = float(np.mean(outcome.hypothesis(inst.X_test) == 1))
    rec["dichotomy_ok"] = scenario.dichotomy_ok(outcome.accepted, outcome.hypothesis, inst.X_test)
    rec["wall_time"] = time.perf_counter() - t0
    return rec


def _run_seed_star(args):
    return run_seed(*args)


def run_scenario(cfg: RunConfig, workers: int = 1, progress=None) -> list[dict]:
    """Records for every seed, ordered as in ``cfg.seeds``.

    Seeds are independent (separate RNG streams), so ``workers > 1`` runs
    them in a process pool without changing any record.
    """
    if workers > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_seed_star, [(cfg, sd) for sd in cfg.seeds]))
        if progress is not None:
            for r in records:
                progress(r)
        return records
    records = []
    for sd in cfg.seeds:
        records.append(run_seed(cfg, sd))
        if progress is not None:
            progress(records[-1])
    return records


def summarize(records: list[dict]) -> dict:
    n = len(records)
    accepted = [r for r in records if r["accepted"]]
    errs = [r["holdout_error"] for r in accepted]
    hist = Counter(r["reason"] if r["verdict"] == "Reject" else r["verdict"]
                   for r in records if not r["accepted"])
    return {
        "type": "summary",
        "version": SCHEMA_VERSION,
        "n_records": n,
        "accept_rate": len(accepted) / n if n else 0.0,
        "max_holdout_error": max(errs) if errs else None,
        "reject_histogram": dict(sorted(hist.items())),
        "soundness_violations": sum(1 for r in records if r["soundness_ok"] is False),
        "dichotomy_failures": sum(1 for r in records if r["dichotomy_ok"] is False),
        "errors": sum(1 for r in records if r["verdict"] == "Error"),
    }


def write_records(path, cfg: RunConfig, records: list[dict]) -> dict:
    """Write the JSON-lines file and the CSV table next to it; returns the summary."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary = summarize(records)
    header = {"type": "header", "version": SCHEMA_VERSION, "config": cfg.raw}
    with path.open("w") as fh:
        for obj in (header, *records, summary):
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
    with path.with_suffix(".csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for r in records:
            writer.writerow(r)
    return summary


def read_records(path) -> tuple[dict, list[dict], dict | None]:
    header, records, summary = None, [], None
    for i, line in enumerate(Path(path).read_text().splitlines()):
        if not line.strip():
            continue
        obj = json.loads(line)
        kind = obj.get("type")
        if kind == "header":
            header = obj
        elif kind == "record":
            records.append(obj)
        elif kind == "summary":
            summary = obj
        else:
            raise ConfigError(f"line {i + 1}", f"unknown record type {kind!r}")
    if header is None:
        raise ConfigError("header", "records file has no header line")
    return header, records, summary


def strip_timing(rec: dict) -> dict:
    return {key: v for key, v in rec.items() if key not in TIMING_FIELDS}


# --------------------------------------------------------------------------
# Verification
# --------------------------------------------------------------------------


@dataclass
class VerifyReport:
    n_records: int
    n_checked: int
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_records(path) -> VerifyReport:
    """Recompute every accepted record's held-out error and re-check the contracts.

    The truth and the held-out sample are regenerated from the stored config
    and seed; the stored hypothesis is re-scored and must reproduce the stored
    error within ``RECOMPUTE_TOL`` and stay within the stored bound.
    """
    header, records, _ = read_records(path)
    cfg = parse_config(header["config"])
    scenario = cfg.scenario()
    bound = cfg.learner.eps + 3.0 * holdout_stderr(cfg.learner.eps, cfg.m_holdout)
    violations, checked = [], 0
    for r in records:
        tag = f"seed {r.get('seed')}"
        if r.get("verdict") != "Accept":
            if r.get("accepted"):
                violations.append(f"{tag}: accepted flag set on a {r.get('verdict')} record")
            continue
        checked += 1
        if r.get("hypothesis") is None:
            violations.append(f"{tag}: accepted record without hypothesis")
            continue
        h = HalfspaceIntersection.from_record(r["hypothesis"])
        _, X_hold, y_hold = scenario.holdout(r["seed"], cfg.m_holdout)
        err = holdout_error(h, X_hold, y_hold)
        stored = r.get("holdout_error")
        if stored is None or abs(err - stored) > RECOMPUTE_TOL:
            violations.append(f"{tag}: stored held-out error {stored} but recomputed {err}")
        if err > bound or (stored is not None and stored > bound):
            violations.append(f"{tag}: held-out error {max(err, stored or 0.0):.5f} exceeds bound {bound:.5f}")
        if scenario.kind == "biased-halfspace":
            c = scenario.concept(r["seed"])
            X_test = scenario.test_sampler(c, r["seed"])(cfg.m_test, SeededSampler(r["seed"], (2,)))
            if not scenario.dichotomy_ok(True, h, X_test):
                violations.append(f"{tag}: accepted with positive test mass above 4 eps")
    return VerifyReport(len(records), checked, violations)


__all__ = [
    "SCHEMA_VERSION",
    "RunConfig",
    "VerifyReport",
    "parse_config",
    "load_config",
    "run_seed",
    "run_scenario",
    "summarize",
    "write_records",
    "read_records",
    "strip_timing",
    "verify_records",
    "holdout_stderr",
    "holdout_error",
]
