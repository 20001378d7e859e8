import copy
import json
from pathlib import Path

import numpy as np
import pytest

from tdslearn.cli import main
from tdslearn.errors import ConfigError
from tdslearn.gaussian import gaussian_moment_1d
from tdslearn.hard_instances import Discrete1D
from tdslearn.harness import (load_config, parse_config, read_records, run_scenario, run_seed, strip_timing,
                              verify_records, write_records)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
EXAMPLE = CONFIGS / "example.json"


def small_raw(**samples):
    raw = json.loads(EXAMPLE.read_text())
    raw["samples"] = {"m_train": 5000, "m_test": 5000, "m_holdout": 2000, **samples}
    raw["seeds"] = [0]
    return raw


def _records_file(tmp_path):
    cfg = parse_config(small_raw())
    out = tmp_path / "rec.jsonl"
    write_records(out, cfg, run_scenario(cfg))
    return out


class TestConfig:
    def test_shipped_configs_parse(self):
        for p in CONFIGS.glob("*.json"):
            cfg = load_config(p)
            assert cfg.seeds and cfg.m_train >= 1

    @pytest.mark.parametrize("mutate,path", [
        (lambda r: r.__setitem__("seeds", []), "seeds"),
        (lambda r: r["samples"].__setitem__("m_test", 0), "samples.m_test"),
        (lambda r: r["scenario"].__setitem__("kind", "bogus"), "scenario.kind"),
        (lambda r: r["learner"].__setitem__("eps", 2.0), "learner.eps"),
        (lambda r: r["learner"]["overrides"].__setitem__("zeta", 1), "learner.overrides.zeta"),
        (lambda r: r.__setitem__("version", 99), "version"),
    ])
    def test_validation_paths(self, mutate, path):
        raw = small_raw()
        mutate(raw)
        with pytest.raises(ConfigError) as info:
            parse_config(raw)
        assert info.value.path == path


class TestRecords:
    def test_determinism_modulo_timing(self):
        cfg = parse_config(small_raw())
        a, b = run_seed(cfg, 0), run_seed(cfg, 0)
        assert json.dumps(strip_timing(a), sort_keys=True) == json.dumps(strip_timing(b), sort_keys=True)

    def test_round_trip_and_verify(self, tmp_path):
        out = _records_file(tmp_path)
        header, records, summary = read_records(out)
        assert len(records) == 1 and summary["n_records"] == 1
        assert out.with_suffix(".csv").exists()
        rep = verify_records(out)
        assert rep.ok and rep.n_checked == sum(r["verdict"] == "Accept" for r in records)

    def test_workers_match_serial(self):
        cfg = parse_config({**small_raw(), "seeds": [0, 1]})
        serial = [strip_timing(r) for r in run_scenario(cfg)]
        pooled = [strip_timing(r) for r in run_scenario(cfg, workers=2)]
        assert serial == pooled


class TestCli:
    def test_run_example(self, tmp_path):
        out = tmp_path / "ex.jsonl"
        assert main(["run", "--config", str(EXAMPLE), "--out", str(out)]) == 0
        _, records, _ = read_records(out)
        assert len(records) >= 1
        assert main(["verify", "--records", str(out)]) == 0

    def test_seed_override(self, tmp_path):
        cfgp = tmp_path / "c.json"
        cfgp.write_text(json.dumps({**small_raw(), "seeds": [0, 1, 2]}))
        out = tmp_path / "o.jsonl"
        assert main(["--seed", "7", "run", "--config", str(cfgp), "--out", str(out)]) == 0
        assert [r["seed"] for r in read_records(out)[1]] == [7]

    def test_tampered_record_exits_1(self, tmp_path):
        out = _records_file(tmp_path)
        lines = out.read_text().splitlines()
        rec = json.loads(lines[1])
        assert rec["verdict"] == "Accept"
        h = copy.deepcopy(rec["hypothesis"])
        h["normals"] = (-np.asarray(h["normals"])).tolist()
        rec["hypothesis"] = h
        lines[1] = json.dumps(rec, sort_keys=True)
        out.write_text("\n".join(lines) + "\n")
        assert main(["verify", "--records", str(out)]) == 1

    def test_tampered_error_value_exits_1(self, tmp_path):
        out = _records_file(tmp_path)
        lines = out.read_text().splitlines()
        rec = json.loads(lines[1])
        rec["holdout_error"] += 1e-6
        lines[1] = json.dumps(rec, sort_keys=True)
        out.write_text("\n".join(lines) + "\n")
        assert main(["verify", "--records", str(out)]) == 1

    def test_bad_config_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({**small_raw(), "seeds": []}))
        assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x.jsonl")]) == 2
        assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", "x"]) == 2
        assert main(["frobnicate"]) == 2

    def test_gen_hard_lp(self, tmp_path):
        out = tmp_path / "lp.json"
        assert main(["gen-hard", "--kind", "lp-moment-match", "--eps", "0.01", "--out", str(out)]) == 0
        rec = json.loads(out.read_text())
        D = Discrete1D.from_record(rec["dist"])
        for i in range(rec["degree"] + 1):
            assert abs(D.moment(i) - gaussian_moment_1d(i)) <= 1e-8
        assert rec["min_mu"] >= 0.9 - 1e-9

    def test_gen_hard_mass_relocated(self, tmp_path):
        out = tmp_path / "mr.json"
        assert main(["gen-hard", "--kind", "mass-relocated", "--eps", "0.01", "--K", "100000",
                     "--out", str(out)]) == 0
        rec = json.loads(out.read_text())
        assert rec["tail_mass"] >= 0.12
        assert main(["gen-hard", "--kind", "mass-relocated", "--eps", "0.5", "--out", str(out)]) == 1
