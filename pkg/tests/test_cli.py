import json

import pytest

from covmdp.cli import ExperimentConfig, run
from covmdp.population import load_profile


@pytest.fixture
def uniform50(tmp_path):
    path = tmp_path / "p.json"
    assert run(["profile", "--family", "uniform", "--k", "50", "--out", str(path)]) == 0
    return path


@pytest.fixture
def small_power(tmp_path):
    path = tmp_path / "pw.json"
    args = ["profile", "--family", "power_law", "--b", "2", "--tail-tol", "1e-3", "--out", str(path)]
    assert run(args) == 0
    return path


def test_profile_command(uniform50):
    prof = load_profile(uniform50)
    assert prof.n_species == 50 and all(p == 0.02 for p in prof.probs)
    data = json.loads(uniform50.read_text())
    assert data["family"] == "uniform" and len(data["probs"]) == 50


def test_moments_identity(uniform50, tmp_path, capsys):
    out = tmp_path / "m.json"
    assert run(["moments", "--profile", str(uniform50), "--n", "100", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    r = rep["result"]
    assert r["b_n"] == pytest.approx(r["e_f1"] * (1 - r["e_f1"] / 100) + 2 * r["e_f2"], rel=1e-15)
    assert {"tool", "version", "config", "seed", "profile_sha256"} <= set(rep)
    assert run(["moments", "--profile", str(uniform50), "--n", "100"]) == 0
    assert json.loads(capsys.readouterr().out) == rep


def test_exit_codes(tmp_path, uniform50, monkeypatch):
    monkeypatch.delenv("COVMDP_SEED", raising=False)
    assert run(["profile", "--family", "uniform", "--out", str(tmp_path / "x.json")]) == 1
    assert run(["moments", "--profile", str(uniform50), "--n", "0"]) == 1
    assert run(["bogus"]) == 1
    assert run(["moments", "--profile", str(tmp_path / "missing.json"), "--n", "5"]) == 2
    # seed is mandatory for simulations
    assert run(["simulate", "ks", "--profile", str(uniform50), "--n", "10", "--reps", "1000"]) == 1
    assert run(["ci", "--f1", "5", "--n", "3"]) == 1


def _tails(profile, out, workers, extra=()):
    return run(
        ["simulate", "tails", "--profile", str(profile), "--n", "400", "--t", "1.5,2,2.5",
         "--reps", "3000", "--seed", "42", "--gamma", "0.75", "--kind", "oracle",
         "--workers", str(workers), "--out", str(out), *extra]
    )


def test_tails_byte_identical_across_workers(small_power, tmp_path):
    a, b = tmp_path / "w1.csv", tmp_path / "w8.csv"
    assert _tails(small_power, a, 1) == 0 and _tails(small_power, b, 8) == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text().splitlines()
    assert text[0].startswith("# covmdp") and any(line.startswith("# seed 42") for line in text)
    header = next(line for line in text if not line.startswith("#"))
    assert header == "n,t,kind,side,hits,reps,p_hat,wilson_lo,wilson_hi,neg_log_p,mdp_ratio"
    assert len([line for line in text if not line.startswith("#")]) == 7


def test_records_and_rerun(small_power, tmp_path):
    out, rec = tmp_path / "t.csv", tmp_path / "r.jsonl"
    assert _tails(small_power, out, 1, ("--records", str(rec))) == 0
    first = out.read_bytes()
    lines = rec.read_text().splitlines()
    assert len(lines) == 3000 and json.loads(lines[0])["rep"] == 0
    assert _tails(small_power, out, 1) == 0
    assert out.read_bytes() == first


def test_config_file_and_override(small_power, tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"profile": str(small_power), "n": 300, "reps": 1500,
                               "alpha": 0.05, "kind": "self_normalized"}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("COVMDP_SEED", "7")
    assert run(["simulate", "coverage", "--config", str(cfg), "--format", "json", "--out", str(a)]) == 0
    ra = json.loads(a.read_text())
    assert ra["seed"] == 7 and ra["config"]["params"]["n"] == 300
    assert run(["simulate", "coverage", "--config", str(cfg), "--alpha", "0.5",
                "--format", "json", "--out", str(b)]) == 0
    rb = json.loads(b.read_text())
    assert rb["config"]["params"]["alpha"] == 0.5
    assert rb["result"]["fraction"] < ra["result"]["fraction"]


def test_other_simulations(small_power, tmp_path):
    base = ["--profile", str(small_power), "--n", "200", "--seed", "3"]
    assert run(["simulate", "gap", *base, "--reps", "500", "--gamma", "0.75", "--out", str(tmp_path / "g.csv")]) == 0
    assert run(["simulate", "na", *base, "--reps", "500", "--subset", "1,2,3", "--r-exp", "2",
                "--format", "jsonl", "--out", str(tmp_path / "na.jsonl")]) == 0
    row = json.loads((tmp_path / "na.jsonl").read_text())
    assert row["holds"] is True and row["seed"] == 3
    assert run(["simulate", "ks", *base, "--reps", "1000", "--out", str(tmp_path / "k.csv")]) == 0


def test_ci_and_test_commands(tmp_path, uniform50):
    out = tmp_path / "ci.json"
    assert run(["ci", "--f1", "100", "--f2", "20", "--n", "10000", "--out", str(out)]) == 0
    r = json.loads(out.read_text())["result"]
    assert r["half_width"] == pytest.approx(0.0020406047780596923, rel=1e-14)
    assert run(["ci", "--f1", "100", "--f2", "20", "--n", "10000", "--kind", "oracle_b",
                "--b-value", "139", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["result"]["half_width"] == pytest.approx(r["half_width"], rel=1e-14)
    assert run(["test", "--kind", "coverage", "--f1", "50", "--n", "100", "--u0", "0.5",
                "--b0", "30", "--c", "1", "--gamma", "0.75", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["result"]["reject"] is False
    assert run(["test", "--f1", "1", "--n", "100", "--null-profile", str(uniform50),
                "--c", "1", "--gamma", "0.75", "--out", str(out)]) == 0
    assert "u0" in json.loads(out.read_text())["result"]


def test_check_conditions(tmp_path, small_power):
    out = tmp_path / "c.json"
    assert run(["check-conditions", "--profile", str(small_power), "--n-grid", "100,1000,10000",
                "--gamma", "0.75", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())["result"]
    assert rep["verdicts"]["ratio_f1"]["trend"] == "decreasing"
    assert run(["check-conditions", "--r-per-n", "0.5", "--tail-tol", "1e-8", "--n-grid", "1000,10000,100000",
                "--gamma", "0.75", "--out", str(out)]) == 0
    assert run(["check-conditions", "--n-grid", "1,2,3", "--gamma", "0.75"]) == 1


def test_config_round_trip():
    cfg = ExperimentConfig("simulate", {"n": 10, "t": "1,2"}, seed=2**64 - 1, workers=3, out="x", format="json")
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
