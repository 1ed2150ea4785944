from __future__ import annotations

import json

import pytest

from cadlag_series.cli import ConfigError, load_config, main, read_header, resolve


def run(*args) -> int:
    return main([str(a) for a in args])


def test_defaults_and_terms_level_exclusive():
    cfg = resolve("simulate", {})
    assert cfg["terms"] == 10000 and cfg["level"] is None and cfg["alpha"] == 1.5
    with pytest.raises(ConfigError, match="not both"):
        resolve("simulate", {"terms": "10", "level": "5"})
    with pytest.raises(ConfigError, match="unknown keys"):
        resolve("simulate", {"bogus": "1"})
    with pytest.raises(ConfigError):
        resolve("verify", {"target": "nonsense"})
    with pytest.raises(ConfigError, match="needs p"):
        resolve("verify", {"target": "vp"})


def test_config_file_then_overrides(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\nalpha=1.2\nterms=50\n")
    cfg = load_config("simulate", str(f), None, ["terms=70"])
    assert cfg["alpha"] == 1.2 and cfg["terms"] == 70


def test_zero_terms_all_zero_path(tmp_path):
    assert run("simulate", "terms=0", "replicates=2", "grid=8", f"out={tmp_path}") == 0
    rows = [line for line in (tmp_path / "paths.csv").read_text().splitlines() if not line.startswith("#")][1:]
    assert len(rows) == 2 * 9
    assert all(float(r.split(",")[2]) == 0.0 for r in rows)
    ledger = (tmp_path / "ledger.csv").read_text().splitlines()
    assert ledger[-1] == "replicate,t,size,term_index"


def test_simulate_deterministic_and_worker_independent(tmp_path):
    args = ["simulate", "terms=300", "replicates=6", "grid=32", "seed=4"]
    for name, workers in (("a", 1), ("b", 1), ("c", 2)):
        assert run(*args, f"workers={workers}", f"out={tmp_path / name}") == 0
    for f in ("paths.csv", "ledger.csv"):
        a = (tmp_path / "a" / f).read_bytes()
        assert a == (tmp_path / "b" / f).read_bytes() == (tmp_path / "c" / f).read_bytes()
    head = read_header(tmp_path / "a" / "paths.csv")
    assert head["seed"] == "4" and "workers" not in head and "out" not in head


def test_simulate_replay_roundtrip(tmp_path):
    assert run("simulate", "terms=200", "replicates=3", "grid=16", "seed=9", f"out={tmp_path / 'a'}") == 0
    assert run("simulate", "--replay", tmp_path / "a" / "ledger.csv", f"out={tmp_path / 'b'}") == 0
    assert (tmp_path / "a" / "ledger.csv").read_bytes() == (tmp_path / "b" / "ledger.csv").read_bytes()


def test_verify_vp_requires_p_above_alpha(tmp_path, capsys):
    assert run("verify", "target=vp", "p=1", "replicates=5", "terms=10", f"out={tmp_path}") == 2
    assert "not a.s. finite" in capsys.readouterr().err


def test_verify_posjump_reports_both_forms(tmp_path):
    assert run("verify", "target=posjump", "replicates=200", "terms=500", f"out={tmp_path}") == 0
    doc = json.loads((tmp_path / "verify_posjump.json").read_text())
    assert set(doc["statistics"]) == {"proof_form", "displayed_form"}
    assert doc["config"]["target"] == "posjump" and doc["threshold"] == 0.03
    assert "runtime_ms" not in doc
    assert "runtime_ms" in json.loads((tmp_path / "verify_posjump.timing.json").read_text())


def test_verify_multi_target_matches_single(tmp_path):
    common = ["replicates=100", "terms=400", "seed=3", "p=2"]
    assert run("verify", "target=absjump,vp", *common, f"out={tmp_path / 'm'}") == 0
    assert run("verify", "target=vp", *common, f"out={tmp_path / 's'}") == 0
    assert (tmp_path / "m" / "verify_vp.json").read_bytes() == (tmp_path / "s" / "verify_vp.json").read_bytes()
    doc = json.loads((tmp_path / "m" / "verify_absjump.json").read_text())
    assert doc["ledger_identity_holds"]
    # replaying one report reproduces it
    assert run("verify", "--replay", tmp_path / "m" / "verify_absjump.json", f"out={tmp_path / 'r'}") == 0
    assert (tmp_path / "r" / "verify_absjump.json").read_bytes() == (tmp_path / "m" / "verify_absjump.json").read_bytes()


def test_diagnose_errors(tmp_path, capsys):
    assert run("diagnose", "mode=convergence", "ladder=", f"out={tmp_path}") == 2
    assert "ladder" in capsys.readouterr().err
    assert run("diagnose", "mode=sideways", f"out={tmp_path}") == 2


def test_diagnose_equal_ladder_zero(tmp_path):
    assert run("diagnose", "mode=convergence", "ladder=50,50", "replicates=5", "grid=32", f"out={tmp_path}") == 0
    doc = json.loads((tmp_path / "diagnose_convergence.json").read_text())
    assert doc["statistic"] == [0.0]


def test_criterion_alpha_out_of_range(tmp_path, capsys):
    assert run("criterion", "alpha=0.5", f"out={tmp_path}") == 2
    assert "1 < alpha < 2" in capsys.readouterr().err


def test_criterion_indicator(tmp_path):
    assert run("criterion", f"out={tmp_path}") == 0
    doc = json.loads((tmp_path / "criterion.json").read_text())
    assert doc["verdict"] == "satisfied (numerically)" and doc["b2"]["identically_zero"]


def test_demo_header_and_bound(tmp_path, capsys):
    assert run("demo", "jmax=3", f"out={tmp_path}") == 0
    text = (tmp_path / "demo_terms.csv").read_text()
    assert "# derived: r=16" in text.splitlines()
    assert run("demo", "--replay", tmp_path / "demo_terms.csv", f"out={tmp_path / 'again'}") == 0
    assert (tmp_path / "again" / "demo_terms.csv").read_text() == text
    assert run("demo", "jmax=7", f"out={tmp_path}") == 2
    assert "partition points" in capsys.readouterr().err


def test_replay_rejects_other_command(tmp_path):
    assert run("criterion", f"out={tmp_path}") == 0
    assert run("demo", "--replay", tmp_path / "criterion.json", f"out={tmp_path}") == 2
