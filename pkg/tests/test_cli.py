import json

import pytest
from hypothesis import given, settings, strategies as st

from chfs_lab.cli import EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, EXIT_VIOLATED, main, replay
from chfs_lab.records import ExperimentRecord, RunConfig, summary_bytes


def _run(tmp_path, *args):
    return main([*args, "--output-dir", str(tmp_path), "--workers", "1"])


def test_lemma_lubkin_record(tmp_path, capsys):
    assert _run(tmp_path, "lemma", "--id", "lubkin", "--n", "4", "--samples", "20000", "--seed", "7") == EXIT_OK
    rec = ExperimentRecord.load(tmp_path / "lemma_lubkin_7.json")
    assert rec.schema_version == 1 and rec.config["seed"] == 7
    assert rec.summary["Consistent"] == 1
    assert abs(rec.summary["estimates"][0] - 8 / 17) < 0.01
    assert (tmp_path / "lemma_lubkin_7.md").read_text().startswith("# lemma_lubkin_7")
    assert "estimate" in (tmp_path / "lemma_lubkin_7.csv").read_text().splitlines()[0]


def test_violated_verdict_exit_code(tmp_path):
    assert _run(tmp_path, "lemma", "--id", "purity_battery", "--batteries", "200", "--seed", "1") == EXIT_VIOLATED


@pytest.mark.parametrize(
    "args",
    [
        ["lemma", "--id", "nope"],
        ["lemma"],
        ["lemma", "--id", "lubkin", "--n", "-2"],
        ["attack-prsg", "--d", "7"],
        ["conjecture", "--case", "cap9"],
        ["frobnicate"],
        ["lemma", "--id", "lubkin", "--n", "notanint"],
        ["lemma", "--id", "lubkin", "--n", "14"],
    ],
)
def test_usage_errors(tmp_path, args, capsys):
    assert _run(tmp_path, *args) == EXIT_USAGE


def test_usage_error_names_field(tmp_path, capsys):
    _run(tmp_path, "attack-prsg", "--d", "7")
    assert "d:" in capsys.readouterr().err


def test_internal_error_exit_code(tmp_path, monkeypatch):
    import chfs_lab.cli as cli

    def boom(cfg):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "execute", boom)
    assert _run(tmp_path, "lemma", "--id", "lubkin") == EXIT_INTERNAL


def test_report_empty_dir(tmp_path):
    assert main(["report", "--dir", str(tmp_path)]) == EXIT_OK
    assert "0 records" in (tmp_path / "summary.md").read_text()


def test_report_collects_records(tmp_path):
    _run(tmp_path, "lemma", "--id", "haar_projection", "--samples", "500", "--seed", "2")
    _run(tmp_path, "lemma", "--id", "lubkin", "--samples", "500", "--seed", "2")
    assert main(["report", "--dir", str(tmp_path)]) == EXIT_OK
    assert len((tmp_path / "summary.csv").read_text().strip().splitlines()) == 3


def test_attack_prsg_record(tmp_path):
    assert _run(tmp_path, "attack-prsg", "--d", "6", "--t", "2", "--kappa", "3", "--trials", "6", "--seed", "1") == EXIT_OK
    rec = ExperimentRecord.load(tmp_path / "attack-prsg_1.json")
    assert rec.summary["advantage"] >= 0.8


def test_attack_pru_and_replay(tmp_path):
    assert _run(tmp_path, "attack-pru", "--trials", "4", "--seed", "3") == EXIT_OK
    path = tmp_path / "attack-pru_3.json"
    ok, _, _ = replay(path)
    assert ok
    assert main(["replay", str(path)]) == EXIT_OK
    assert main(["replay", str(path)]) == EXIT_OK


def test_replay_detects_tampered_seed(tmp_path):
    _run(tmp_path, "lemma", "--id", "lubkin", "--samples", "2000", "--seed", "5")
    path = tmp_path / "lemma_lubkin_5.json"
    data = json.loads(path.read_text())
    data["config"]["seed"] = 6
    path.write_text(json.dumps(data))
    assert main(["replay", str(path)]) == EXIT_VIOLATED


def test_replay_version_mismatch_warns(tmp_path, caplog):
    _run(tmp_path, "lemma", "--id", "lubkin", "--samples", "1000", "--seed", "5")
    path = tmp_path / "lemma_lubkin_5.json"
    data = json.loads(path.read_text())
    data["version"] = "0.0.0-old"
    path.write_text(json.dumps(data))
    ok, _, _ = replay(path)
    assert ok and "replaying" in caplog.text


def test_env_seed_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CHFS_LAB_SEED", "42")
    _run(tmp_path, "lemma", "--id", "lubkin", "--samples", "500")
    assert (tmp_path / "lemma_lubkin_42.json").exists()
    _run(tmp_path, "lemma", "--id", "lubkin", "--samples", "500", "--seed", "9")
    assert (tmp_path / "lemma_lubkin_9.json").exists()


def test_config_file_with_overrides(tmp_path):
    cfg = RunConfig("lemma", 11, {"id": "haar_projection", "n": [2, 3], "D": 1, "samples": 400}, str(tmp_path), 1)
    cfg.save(tmp_path / "c.toml")
    assert main(["lemma", "--config", str(tmp_path / "c.toml"), "--samples", "300"]) == EXIT_OK
    rec = ExperimentRecord.load(tmp_path / "lemma_haar_projection_11.json")
    assert rec.config["params"]["samples"] == 300 and rec.summary["reports"] == 2
    assert main(["attack-pru", "--config", str(tmp_path / "c.toml")]) == EXIT_USAGE


def test_workers_do_not_change_summary(tmp_path):
    a = main(["lemma", "--id", "haar_projection", "--samples", "500", "--seed", "4", "--output-dir", str(tmp_path / "a"), "--workers", "1"])
    b = main(["lemma", "--id", "haar_projection", "--samples", "500", "--seed", "4", "--output-dir", str(tmp_path / "b"), "--workers", "2"])
    assert a == b == EXIT_OK
    ra = ExperimentRecord.load(tmp_path / "a" / "lemma_haar_projection_4.json")
    rb = ExperimentRecord.load(tmp_path / "b" / "lemma_haar_projection_4.json")
    assert summary_bytes(ra.summary) == summary_bytes(rb.summary)


scalars = st.one_of(
    st.integers(-(2**40), 2**40),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(max_size=12),
    st.booleans(),
)


@settings(max_examples=80, deadline=None)
@given(
    st.sampled_from(["lemma", "attack-pru", "attack-prsg", "conjecture", "prfsg-game", "report"]),
    st.integers(0, 2**64 - 1),
    st.dictionaries(st.from_regex(r"[a-z][a-z_]{0,8}", fullmatch=True), st.one_of(scalars, st.lists(st.integers(0, 99), min_size=1, max_size=4)), max_size=6),
    st.text(min_size=1, max_size=10),
    st.integers(1, 64),
)
def test_run_config_roundtrip(command, seed, params, out, workers):
    cfg = RunConfig(command, seed, params, out, workers)
    assert RunConfig.from_toml(cfg.to_toml()) == cfg
