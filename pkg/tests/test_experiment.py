"""Configuration loading and batch-run tests."""

import json
from pathlib import Path

import pytest

from flexhammer import load_config, run_experiment
from flexhammer.experiment import (ConditionSpec, ExperimentConfig,
                                   OperatorSettings)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = {
    "mode": "direct",
    "conditions": [{"label": "4.8Hz", "stiffness": 2.3}],
}


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


class TestLoadConfig:
    def test_minimal_gets_defaults(self, tmp_path):
        cfg = load_config(write_config(tmp_path, MINIMAL))
        assert cfg.dt == 1e-3
        assert cfg.trials == 40
        assert cfg.best_k == 10
        assert cfg.conditions[0].stiffness == 2.3
        assert cfg.conditions[0].preset is None

    def test_negative_stiffness_names_field(self, tmp_path):
        payload = {"mode": "direct",
                   "conditions": [{"label": "x", "stiffness": -1.0}]}
        with pytest.raises(ValueError, match="stiffness"):
            load_config(write_config(tmp_path, payload))

    def test_unknown_key_rejected(self, tmp_path):
        payload = dict(MINIMAL, tirals=3)
        with pytest.raises(ValueError, match="tirals"):
            load_config(write_config(tmp_path, payload))

    def test_unknown_condition_key_rejected(self, tmp_path):
        payload = {"mode": "direct",
                   "conditions": [{"label": "x", "stifness": 1.0}]}
        with pytest.raises(ValueError, match="stifness"):
            load_config(write_config(tmp_path, payload))

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"mode": "direct",\n  "conditions": [}')
        with pytest.raises(ValueError, match="line 2"):
            load_config(path)

    def test_shipped_experiment1_has_the_five_conditions(self):
        cfg = load_config(CONFIGS / "experiment1.json")
        stiff = [c.stiffness for c in cfg.conditions]
        assert stiff == [0.62, 2.3, 4.1, 11.0, None]
        assert cfg.mode == "direct"
        assert cfg.trials == 40

    def test_shipped_experiment2_maps_feedback_to_presets(self):
        cfg = load_config(CONFIGS / "experiment2.json")
        presets = [c.preset for c in cfg.conditions]
        assert presets == [1, 1, 2, 3]
        assert all(c.stiffness == 2.3 for c in cfg.conditions)

    def test_feedback_and_preset_conflict(self, tmp_path):
        payload = {"mode": "teleop",
                   "conditions": [{"label": "x", "feedback": "FF",
                                   "preset": 2}]}
        with pytest.raises(ValueError, match="not both"):
            load_config(write_config(tmp_path, payload))

    def test_teleop_condition_needs_preset(self):
        with pytest.raises(ValueError, match="preset"):
            ExperimentConfig(mode="teleop",
                             conditions=(ConditionSpec("x", 2.3),))

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            ExperimentConfig(mode="direct",
                             conditions=(ConditionSpec("a", 1.0),
                                         ConditionSpec("a", 2.0)))


def tiny_config(**overrides):
    base = dict(
        mode="direct",
        conditions=(ConditionSpec("4.8Hz", 2.3), ConditionSpec("rigid", None)),
        trials=4, participants=3, seed=7, best_k=3,
        operator=OperatorSettings(jitter=0.05, participant_jitter=0.08),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def snapshot(root):
    """Map of relative path -> bytes for every file under root."""
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


class TestRunExperiment:
    def test_layout_and_manifest(self, tmp_path):
        out = tmp_path / "run"
        manifest = run_experiment(tiny_config(), out)
        for sub in ("traces", "metrics", "stats"):
            assert (out / sub).is_dir()
        assert (out / "manifest.json").exists()
        for section in manifest.files.values():
            for rel in section:
                assert (out / rel).exists()
        data = json.loads((out / "manifest.json").read_text())
        assert data["seed"] == 7
        assert len(data["config_hash"]) == 64

    def test_summaries_and_stats_written(self, tmp_path):
        out = tmp_path / "run"
        run_experiment(tiny_config(), out)
        summaries = json.loads(
            (out / "metrics" / "4.8Hz_summaries.json").read_text())
        assert len(summaries) == 3
        assert all(s["n_used"] <= 3 for s in summaries)
        report = json.loads((out / "stats" / "tests.json").read_text())
        assert report["conditions"] == ["4.8Hz", "rigid"]
        assert "friedman" in report["gain"]

    def test_flexible_beats_rigid(self, tmp_path):
        out = tmp_path / "run"
        run_experiment(tiny_config(), out)
        report = json.loads((out / "stats" / "tests.json").read_text())
        med = report["gain"]["condition_medians"]
        assert med["4.8Hz"] > 2.0
        assert abs(med["rigid"] - 1.0) < 1e-9

    def test_seed_determinism_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_experiment(tiny_config(), a)
        run_experiment(tiny_config(), b)
        sa, sb = snapshot(a), snapshot(b)
        assert set(sa) == set(sb)
        for rel in sa:
            if rel == "manifest.json":
                da = json.loads(sa[rel])
                db = json.loads(sb[rel])
                da.pop("created"), db.pop("created")
                assert da == db
            else:
                assert sa[rel] == sb[rel], f"{rel} differs between runs"

    def test_jobs_do_not_change_results(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_experiment(tiny_config(), a, jobs=1)
        run_experiment(tiny_config(), b, jobs=4)
        sa, sb = snapshot(a), snapshot(b)
        assert set(sa) == set(sb)
        for rel in sa:
            if rel != "manifest.json":
                assert sa[rel] == sb[rel], f"{rel} differs with jobs=4"

    def test_different_seed_changes_metrics(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_experiment(tiny_config(), a)
        run_experiment(tiny_config(seed=8), b)
        assert (a / "metrics" / "4.8Hz_p00.csv").read_bytes() != \
               (b / "metrics" / "4.8Hz_p00.csv").read_bytes()

    def test_save_traces_policies(self, tmp_path):
        for policy, expected in (("none", 0), ("first", 2), ("all", 24)):
            out = tmp_path / policy
            run_experiment(tiny_config(save_traces=policy), out)
            written = list((out / "traces").glob("*.csv"))
            assert len(written) == expected, (policy, written)

    def test_teleop_mode_runs(self, tmp_path):
        cfg = tiny_config(
            mode="teleop",
            conditions=(ConditionSpec("FF", 2.3, 1),
                        ConditionSpec("NF", 2.3, 3)),
            participants=2, trials=3, best_k=3)
        out = tmp_path / "run"
        run_experiment(cfg, out)
        report = json.loads((out / "stats" / "tests.json").read_text())
        assert report["gain"]["condition_medians"]["FF"] > 2.0
