"""Command-line interface: subcommands, outputs and exit codes."""

import hashlib
import json

import pytest

from adhound.cli import main

FOURHOP = ["forge", "--preset", "fourhop", "--seed", "1"]


@pytest.fixture(scope="module")
def fourhop_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fourhop")
    assert main(FOURHOP + ["--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, fourhop_dir):
    out = tmp_path_factory.mktemp("run")
    assert main(["detect", str(fourhop_dir / "events.jsonl"),
                 "--out", str(out)]) == 0
    return out


def test_forge_writes_events_and_truth(fourhop_dir):
    assert (fourhop_dir / "events.jsonl").exists()
    assert (fourhop_dir / "truth.json").exists()


def test_forge_refuses_nonempty_dir_without_force(fourhop_dir):
    assert main(FOURHOP + ["--out", str(fourhop_dir)]) == 1
    assert main(FOURHOP + ["--out", str(fourhop_dir), "--force"]) == 0


def test_forge_requires_a_source():
    assert main(["forge", "--out", "/tmp/never-used"]) == 1


def test_forge_rejects_invalid_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "hosts": [{"fqdn": "ws01.corp.example", "role": "workstation"}],
        "users": [{"name": "alice"}]}), encoding="utf-8")
    assert main(["forge", "--config", str(bad),
                 "--out", str(tmp_path / "out")]) == 2


def test_ingest_reports_counts(fourhop_dir, capsys):
    assert main(["ingest", str(fourhop_dir / "events.jsonl")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["accepted"] > 0
    assert report["rejected"] == 0


def test_ingest_missing_file_is_data_error(tmp_path):
    assert main(["ingest", str(tmp_path / "nope.jsonl")]) == 2


def test_detect_writes_run_directory(run_dir):
    assert (run_dir / "alerts.jsonl").exists()
    assert (run_dir / "reports.json").exists()
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["alert_count"] >= 1
    assert all(t >= 0 for t in manifest["stage1_per_alert_ms"])
    assert all(t >= 0 for t in manifest["stage2_per_alert_ms"])
    graphs = sorted((run_dir / "graphs").glob("*.json"))
    dots = sorted((run_dir / "graphs").glob("*.dot"))
    assert len(graphs) == manifest["alert_count"] == len(dots)


def test_detect_outputs_are_deterministic(fourhop_dir, run_dir, tmp_path):
    again = tmp_path / "again"
    assert main(["detect", str(fourhop_dir / "events.jsonl"),
                 "--out", str(again)]) == 0
    for name in ("alerts.jsonl", "reports.json"):
        a = hashlib.sha256((run_dir / name).read_bytes()).hexdigest()
        b = hashlib.sha256((again / name).read_bytes()).hexdigest()
        assert a == b, f"{name} differs between identical runs"
    for path in sorted((run_dir / "graphs").iterdir()):
        a = hashlib.sha256(path.read_bytes()).hexdigest()
        b = hashlib.sha256((again / "graphs" / path.name).read_bytes()).hexdigest()
        assert a == b, f"{path.name} differs between identical runs"


def test_eval_emits_metrics(fourhop_dir, run_dir, capsys, tmp_path):
    out = tmp_path / "metrics.json"
    assert main(["eval", "--run", str(run_dir),
                 "--truth", str(fourhop_dir / "truth.json"),
                 "--events", str(fourhop_dir / "events.jsonl"),
                 "--out", str(out)]) == 0
    capsys.readouterr()
    metrics = json.loads(out.read_text())
    assert metrics["stage2"]["fp"] == 0
    assert metrics["stage2"]["fn"] == 0
    assert metrics["edges"]["exact"] is True
    assert metrics["timing_ms"]["stage2_p99"] >= 0


def test_export_produces_loadable_dot(run_dir, tmp_path, capsys):
    graph = sorted((run_dir / "graphs").glob("*.json"))[0]
    out = tmp_path / "g.dot"
    assert main(["export", str(graph), "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("digraph")
    assert text.rstrip().endswith("}")
    assert "subgraph cluster_0" in text  # one cluster per host
    assert "moved_to" in text            # cross-machine edge present, styled
    assert "color=red" in text


def test_export_missing_file_is_data_error(tmp_path):
    assert main(["export", str(tmp_path / "missing.json")]) == 2


def test_benign_dataset_yields_no_alerts_or_graphs(tmp_path, capsys):
    data = tmp_path / "benign"
    assert main(["forge", "--preset", "benign", "--seed", "2",
                 "--out", str(data)]) == 0
    capsys.readouterr()
    # the benign preset keeps truncation; detection still ends verdict-free
    out = tmp_path / "run"
    assert main(["detect", str(data / "events.jsonl"), "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["positive_verdicts"] == 0
