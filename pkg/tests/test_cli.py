import hashlib
import json
import time

import pytest

from tfd.cli import main
from tfd.synth import read_labels


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    """A one-hour hping-like trace and a 10-epoch model trained on it."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--preset", "hping-like", "--duration", "3600", "--seed", "7", "--out", str(root / "data")]) == 0
    trace, labels = root / "data" / "hping-like.csv", root / "data" / "hping-like.labels.csv"
    assert main(["train", "--trace", str(trace), "--labels", str(labels), "--epochs", "10", "--seed", "7",
                 "--out", str(root / "m1")]) == 0
    return root, trace, labels


def test_synth_writes_files_and_is_deterministic(tmp_path, capsys, small):
    root, trace, labels = small
    code, out, _ = run(capsys, "synth", "--preset", "hping-like", "--duration", "3600", "--seed", "7",
                            "--out", tmp_path, "--json")
    assert code == 0
    summary = json.loads(out)
    assert summary["n_segments"] == 360 and summary["seed"] == 7 and "config_hash" in summary
    for name in ("hping-like.csv", "hping-like.labels.csv", "hping-like.manifest.json"):
        assert sha(tmp_path / name) == sha(root / "data" / name)
    assert len(read_labels(labels)) == 360


def test_synth_pulse_flags_and_schedule(tmp_path, capsys):
    code, out, _ = run(capsys, "synth", "--schedule", "--normal-rate", "4.5", "--peak", "50", "--pulse", "0.1",
                            "--duration", "600", "--out", tmp_path, "--json")
    assert code == 0
    manifest = json.loads((tmp_path / "custom.manifest.json").read_text())
    assert manifest["composition"]["n_attack"] == 20 and manifest["composition"]["n_normal"] == 40


def test_synth_bad_preset_is_usage_error(tmp_path, capsys):
    code, _, err = run(capsys, "synth", "--preset", "loic", "--out", tmp_path)
    assert code == 2 and "loic" in err


def test_train_smoke_fast_and_byte_identical(tmp_path, capsys, small):
    root, trace, labels = small
    start = time.perf_counter()
    code, out, _ = run(capsys, "train", "--trace", trace, "--labels", labels, "--epochs", "10", "--seed", "7",
                            "--out", tmp_path, "--json")
    assert time.perf_counter() - start < 30.0
    assert code == 0
    summary = json.loads(out)
    assert summary["R_t"] > 0 and summary["R_f"] > 0
    assert sha(tmp_path / "model.tfd") == sha(root / "m1" / "model.tfd")
    assert sha(tmp_path / "training_trace.csv") == sha(root / "m1" / "training_trace.csv")
    head = (tmp_path / "training_trace.csv").read_text().splitlines()[:2]
    assert head[0].startswith("# seed=7 config_hash=") and head[1] == "model,run,epoch,train_loss,valid_error"


def test_train_empty_trace_is_io_error(tmp_path, capsys):
    (tmp_path / "e.csv").write_text("ts,src_ip,src_port,dst_ip,dst_port,proto,len\n")
    code, _, _ = run(capsys, "train", "--trace", tmp_path / "e.csv", "--out", tmp_path)
    assert code == 4


def test_detect_jsonl_and_exit_code(capsys, small):
    root, trace, _ = small
    code, out, _ = run(capsys, "detect", "--model", root / "m1" / "model.tfd", "--trace", trace)
    lines = [json.loads(x) for x in out.strip().splitlines()]
    rows, summary = lines[:-1], lines[-1]["summary"]
    assert len(rows) == 360 == summary["segments"]
    assert set(rows[0]) == {"segment_id", "r_t", "r_f", "verdict", "triggered"}
    assert summary["model_seed"] == 7
    assert code == (3 if summary["attack"] else 0)


def test_detect_missing_or_corrupt_model(tmp_path, capsys, small):
    _, trace, _ = small
    assert run(capsys, "detect", "--model", tmp_path / "none.tfd", "--trace", trace)[0] == 4
    (tmp_path / "bad.tfd").write_bytes(b"TFD1\x00")
    assert run(capsys, "detect", "--model", tmp_path / "bad.tfd", "--trace", trace)[0] == 4


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "detect", "--trace", "x.csv")[0] == 2
    assert run(capsys, "train", "--seed", "-1", "--trace", "x.csv")[0] == 2


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": 3, "synth": {"preset": "torshammer-like", "n_normal": 14, "n_attack": 7}}))
    code, out, _ = run(capsys, "--config", cfg, "synth", "--seed", "4", "--out", tmp_path, "--json")
    assert code == 0
    summary = json.loads(out)
    assert summary["seed"] == 4 and summary["n_attack"] == 7
    cfg.write_text(json.dumps({"sed": 3}))
    assert run(capsys, "--config", cfg, "synth", "--out", tmp_path)[0] == 2


def test_eval_and_report(tmp_path, capsys, small):
    root, trace, labels = small
    code, out, _ = run(capsys, "eval", "--trace", trace, "--labels", labels, "--runs", "1", "--epochs", "3",
                            "--calib-runs", "1", "--out", tmp_path)
    assert code == 0
    rows = out.strip().splitlines()
    assert len(rows) == 4 and rows[-1].startswith("Average")
    assert rows[2].split()[1:] == rows[3].split()[1:]
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["columns"] == ["Accuracy", "Recall", "Precision", "FAR", "F1"]
    code, out, _ = run(capsys, "report", "--input", tmp_path / "report.json", "--json")
    assert code == 0
    again = json.loads(out)
    assert again["datasets"] == doc["datasets"] and again["average"] == doc["average"]


def test_report_rejects_non_report(tmp_path, capsys):
    (tmp_path / "x.json").write_text("{}")
    assert run(capsys, "report", "--input", tmp_path / "x.json")[0] == 4


@pytest.fixture(scope="module")
def full_model(tmp_path_factory):
    """Default 100-epoch, 5-run training on a normal-only trace."""
    root = tmp_path_factory.mktemp("full")
    assert main(["synth", "--preset", "hping-like", "--n-normal", "360", "--n-attack", "0", "--seed", "11",
                 "--out", str(root / "normal")]) == 0
    assert main(["synth", "--preset", "hping-like", "--n-normal", "0", "--n-attack", "60", "--seed", "12",
                 "--out", str(root / "attack")]) == 0
    assert main(["train", "--trace", str(root / "normal" / "hping-like.csv"), "--seed", "11",
                 "--out", str(root / "model")]) == 0
    return root


def _flagged(capsys, root, which):
    main(["detect", "--model", str(root / "model" / "model.tfd"), "--trace", str(root / which / "hping-like.csv")])
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])["summary"]["flagged_fraction"]


@pytest.mark.slow
def test_normal_trace_flag_rate_bounded(capsys, full_model):
    assert _flagged(capsys, full_model, "normal") <= 0.15


@pytest.mark.slow
def test_attack_trace_flag_rate(capsys, full_model):
    assert _flagged(capsys, full_model, "attack") >= 0.9
