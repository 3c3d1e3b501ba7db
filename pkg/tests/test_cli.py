"""End-to-end tests for the `upright` command-line tool.

A small stripes corpus plus a 2-epoch tiny_desk_small model keeps the whole
pipeline under a few seconds while still exercising every subcommand, the
config layering, and the byte-for-byte determinism guarantee.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from upright import cli


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def synthesize_small(out, seed=7, n=30, counts="20,5,5", level="pm45"):
    rc = run_cli(
        "--seed", seed, "--out", out, "--level", level,
        "synthesize", "--kind", "stripes", "--n", n,
        "--counts", counts, "--image-size", 64,
    )
    assert rc == 0
    return Path(out)


def train_small(out, seed=7, epochs=2):
    rc = run_cli(
        "--seed", seed, "--out", out,
        "train", "--backbone", "tiny_desk_small", "--epochs", epochs,
    )
    assert rc == 0
    return Path(out) / "model.ckpt"


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """One synthesized+trained run shared by the read-only tests."""
    out = tmp_path_factory.mktemp("pipeline")
    synthesize_small(out)
    train_small(out)
    return out


def test_synthesize_writes_corpus_and_manifest(tmp_path):
    out = synthesize_small(tmp_path / "run")
    pngs = sorted((out / "corpus").glob("*.png"))
    assert len(pngs) == 30
    lines = (out / "manifest.jsonl").read_text().splitlines()
    head = json.loads(lines[0])
    assert head["command"] == "synthesize"
    assert head["config"]["seed"] == 7
    assert "out" not in head["config"]
    splits = [json.loads(l)["split"] for l in lines[1:]]
    assert splits.count("train") == 20
    assert splits.count("val") == 5
    assert splits.count("test") == 5


def test_synthesize_default_counts_hold_out_tenth(tmp_path):
    rc = run_cli("--seed", 3, "--out", tmp_path / "r", "synthesize",
                 "--kind", "stripes", "--n", 30, "--image-size", 64)
    assert rc == 0
    lines = (tmp_path / "r" / "manifest.jsonl").read_text().splitlines()
    splits = [json.loads(l)["split"] for l in lines[1:]]
    assert splits.count("val") == 3 and splits.count("test") == 3
    assert splits.count("train") == 24


def test_train_writes_checkpoint_and_log(pipeline_dir):
    assert (pipeline_dir / "model.ckpt").exists()
    lines = (pipeline_dir / "train_log.jsonl").read_text().splitlines()
    head = json.loads(lines[0])
    assert head["record"] == "config"
    assert head["config"]["backbone"] == "tiny_desk_small"
    epochs = [json.loads(l)["epoch"] for l in lines[1:]]
    assert epochs == [0, 1]


def test_train_level_flag_must_match_manifest(pipeline_dir, capsys):
    rc = run_cli("--level", "full360", "--out", pipeline_dir, "train",
                 "--backbone", "tiny_desk_small", "--epochs", 1)
    assert rc == 1
    assert "conflicts" in capsys.readouterr().err


def test_evaluate_classical_writes_report(pipeline_dir):
    rc = run_cli("--seed", 7, "--out", pipeline_dir, "evaluate",
                 "--method", "hough-var")
    assert rc == 0
    report = pipeline_dir / "report-hough-var-pm45.jsonl"
    lines = report.read_text().splitlines()
    head = json.loads(lines[0])
    assert head["record"] == "summary"
    assert head["method"] == "hough-var"
    assert head["samples"] == 5 == len(lines) - 1
    assert head["provenance"]["command"] == "evaluate"
    assert "out" not in head["provenance"]["config"]


def test_evaluate_cnn_uses_checkpoint(pipeline_dir):
    rc = run_cli("--seed", 7, "--out", pipeline_dir, "evaluate", "--method", "cnn")
    assert rc == 0
    head = json.loads(
        (pipeline_dir / "report-cnn-pm45.jsonl").read_text().splitlines()[0]
    )
    assert head["method"] == "cnn"
    assert head["samples"] == 5


def test_evaluate_plot_writes_histogram(pipeline_dir):
    rc = run_cli("--seed", 7, "--out", pipeline_dir, "evaluate",
                 "--method", "hough-pow", "--plot")
    assert rc == 0
    assert (pipeline_dir / "hist-hough-pow-pm45.png").stat().st_size > 0


def test_evaluate_classical_rejected_at_full360(tmp_path, capsys):
    out = synthesize_small(tmp_path / "full", level="full360")
    rc = run_cli("--out", out, "evaluate", "--method", "fourier")
    assert rc == 1
    assert "full360" in capsys.readouterr().err


def test_evaluate_unknown_method_fails(pipeline_dir, capsys):
    rc = run_cli("--out", pipeline_dir, "evaluate", "--method", "bogus")
    assert rc == 1
    assert "bogus" in capsys.readouterr().err


def test_estimate_prints_angle(pipeline_dir, capsys):
    img = sorted((pipeline_dir / "corpus").glob("*.png"))[0]
    rc = run_cli("estimate", img, "--method", "hough-var")
    assert rc == 0
    assert "estimated rotation" in capsys.readouterr().out


def test_predict_prints_orientation_and_tilt(pipeline_dir, capsys):
    img = sorted((pipeline_dir / "corpus").glob("*.png"))[0]
    rc = run_cli("predict", img, "--checkpoint", pipeline_dir / "model.ckpt")
    assert rc == 0
    text = capsys.readouterr().out
    assert "predicted orientation" in text and "tilt" in text


def test_correct_writes_counter_rotated_image(pipeline_dir, tmp_path, capsys):
    img = sorted((pipeline_dir / "corpus").glob("*.png"))[0]
    fixed = tmp_path / "fixed.png"
    rc = run_cli("correct", img, "--checkpoint", pipeline_dir / "model.ckpt",
                 "--output", fixed)
    assert rc == 0
    assert fixed.stat().st_size > 0
    assert "counter-rotated" in capsys.readouterr().out


def test_compare_tabulates_reports(pipeline_dir, capsys):
    run_cli("--seed", 7, "--out", pipeline_dir, "evaluate", "--method", "hough-var")
    run_cli("--seed", 7, "--out", pipeline_dir, "evaluate", "--method", "cnn")
    rc = run_cli("--seed", 7, "--out", pipeline_dir, "compare", "--reports",
                 pipeline_dir / "report-hough-var-pm45.jsonl",
                 pipeline_dir / "report-cnn-pm45.jsonl")
    assert rc == 0
    table = capsys.readouterr().out
    assert "hough-var" in table and "cnn" in table
    csv_text = (pipeline_dir / "comparison.csv").read_text()
    assert csv_text.startswith("# config: ")
    assert "pm45" in csv_text


def test_ablate_writes_grid(tmp_path):
    out = synthesize_small(tmp_path / "ab")
    rc = run_cli("--seed", 7, "--out", out, "ablate",
                 "--backbones", "tiny_desk_small", "--losses", "circular,l1",
                 "--epochs", 1)
    assert rc == 0
    text = (out / "ablation.txt").read_text()
    assert "tiny_desk_small" in text
    assert (out / "ablation.csv").exists()


def test_config_file_layering(tmp_path, capsys):
    cfg = tmp_path / "settings.json"
    cfg.write_text(json.dumps({"kind": "stripes", "n": 12, "image_size": 64,
                               "counts": [8, 2, 2]}))
    rc = run_cli("--config", cfg, "--seed", 5, "--out", tmp_path / "r", "synthesize")
    assert rc == 0
    head = json.loads((tmp_path / "r" / "manifest.jsonl").read_text().splitlines()[0])
    assert head["config"]["n"] == 12
    assert head["config"]["image_size"] == 64


def test_config_file_unknown_key_fails(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"mystery": 1}')
    rc = run_cli("--config", cfg, "--out", tmp_path / "r", "synthesize")
    assert rc == 1
    assert "mystery" in capsys.readouterr().err


def test_missing_corpus_fails_with_path(tmp_path, capsys):
    rc = run_cli("--out", tmp_path / "nowhere", "train")
    assert rc == 1
    assert "corpus" in capsys.readouterr().err


def test_pipeline_is_byte_identical_across_out_dirs(tmp_path):
    artifacts = ["manifest.jsonl", "train_log.jsonl",
                 "report-hough-var-pm45.jsonl", "report-cnn-pm45.jsonl",
                 "comparison.txt", "comparison.csv"]
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        synthesize_small(out, seed=11)
        train_small(out, seed=11)
        run_cli("--seed", 11, "--out", out, "evaluate", "--method", "hough-var")
        run_cli("--seed", 11, "--out", out, "evaluate", "--method", "cnn")
        run_cli("--seed", 11, "--out", out, "compare", "--reports",
                out / "report-hough-var-pm45.jsonl", out / "report-cnn-pm45.jsonl")
        outs.append(out)
    a, b = outs
    for name in artifacts:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    first_png = sorted(p.name for p in (a / "corpus").glob("*.png"))[0]
    assert (a / "corpus" / first_png).read_bytes() == (b / "corpus" / first_png).read_bytes()


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "upright.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "synthesize" in proc.stdout
