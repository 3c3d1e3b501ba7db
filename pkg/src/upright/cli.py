"""Command-line surface: synthesize, train, evaluate, estimate, compare,
ablate, predict, correct.

Every command reads settings from defaults <- --config file <- flags, echoes
the effective configuration into its artifacts (manifests, checkpoints,
reports, tables), and drives all randomness from the single --seed value, so
re-running a pipeline with one seed reproduces its outputs byte for byte.
Output locations are not part of the echoed config; two runs into different
--out directories still produce identical artifact bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import config as configuration
from .angles import signed_shortest_delta, wrap_degrees
from .classical import estimate_fourier_detail, estimate_hough_pow, estimate_hough_var
from .datasets import (
    DifficultyLevel,
    build_split,
    load_corpus_dir,
    load_manifest,
    read_discard_list,
    read_image,
    render_split,
    save_corpus,
    save_manifest,
    synthesize_oriented_corpus,
    write_image,
)
from .evaluation import (
    classical_method,
    compare,
    evaluate,
    load_report,
    model_method,
    plot_error_histogram,
    run_ablation,
    save_report,
)
from .model import build_model, load_checkpoint, predict_angle, save_checkpoint, train
from .rotation import rotate_image

CLASSICAL_METHODS = ("hough-var", "hough-pow", "fourier")


def _effective(args: argparse.Namespace) -> Dict[str, Any]:
    file_cfg = configuration.load_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k, None) for k in configuration.DEFAULTS}
    return configuration.effective_config(file_cfg, overrides)


def _provenance(command: str, cfg: Dict[str, Any]) -> Dict[str, Any]:
    """The config echoed into artifacts: everything except output locations."""
    echoed = {k: v for k, v in cfg.items() if k != "out"}
    return {"command": command, "config": echoed}


def _out_dir(cfg: Dict[str, Any]) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _level(cfg: Dict[str, Any]) -> DifficultyLevel:
    return DifficultyLevel.parse(cfg["level"])


def _load_inputs(args, cfg):
    out = _out_dir(cfg)
    corpus_dir = Path(args.corpus) if args.corpus else out / "corpus"
    manifest_path = Path(args.manifest) if args.manifest else out / "manifest.jsonl"
    corpus = load_corpus_dir(corpus_dir)
    manifest = load_manifest(manifest_path)
    return out, corpus, manifest


def _require_level_match(args, manifest) -> None:
    if args.level is not None and DifficultyLevel.parse(args.level) != manifest.level:
        raise ValueError(
            f"--level {args.level} conflicts with the manifest's level {manifest.level.value}"
        )


def _write_table(table, out: Path, stem: str, prov: Dict[str, Any]) -> List[Path]:
    header = "# config: " + json.dumps(prov, sort_keys=True) + "\n"
    txt = out / f"{stem}.txt"
    csvf = out / f"{stem}.csv"
    txt.write_text(header + table.render_text(), encoding="utf-8")
    csvf.write_text(header + table.to_csv(), encoding="utf-8")
    return [txt, csvf]


# ---------------------------------------------------------------------------
# commands


def cmd_synthesize(args) -> int:
    cfg = _effective(args)
    out = _out_dir(cfg)
    level = _level(cfg)
    n = int(cfg["n"])
    corpus = synthesize_oriented_corpus(n, cfg["kind"], int(cfg["seed"]), int(cfg["image_size"]))
    if cfg["counts"] is not None:
        counts = tuple(int(c) for c in cfg["counts"])
    else:
        held = max(1, n // 10)
        counts = (n - 2 * held, held, held)
    discards = read_discard_list(args.discard) if args.discard else ()
    manifest = build_split(corpus, level, int(cfg["seed"]), counts, discards)
    save_corpus(corpus, out / "corpus")
    save_manifest(manifest, out / "manifest.jsonl", provenance=_provenance("synthesize", cfg))
    print(f"wrote {len(corpus)} images to {out / 'corpus'}")
    print(f"wrote manifest ({'/'.join(str(c) for c in counts)} split) to {out / 'manifest.jsonl'}")
    return 0


def cmd_train(args) -> int:
    cfg = _effective(args)
    out, corpus, manifest = _load_inputs(args, cfg)
    _require_level_match(args, manifest)
    cfg["level"] = manifest.level.value
    tcfg = configuration.train_config(cfg)
    model = build_model(cfg["backbone"], seed=tcfg.seed)
    prov = _provenance("train", cfg)
    log_path = out / "train_log.jsonl"
    if log_path.exists():
        log_path.unlink()
    with open(log_path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"record": "config", **prov}, sort_keys=True) + "\n")
    ckpt = train(model, corpus, manifest, tcfg, log_path=log_path)
    ckpt.provenance = prov
    ckpt_path = Path(args.checkpoint_out) if args.checkpoint_out else out / "model.ckpt"
    save_checkpoint(ckpt, ckpt_path)
    best = min((r["val_mae"] for r in ckpt.history), default=float("nan"))
    print(f"trained {cfg['backbone']} ({tcfg.loss} loss, {tcfg.epochs} epochs) at {manifest.level.value}")
    print(f"best val MAE: {best:.3f} degrees")
    print(f"wrote checkpoint to {ckpt_path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _effective(args)
    out, corpus, manifest = _load_inputs(args, cfg)
    _require_level_match(args, manifest)
    testset = render_split(corpus, manifest, args.split, policy=cfg["rotation_policy"])
    if cfg["method"] == "cnn":
        ckpt_path = Path(args.checkpoint) if args.checkpoint else out / "model.ckpt"
        method = model_method(load_checkpoint(ckpt_path), name="cnn")
    elif cfg["method"] in CLASSICAL_METHODS:
        method = classical_method(cfg["method"], configuration.estimator_config(cfg))
    else:
        raise ValueError(f"unknown method {cfg['method']!r}; choose cnn or one of {CLASSICAL_METHODS}")
    report = evaluate(method, testset)
    report_path = out / f"report-{method.name}-{manifest.level.value}.jsonl"
    save_report(report, report_path, provenance=_provenance("evaluate", cfg))
    print(f"{method.name} at {manifest.level.value}: MAE {report.mae:.3f} degrees "
          f"({len(report.per_sample)} samples, {report.failures} failures)")
    print(f"wrote report to {report_path}")
    if args.plot:
        plot_path = out / f"hist-{method.name}-{manifest.level.value}.png"
        plot_error_histogram(report, plot_path)
        print(f"wrote histogram to {plot_path}")
    return 0


def cmd_estimate(args) -> int:
    cfg = _effective(args)
    if cfg["method"] not in CLASSICAL_METHODS:
        raise ValueError(f"estimate supports {CLASSICAL_METHODS}; for a trained model use predict")
    img = read_image(args.image)
    est_cfg = configuration.estimator_config(cfg)
    if cfg["method"] == "fourier":
        est, ratio = estimate_fourier_detail(img, est_cfg)
        if ratio < est_cfg.fourier_min_peak_ratio:
            print(
                f"warning: weak spectral peak (ratio {ratio:.2f} < {est_cfg.fourier_min_peak_ratio}); "
                "estimate is unreliable",
                file=sys.stderr,
            )
    else:
        fn = estimate_hough_var if cfg["method"] == "hough-var" else estimate_hough_pow
        est = fn(img, est_cfg)
    print(f"{args.image}: estimated rotation {est:+.2f} degrees ({cfg['method']})")
    return 0


def cmd_predict(args) -> int:
    cfg = _effective(args)
    ckpt = load_checkpoint(args.checkpoint)
    img = read_image(args.image)
    pred = predict_angle(ckpt, img)
    tilt = signed_shortest_delta(pred, 0.0)
    print(f"{args.image}: predicted orientation {pred:.2f} degrees (tilt {tilt:+.2f})")
    return 0


def cmd_correct(args) -> int:
    cfg = _effective(args)
    ckpt = load_checkpoint(args.checkpoint)
    img = read_image(args.image)
    pred = predict_angle(ckpt, img)
    back = signed_shortest_delta(0.0, pred)
    corrected = rotate_image(img, back, policy=cfg["rotation_policy"])
    write_image(args.output, corrected)
    print(f"{args.image}: predicted orientation {pred:.2f} degrees; "
          f"counter-rotated by {back:+.2f} ({cfg['rotation_policy']})")
    print(f"wrote corrected image to {args.output}")
    return 0


def cmd_compare(args) -> int:
    cfg = _effective(args)
    out = _out_dir(cfg)
    reports = [load_report(p) for p in args.reports]
    table = compare(reports)
    paths = _write_table(table, out, "comparison", _provenance("compare", cfg))
    print(table.render_text(), end="")
    print(f"wrote {paths[0]} and {paths[1]}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _effective(args)
    out, corpus, manifest = _load_inputs(args, cfg)
    _require_level_match(args, manifest)
    cfg["level"] = manifest.level.value
    base = configuration.train_config(cfg)
    backbones = [b.strip() for b in args.backbones.split(",") if b.strip()]
    losses = [l.strip() for l in args.losses.split(",") if l.strip()]
    grid = [(b, l) for b in backbones for l in losses]
    table = run_ablation(grid, corpus, manifest, base, log_dir=out)
    paths = _write_table(table, out, "ablation", _provenance("ablate", cfg))
    print(table.render_text(), end="")
    print(f"wrote {paths[0]} and {paths[1]}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="upright",
        description="Estimate image orientation angles (0-359) and correct them.",
    )
    parser.add_argument("--config", help="JSON settings file; flags override it")
    parser.add_argument("--seed", type=int, help="master seed for all randomness")
    parser.add_argument("--out", help="output directory (default: runs)")
    parser.add_argument("--level", choices=[l.value for l in DifficultyLevel],
                        help="difficulty level: pm30, pm45, or full360")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="generate an upright corpus and a split manifest")
    p.add_argument("--kind", help="stripes, text_blocks, gradient_scene, or mixed")
    p.add_argument("--n", type=int, help="corpus size")
    p.add_argument("--counts", type=_parse_counts, help="TRAIN,VAL,TEST entry counts")
    p.add_argument("--image-size", type=int, dest="image_size", help="side length in pixels")
    p.add_argument("--discard", help="file listing source ids to exclude, one per line")
    p.set_defaults(fn=cmd_synthesize)

    p = sub.add_parser("train", help="train the regressor on a synthesized dataset")
    p.add_argument("--corpus", help="corpus directory (default: OUT/corpus)")
    p.add_argument("--manifest", help="manifest path (default: OUT/manifest.jsonl)")
    p.add_argument("--backbone", help="tiny_desk, tiny_desk_small, or a registered name")
    p.add_argument("--loss", choices=["circular", "l1"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--checkpoint-out", dest="checkpoint_out", help="where to write the checkpoint")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="score a method on a manifest split")
    p.add_argument("--method", help="cnn, hough-var, hough-pow, or fourier")
    p.add_argument("--corpus", help="corpus directory (default: OUT/corpus)")
    p.add_argument("--manifest", help="manifest path (default: OUT/manifest.jsonl)")
    p.add_argument("--checkpoint", help="checkpoint for --method cnn (default: OUT/model.ckpt)")
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--plot", action="store_true", help="also write an error histogram PNG")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("estimate", help="classical estimate for one image")
    p.add_argument("image", help="path to the image")
    p.add_argument("--method", help="hough-var, hough-pow, or fourier")
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("predict", help="model prediction for one image")
    p.add_argument("image", help="path to the image")
    p.add_argument("--checkpoint", required=True, help="trained checkpoint path")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("correct", help="counter-rotate one image upright")
    p.add_argument("image", help="path to the image")
    p.add_argument("--checkpoint", required=True, help="trained checkpoint path")
    p.add_argument("--output", required=True, help="where to write the corrected image")
    p.add_argument("--rotation-policy", dest="rotation_policy", choices=["fill_black", "center_crop"])
    p.set_defaults(fn=cmd_correct)

    p = sub.add_parser("compare", help="tabulate several evaluation reports")
    p.add_argument("--reports", nargs="+", required=True, help="report files from evaluate")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("ablate", help="train a backbone-by-loss grid and tabulate test MAE")
    p.add_argument("--corpus", help="corpus directory (default: OUT/corpus)")
    p.add_argument("--manifest", help="manifest path (default: OUT/manifest.jsonl)")
    p.add_argument("--backbones", default="tiny_desk,tiny_desk_small", help="comma-separated names")
    p.add_argument("--losses", default="circular,l1", help="comma-separated loss names")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.set_defaults(fn=cmd_ablate)
    return parser


def _parse_counts(text: str):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"counts must be TRAIN,VAL,TEST; got {text!r}")
    return [int(p) for p in parts]


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # surface module errors as clean CLI failures
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
