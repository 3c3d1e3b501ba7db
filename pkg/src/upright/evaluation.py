"""Evaluation harness: circular-error reports, comparison tables, ablations.

A "method" here is anything that maps an image to a wrapped angle estimate,
tagged with the difficulty levels it is valid for. The line-based estimators
(Hough variance/power, Fourier) only ever see bounded tilts: their output is
180-degree ambiguous, so running them on full-circle data would produce
numbers that look meaningful and are not. evaluate() enforces that instead
of trusting callers to remember.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .angles import circular_distance, wrap_degrees
from .classical import (
    EstimatorConfig,
    NoStructureError,
    estimate_fourier,
    estimate_hough_pow,
    estimate_hough_var,
)
from .datasets import DifficultyLevel, RotatedSample, SplitManifest, render_split
from .model import ModelCheckpoint, TrainConfig, build_model, predict_angle, train

BOUNDED_LEVELS = frozenset({DifficultyLevel.PM30, DifficultyLevel.PM45})

_CLASSICAL_FNS: Dict[str, Callable] = {
    "hough-var": estimate_hough_var,
    "hough-pow": estimate_hough_pow,
    "fourier": estimate_fourier,
}


class MethodNotApplicableError(ValueError):
    """The method cannot produce meaningful estimates at this level."""


@dataclass(frozen=True)
class Method:
    """A named predictor plus the difficulty levels it may be scored on.

    levels=None means unrestricted (learned models and test oracles); the
    predictor returns a wrapped angle and may raise NoStructureError for
    images it cannot read, which evaluate() counts as failures.
    """

    name: str
    predict: Callable[[np.ndarray], float]
    levels: Optional[FrozenSet[DifficultyLevel]] = None

    def applicable_at(self, level: DifficultyLevel) -> bool:
        return self.levels is None or level in self.levels


def classical_method(name: str, cfg: EstimatorConfig | None = None) -> Method:
    """hough-var / hough-pow / fourier as a bounded-levels-only Method."""
    if name not in _CLASSICAL_FNS:
        raise ValueError(f"unknown classical method {name!r}; choose from {sorted(_CLASSICAL_FNS)}")
    fn = _CLASSICAL_FNS[name]
    estimator_cfg = cfg or EstimatorConfig()
    return Method(
        name=name,
        predict=lambda img: wrap_degrees(fn(img, estimator_cfg)),
        levels=BOUNDED_LEVELS,
    )


def model_method(checkpoint: ModelCheckpoint, name: str | None = None) -> Method:
    """A trained checkpoint as a Method, valid only at its training level."""
    level = checkpoint.train_config.level
    model = checkpoint.build()
    return Method(
        name=name or f"cnn-{level.value}",
        predict=lambda img: predict_angle(model, img),
        levels=frozenset({level}),
    )


def function_method(name: str, fn: Callable[[np.ndarray], float], levels=None) -> Method:
    """Wrap an arbitrary image->degrees function (oracles, constants)."""
    return Method(name=name, predict=fn, levels=None if levels is None else frozenset(levels))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class PerSampleError:
    source_id: str
    true_angle: float
    predicted_angle: float
    error: float


@dataclass
class EvalReport:
    method: str
    level: DifficultyLevel
    per_sample: List[PerSampleError]
    failures: int = 0

    @property
    def mae(self) -> float:
        if not self.per_sample:
            raise ValueError(f"report {self.method}@{self.level.value} scored no samples")
        return float(np.mean([s.error for s in self.per_sample]))


def evaluate(method: Method, testset: Sequence[RotatedSample]) -> EvalReport:
    """Score every sample by circular distance; failures counted, not imputed."""
    if not testset:
        raise ValueError("cannot evaluate on an empty testset")
    levels = {s.level for s in testset}
    if len(levels) > 1:
        raise ValueError(f"testset mixes difficulty levels: {sorted(l.value for l in levels)}")
    level = testset[0].level
    if not method.applicable_at(level):
        raise MethodNotApplicableError(
            f"method {method.name!r} is not applicable at {level.value} "
            f"(valid levels: {sorted(l.value for l in method.levels)})"
        )
    per_sample: List[PerSampleError] = []
    failures = 0
    for s in testset:
        try:
            pred = wrap_degrees(method.predict(s.image))
        except NoStructureError:
            failures += 1
            continue
        per_sample.append(
            PerSampleError(
                source_id=s.source_id,
                true_angle=s.true_angle,
                predicted_angle=pred,
                error=circular_distance(s.true_angle, pred),
            )
        )
    return EvalReport(method=method.name, level=level, per_sample=per_sample, failures=failures)


def save_report(
    report: EvalReport, path: str | Path, provenance: Mapping[str, Any] | None = None
) -> None:
    """Line-delimited JSON: one summary record, then one record per sample.

    `provenance` (e.g. the settings that produced the report) is echoed into
    the summary record so the file is self-describing.
    """
    with open(path, "w", encoding="utf-8") as f:
        summary = {
            "record": "summary",
            "method": report.method,
            "level": report.level.value,
            "mae": report.mae,
            "failures": report.failures,
            "samples": len(report.per_sample),
        }
        if provenance:
            summary["provenance"] = dict(provenance)
        f.write(json.dumps(summary, sort_keys=True) + "\n")
        for s in report.per_sample:
            f.write(
                json.dumps(
                    {
                        "record": "sample",
                        "source_id": s.source_id,
                        "true_angle": s.true_angle,
                        "predicted_angle": s.predicted_angle,
                        "error": s.error,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_report(path: str | Path) -> EvalReport:
    with open(path, encoding="utf-8") as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines or lines[0].get("record") != "summary":
        raise ValueError(f"report {path} does not start with a summary record")
    head = lines[0]
    per_sample = [
        PerSampleError(
            source_id=r["source_id"],
            true_angle=r["true_angle"],
            predicted_angle=r["predicted_angle"],
            error=r["error"],
        )
        for r in lines[1:]
        if r.get("record") == "sample"
    ]
    return EvalReport(
        method=head["method"],
        level=DifficultyLevel.parse(head["level"]),
        per_sample=per_sample,
        failures=head["failures"],
    )


# ---------------------------------------------------------------------------
# comparison tables


@dataclass
class ComparisonTable:
    """A small grid of MAE values with absent and failed cells kept distinct.

    compare() uses difficulty levels as rows and methods as columns; the
    ablation uses backbones as rows and losses as columns. Absent cells
    (method not applicable) render as '-', failed cells as 'failed'.
    """

    row_labels: List[str]
    col_labels: List[str]
    cells: Dict[Tuple[str, str], float]
    failed: List[Tuple[str, str]] = field(default_factory=list)
    corner: str = ""

    def cell(self, row: str, col: str) -> Optional[float]:
        return self.cells.get((row, col))

    def render_text(self) -> str:
        headers = [self.corner, *self.col_labels]
        rows = []
        for r in self.row_labels:
            cells = []
            for c in self.col_labels:
                if (r, c) in self.cells:
                    cells.append(f"{self.cells[(r, c)]:.2f}")
                elif (r, c) in self.failed:
                    cells.append("failed")
                else:
                    cells.append("-")
            rows.append([r, *cells])
        widths = [max(len(row[i]) for row in [headers, *rows]) for i in range(len(headers))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
        lines.append("  ".join("-" * w for w in widths))
        for row in rows:
            lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([self.corner, *self.col_labels])
        for r in self.row_labels:
            row = [r]
            for c in self.col_labels:
                if (r, c) in self.cells:
                    row.append(f"{self.cells[(r, c)]:.6f}")
                elif (r, c) in self.failed:
                    row.append("failed")
                else:
                    row.append("")
            writer.writerow(row)
        return buf.getvalue()


_LEVEL_ORDER = [DifficultyLevel.PM30, DifficultyLevel.PM45, DifficultyLevel.FULL360]


def compare(reports: Sequence[EvalReport]) -> ComparisonTable:
    """Levels-by-methods MAE grid from one report per (method, level) pair."""
    if not reports:
        raise ValueError("no reports to compare")
    seen = set()
    for r in reports:
        key = (r.method, r.level)
        if key in seen:
            raise ValueError(f"duplicate report for method {r.method!r} at {r.level.value}")
        seen.add(key)
    levels = [l for l in _LEVEL_ORDER if any(r.level is l for r in reports)]
    methods: List[str] = []
    for r in reports:
        if r.method not in methods:
            methods.append(r.method)
    cells = {(r.level.value, r.method): r.mae for r in reports}
    return ComparisonTable(
        row_labels=[l.value for l in levels],
        col_labels=methods,
        cells=cells,
        corner="level",
    )


def run_ablation(
    grid: Sequence[Tuple[str, str]],
    corpus,
    manifest: SplitManifest,
    base_cfg: TrainConfig,
    log_dir: str | Path | None = None,
) -> ComparisonTable:
    """Train every (backbone, loss) cell on the same data and tabulate test MAE.

    All cells share the manifest, seed, and epoch budget from base_cfg, so
    differences in the table are attributable to the grid axes alone. A cell
    whose training fails is marked failed; the rest of the grid still runs.
    """
    if not grid:
        raise ValueError("ablation grid is empty")
    testset = render_split(corpus, manifest, "test")
    if not testset:
        raise ValueError("manifest has no test split to score the ablation on")
    backbones: List[str] = []
    losses: List[str] = []
    for b, l in grid:
        if b not in backbones:
            backbones.append(b)
        if l not in losses:
            losses.append(l)
    cells: Dict[Tuple[str, str], float] = {}
    failed: List[Tuple[str, str]] = []
    for backbone, loss in grid:
        cfg = replace(base_cfg, loss=loss)
        log_path = None
        if log_dir is not None:
            log_path = Path(log_dir) / f"ablation-{backbone}-{loss}.jsonl"
        try:
            model = build_model(backbone, seed=cfg.seed)
            ckpt = train(model, corpus, manifest, cfg, log_path=log_path)
            report = evaluate(model_method(ckpt, name=f"{backbone}+{loss}"), testset)
            cells[(backbone, loss)] = report.mae
        except (ValueError, RuntimeError):
            failed.append((backbone, loss))
    return ComparisonTable(
        row_labels=backbones,
        col_labels=losses,
        cells=cells,
        failed=failed,
        corner="backbone",
    )


def plot_error_histogram(report: EvalReport, path: str | Path) -> None:
    """PNG histogram of per-sample circular errors, 1-degree bins over 0-180."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    errors = [s.error for s in report.per_sample]
    if not errors:
        raise ValueError("report has no scored samples to plot")
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.hist(errors, bins=np.arange(0.0, 181.0, 1.0), color="#3465a4")
    ax.set_xlabel("circular error (degrees)")
    ax.set_ylabel("samples")
    ax.set_title(f"{report.method} at {report.level.value}: MAE {report.mae:.2f} deg")
    ax.set_xlim(0, 180)
    fig.tight_layout()
    try:
        fig.savefig(path, dpi=110)
    finally:
        plt.close(fig)
