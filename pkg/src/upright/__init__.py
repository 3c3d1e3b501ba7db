"""Estimate the orientation angle of a rotated image (0-359 degrees) and
counter-rotate it upright.

Submodules:
    angles      circular (wrapped) angle arithmetic, loss, and subgradient
    rotation    bilinear rotation with fill or crop border policies
    synthgen    procedural upright test images (stripes, text blocks, scenes)
    datasets    rotation synthesis: corpora, difficulty levels, split manifests
    classical   Hough- and Fourier-based orientation estimators
    model       convolutional angle regressor, training loop, checkpoints
    evaluation  MAE reports, method comparison tables, ablation grids
    config      layered settings (defaults <- file <- flags)
    cli         the `upright` command-line tool
"""

from .angles import (
    circular_distance,
    circular_loss,
    circular_loss_subgradient,
    mean_absolute_angular_error,
    signed_shortest_delta,
    wrap_degrees,
    wrap_degrees_array,
)
from .classical import (
    EstimatorConfig,
    NoStructureError,
    estimate_fourier,
    estimate_fourier_detail,
    estimate_hough_pow,
    estimate_hough_var,
)
from .datasets import (
    DifficultyLevel,
    SourceImage,
    SplitManifest,
    build_split,
    load_corpus_dir,
    load_manifest,
    render_split,
    save_corpus,
    save_manifest,
    synthesize_oriented_corpus,
)
from .evaluation import (
    EvalReport,
    Method,
    MethodNotApplicableError,
    classical_method,
    compare,
    evaluate,
    function_method,
    load_report,
    model_method,
    plot_error_histogram,
    run_ablation,
    save_report,
)
from .model import (
    CheckpointError,
    ModelCheckpoint,
    TrainConfig,
    TrainingDivergedError,
    build_model,
    load_checkpoint,
    predict_angle,
    register_backbone,
    register_pretrained_large,
    save_checkpoint,
    train,
)
from .rotation import DegenerateCropError, fill_free_crop_box, rotate_image

__all__ = [
    "CheckpointError",
    "DegenerateCropError",
    "DifficultyLevel",
    "EstimatorConfig",
    "EvalReport",
    "Method",
    "MethodNotApplicableError",
    "ModelCheckpoint",
    "NoStructureError",
    "SourceImage",
    "SplitManifest",
    "TrainConfig",
    "TrainingDivergedError",
    "build_model",
    "build_split",
    "circular_distance",
    "circular_loss",
    "circular_loss_subgradient",
    "classical_method",
    "compare",
    "estimate_fourier",
    "estimate_fourier_detail",
    "estimate_hough_pow",
    "estimate_hough_var",
    "evaluate",
    "fill_free_crop_box",
    "function_method",
    "load_checkpoint",
    "load_corpus_dir",
    "load_manifest",
    "load_report",
    "mean_absolute_angular_error",
    "model_method",
    "plot_error_histogram",
    "predict_angle",
    "register_backbone",
    "register_pretrained_large",
    "rotate_image",
    "run_ablation",
    "save_checkpoint",
    "save_corpus",
    "save_manifest",
    "save_report",
    "signed_shortest_delta",
    "synthesize_oriented_corpus",
    "train",
    "wrap_degrees",
    "wrap_degrees_array",
]
