"""Learned angle regressor: conv backbone + FC head trained under Adadelta.

The head is fixed at three hidden layers (512/256/64, rectified-linear) and a
single linear output node that emits an unwrapped degree value. Backbones are
pluggable feature extractors behind a small registry; `tiny_desk` trains from
scratch on a CPU in minutes, while `pretrained_large` wraps an externally
supplied extractor (e.g. an Xception-class network) and is frozen by default.

Two losses are supported. The circular loss scores the wrapped prediction by
shortest arc, so 1 vs 359 costs 2; plain L1 on the same pair costs 358, which
is why it falls apart on full-circle data. On bounded tilts (every |t - p|
below 180) the two losses coincide exactly. The circular loss backpropagates
the true subgradient: -sign of the signed shortest delta, zero at the kinks.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from .angles import circular_distance, wrap_degrees
from .datasets import (
    DifficultyLevel,
    SourceImage,
    SplitManifest,
    preprocess_for_model,
    render_split,
)

CHECKPOINT_FORMAT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""


class CheckpointError(RuntimeError):
    """Raised when a checkpoint file cannot be read back."""


@dataclass(frozen=True)
class HeadSpec:
    """Three rectified-linear hidden layers into one linear output node."""

    fc_sizes: Tuple[int, int, int] = (512, 256, 64)
    output_nodes: int = 1

    def __post_init__(self):
        if len(self.fc_sizes) != 3 or any(s < 1 for s in self.fc_sizes):
            raise ValueError(f"head needs exactly 3 positive hidden widths, got {self.fc_sizes}")
        if self.output_nodes != 1:
            raise ValueError(f"head output must be a single node, got {self.output_nodes}")


@dataclass(frozen=True)
class BackboneSpec:
    """A named feature extractor: image tensor in, flat feature vector out.

    weights_origin records whether the extractor arrives pretrained or is
    initialized randomly; trainable says whether its parameters receive
    gradient updates (pretrained extractors default to frozen).
    """

    name: str
    feature_dim: int
    input_size: int
    weights_origin: str = "random"
    trainable: bool = True

    def __post_init__(self):
        if self.feature_dim < 1 or self.input_size < 8:
            raise ValueError(f"bad backbone dims: feature_dim={self.feature_dim}, input_size={self.input_size}")
        if self.weights_origin not in ("random", "pretrained"):
            raise ValueError(f"weights_origin must be 'random' or 'pretrained', got {self.weights_origin!r}")


@dataclass(frozen=True)
class TrainConfig:
    level: DifficultyLevel
    loss: str = "circular"
    learning_rate: float = 0.1
    decay_rho: float = 0.95
    epsilon: float = 1e-7
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.loss not in ("circular", "l1"):
            raise ValueError(f"loss must be 'circular' or 'l1', got {self.loss!r}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")


# ---------------------------------------------------------------------------
# losses


class _CircularDistance(torch.autograd.Function):
    """Element-wise shortest-arc distance with its exact subgradient.

    Autograd cannot differentiate through the min/mod formulation cleanly, so
    the backward pass hand-codes d(dist)/dp = -sign(delta), zero at both
    kinks (coincident angles and antipodes), where delta is the signed
    shortest path from the wrapped prediction to the truth.
    """

    @staticmethod
    def forward(ctx, truth_deg, pred_deg):
        delta = torch.remainder(truth_deg - pred_deg, 360.0)
        delta = torch.where(delta > 180.0, delta - 360.0, delta)
        grad_pred = -torch.sign(delta)
        grad_pred = torch.where(delta.abs() == 180.0, torch.zeros_like(delta), grad_pred)
        ctx.save_for_backward(grad_pred)
        return delta.abs()

    @staticmethod
    def backward(ctx, grad_output):
        (grad_pred,) = ctx.saved_tensors
        return None, grad_output * grad_pred


def circular_loss_torch(truth_deg: torch.Tensor, raw_pred: torch.Tensor) -> torch.Tensor:
    """Mean shortest-arc distance between truths and wrapped raw predictions."""
    return _CircularDistance.apply(truth_deg, raw_pred).mean()


def l1_loss_torch(truth_deg: torch.Tensor, raw_pred: torch.Tensor) -> torch.Tensor:
    """Plain mean absolute error on unwrapped degree values."""
    return (truth_deg - raw_pred).abs().mean()


def loss_for_config(cfg: TrainConfig) -> Callable[[torch.Tensor, torch.Tensor], torch.Tensor]:
    return circular_loss_torch if cfg.loss == "circular" else l1_loss_torch


# ---------------------------------------------------------------------------
# backbones


def _conv_block(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(nn.Conv2d(cin, cout, 3, stride=2, padding=1), nn.ReLU(inplace=True))


class _ConvStack(nn.Module):
    def __init__(self, widths: Sequence[int]):
        super().__init__()
        chans = [3, *widths]
        self.blocks = nn.Sequential(*[_conv_block(a, b) for a, b in zip(chans, chans[1:])])
        self.pool = nn.AdaptiveAvgPool2d(1)

    def forward(self, x):
        return self.pool(self.blocks(x)).flatten(1)


_BACKBONES: Dict[str, Tuple[BackboneSpec, Callable[[], nn.Module]]] = {}


def register_backbone(spec: BackboneSpec, builder: Callable[[], nn.Module]) -> None:
    """Add a feature extractor to the registry under spec.name.

    The builder must return a module mapping (N, 3, input_size, input_size)
    tensors to (N, feature_dim) features. This is the injection point for
    large pretrained extractors, which are deliberately not bundled here.
    """
    _BACKBONES[spec.name] = (spec, builder)


def backbone_spec(name: str) -> BackboneSpec:
    if name not in _BACKBONES:
        raise ValueError(f"unknown backbone {name!r}; registered: {sorted(_BACKBONES)}")
    return _BACKBONES[name][0]


register_backbone(
    BackboneSpec(name="tiny_desk", feature_dim=128, input_size=64),
    lambda: _ConvStack([16, 32, 64, 128]),
)
register_backbone(
    BackboneSpec(name="tiny_desk_small", feature_dim=32, input_size=64),
    lambda: _ConvStack([8, 16, 32]),
)


def register_pretrained_large(builder: Callable[[], nn.Module], feature_dim: int = 2048, input_size: int = 299) -> None:
    """Attach an externally supplied pretrained extractor as 'pretrained_large'.

    The extractor stays frozen during training; only the head learns. Nothing
    is downloaded by this package itself.
    """
    register_backbone(
        BackboneSpec(
            name="pretrained_large",
            feature_dim=feature_dim,
            input_size=input_size,
            weights_origin="pretrained",
            trainable=False,
        ),
        builder,
    )


# ---------------------------------------------------------------------------
# model


class AngleRegressor(nn.Module):
    """Backbone features -> FC 512/256/64 -> one linear degree output."""

    def __init__(self, spec: BackboneSpec, head: HeadSpec, extractor: nn.Module):
        super().__init__()
        self.spec = spec
        self.head_spec = head
        self.backbone = extractor
        widths = [spec.feature_dim, *head.fc_sizes]
        layers: List[nn.Module] = []
        for a, b in zip(widths, widths[1:]):
            layers += [nn.Linear(a, b), nn.ReLU(inplace=True)]
        layers.append(nn.Linear(widths[-1], head.output_nodes))
        self.head = nn.Sequential(*layers)
        if not spec.trainable:
            for p in self.backbone.parameters():
                p.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        single = x.ndim == 3
        if single:
            x = x.unsqueeze(0)
        out = self.head(self.backbone(x))
        return out.reshape(1) if single else out


def build_model(
    backbone: str | BackboneSpec = "tiny_desk",
    head: HeadSpec | None = None,
    seed: int = 0,
) -> AngleRegressor:
    """Construct the regressor with seed-deterministic initial weights."""
    spec = backbone_spec(backbone) if isinstance(backbone, str) else backbone
    if isinstance(backbone, BackboneSpec) and backbone.name not in _BACKBONES:
        raise ValueError(f"backbone spec {backbone.name!r} is not registered")
    torch.manual_seed(seed)
    extractor = _BACKBONES[spec.name][1]()
    model = AngleRegressor(spec, head or HeadSpec(), extractor)
    probe = torch.zeros(1, 3, spec.input_size, spec.input_size)
    with torch.no_grad():
        feat = model.backbone(probe)
    if feat.shape != (1, spec.feature_dim):
        raise ValueError(
            f"backbone {spec.name!r} produced features {tuple(feat.shape)}, "
            f"expected (1, {spec.feature_dim})"
        )
    return model


def image_to_tensor(img: np.ndarray, input_size: int) -> torch.Tensor:
    """uint8 RGB image -> normalized (3, S, S) float tensor."""
    arr = preprocess_for_model(img, (input_size, input_size))
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1)))


# ---------------------------------------------------------------------------
# training


@dataclass
class ModelCheckpoint:
    """Weights plus everything needed to rebuild and audit the model."""

    backbone: BackboneSpec
    head: HeadSpec
    train_config: TrainConfig
    history: List[Dict[str, float]]
    state: Dict[str, np.ndarray]
    format_version: int = CHECKPOINT_FORMAT_VERSION
    provenance: Dict = None

    def __post_init__(self):
        if self.provenance is None:
            self.provenance = {}

    def build(self) -> AngleRegressor:
        model = build_model(self.backbone, self.head, seed=self.train_config.seed)
        model.load_state_dict({k: torch.from_numpy(v.copy()) for k, v in self.state.items()})
        model.eval()
        return model


def _snapshot_state(model: nn.Module) -> Dict[str, np.ndarray]:
    return {k: v.detach().cpu().numpy().copy() for k, v in model.state_dict().items()}


def _targets_for(level: DifficultyLevel, samples) -> Tuple[torch.Tensor, torch.Tensor]:
    """(loss target, wrapped truth). Bounded levels regress the signed angle
    so the head works a symmetric range; the full circle regresses the
    wrapped angle and lets the circular loss own the seam."""
    wrapped = torch.tensor([s.true_angle for s in samples], dtype=torch.float32)
    if level is DifficultyLevel.FULL360:
        return wrapped, wrapped
    signed = torch.tensor([s.signed_angle for s in samples], dtype=torch.float32)
    return signed, wrapped


def _stack_images(samples, input_size: int) -> torch.Tensor:
    return torch.stack([image_to_tensor(s.image, input_size) for s in samples])


def _val_mae(model: nn.Module, images: torch.Tensor, wrapped: torch.Tensor, batch: int) -> float:
    model.eval()
    errs: List[float] = []
    with torch.no_grad():
        for i in range(0, len(images), batch):
            preds = model(images[i : i + batch]).reshape(-1)
            for t, p in zip(wrapped[i : i + batch].tolist(), preds.tolist()):
                errs.append(circular_distance(t, wrap_degrees(p)))
    model.train()
    return float(np.mean(errs))


def train(
    model: AngleRegressor,
    corpus: Sequence[SourceImage] | Dict[str, SourceImage],
    manifest: SplitManifest,
    cfg: TrainConfig,
    log_path: str | Path | None = None,
) -> ModelCheckpoint:
    """Minibatch Adadelta over the manifest's train split.

    Records per-epoch {epoch, train_loss, val_mae} (also appended to log_path
    as JSON lines when given) and returns the checkpoint whose weights scored
    the best validation MAE. Zero epochs returns the initial weights with an
    empty history.
    """
    if manifest.level != cfg.level:
        raise ValueError(f"manifest level {manifest.level.value} != config level {cfg.level.value}")
    train_samples = render_split(corpus, manifest, "train")
    val_samples = render_split(corpus, manifest, "val")
    if not train_samples or not val_samples:
        raise ValueError(
            f"need non-empty train and val splits, got {len(train_samples)}/{len(val_samples)}"
        )
    size = model.spec.input_size
    x_train = _stack_images(train_samples, size)
    y_train, _ = _targets_for(cfg.level, train_samples)
    x_val = _stack_images(val_samples, size)
    _, y_val_wrapped = _targets_for(cfg.level, val_samples)

    loss_fn = loss_for_config(cfg)
    params = [p for p in model.parameters() if p.requires_grad]
    opt = torch.optim.Adadelta(params, lr=cfg.learning_rate, rho=cfg.decay_rho, eps=cfg.epsilon)
    gen = torch.Generator().manual_seed(cfg.seed)

    history: List[Dict[str, float]] = []
    best_state = _snapshot_state(model)
    best_mae = float("inf")
    log_file = open(log_path, "a", encoding="utf-8") if log_path is not None else None
    try:
        model.train()
        for epoch in range(cfg.epochs):
            order = torch.randperm(len(x_train), generator=gen)
            total, seen = 0.0, 0
            for i in range(0, len(order), cfg.batch_size):
                idx = order[i : i + cfg.batch_size]
                opt.zero_grad()
                preds = model(x_train[idx]).reshape(-1)
                loss = loss_fn(y_train[idx], preds)
                if not torch.isfinite(loss):
                    raise TrainingDivergedError(f"non-finite training loss at epoch {epoch}")
                loss.backward()
                opt.step()
                total += loss.item() * len(idx)
                seen += len(idx)
            record = {
                "epoch": epoch,
                "train_loss": total / seen,
                "val_mae": _val_mae(model, x_val, y_val_wrapped, cfg.batch_size),
            }
            history.append(record)
            if log_file is not None:
                log_file.write(json.dumps(record, sort_keys=True) + "\n")
                log_file.flush()
            if record["val_mae"] < best_mae:
                best_mae = record["val_mae"]
                best_state = _snapshot_state(model)
    finally:
        if log_file is not None:
            log_file.close()
    return ModelCheckpoint(
        backbone=model.spec,
        head=model.head_spec,
        train_config=cfg,
        history=history,
        state=best_state,
    )


def predict_angle(model_or_checkpoint: AngleRegressor | ModelCheckpoint, img: np.ndarray) -> float:
    """Wrapped [0, 360) orientation estimate for one image."""
    model = model_or_checkpoint
    if isinstance(model_or_checkpoint, ModelCheckpoint):
        model = model_or_checkpoint.build()
    model.eval()
    with torch.no_grad():
        raw = float(model(image_to_tensor(img, model.spec.input_size)).reshape(()))
    return wrap_degrees(raw)


# ---------------------------------------------------------------------------
# checkpoint file format: a zip holding meta.json + weights.npz


def save_checkpoint(ckpt: ModelCheckpoint, path: str | Path) -> None:
    meta = {
        "format_version": ckpt.format_version,
        "backbone": {
            "name": ckpt.backbone.name,
            "feature_dim": ckpt.backbone.feature_dim,
            "input_size": ckpt.backbone.input_size,
            "weights_origin": ckpt.backbone.weights_origin,
            "trainable": ckpt.backbone.trainable,
        },
        "head": {"fc_sizes": list(ckpt.head.fc_sizes), "output_nodes": ckpt.head.output_nodes},
        "train_config": {
            "level": ckpt.train_config.level.value,
            "loss": ckpt.train_config.loss,
            "learning_rate": ckpt.train_config.learning_rate,
            "decay_rho": ckpt.train_config.decay_rho,
            "epsilon": ckpt.train_config.epsilon,
            "batch_size": ckpt.train_config.batch_size,
            "epochs": ckpt.train_config.epochs,
            "seed": ckpt.train_config.seed,
        },
        "history": ckpt.history,
        "provenance": ckpt.provenance,
    }
    buf = io.BytesIO()
    np.savez(buf, **ckpt.state)
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("meta.json", json.dumps(meta, sort_keys=True, indent=2))
        zf.writestr("weights.npz", buf.getvalue())


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    try:
        with zipfile.ZipFile(path) as zf:
            meta = json.loads(zf.read("meta.json"))
            with np.load(io.BytesIO(zf.read("weights.npz"))) as npz:
                state = {k: npz[k] for k in npz.files}
    except (OSError, zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if meta.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format_version {meta.get('format_version')}, "
            f"this build reads {CHECKPOINT_FORMAT_VERSION}"
        )
    b = meta["backbone"]
    t = meta["train_config"]
    return ModelCheckpoint(
        backbone=BackboneSpec(
            name=b["name"],
            feature_dim=b["feature_dim"],
            input_size=b["input_size"],
            weights_origin=b["weights_origin"],
            trainable=b["trainable"],
        ),
        head=HeadSpec(fc_sizes=tuple(meta["head"]["fc_sizes"]), output_nodes=meta["head"]["output_nodes"]),
        train_config=TrainConfig(
            level=DifficultyLevel.parse(t["level"]),
            loss=t["loss"],
            learning_rate=t["learning_rate"],
            decay_rho=t["decay_rho"],
            epsilon=t["epsilon"],
            batch_size=t["batch_size"],
            epochs=t["epochs"],
            seed=t["seed"],
        ),
        history=meta["history"],
        state=state,
        format_version=meta["format_version"],
        provenance=meta.get("provenance", {}),
    )
