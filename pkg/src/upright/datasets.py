"""Labeled rotation datasets: difficulty levels, split manifests, rendering.

A dataset is a corpus of upright source images plus a manifest that assigns
each used source to one split and records the signed rotation to apply. The
manifest carries everything needed to re-render the samples exactly, and the
per-entry angles come from rng streams keyed by (seed, entry index), so a
manifest built with the same inputs is byte-identical no matter how the
generation is batched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import cv2
import numpy as np

from .angles import wrap_degrees
from .rotation import rotate_image
from .synthgen import CORPUS_KINDS, DEFAULT_IMAGE_SIZE, generate_image

SPLITS = ("train", "val", "test")

MIN_SOURCE_SIDE = 64


class DifficultyLevel(Enum):
    """Sampling range of the synthetic rotations."""

    PM30 = "pm30"
    PM45 = "pm45"
    FULL360 = "full360"

    @property
    def signed_range(self) -> Tuple[float, float]:
        return _LEVEL_RANGES[self]

    @classmethod
    def parse(cls, text: str) -> "DifficultyLevel":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(
                f"unknown difficulty level {text!r}; expected one of "
                f"{[lv.value for lv in cls]}"
            ) from None


_LEVEL_RANGES = {
    DifficultyLevel.PM30: (-30.0, 30.0),
    DifficultyLevel.PM45: (-45.0, 45.0),
    DifficultyLevel.FULL360: (0.0, 360.0),
}


def sample_angle(level: DifficultyLevel, rng: np.random.Generator) -> float:
    """Uniform signed rotation in the level's native range."""
    lo, hi = level.signed_range
    return float(rng.uniform(lo, hi))


@dataclass
class SourceImage:
    """An upright 8-bit RGB image. Sides below 64 px are rejected."""

    id: str
    pixels: np.ndarray
    assumed_upright: bool = True

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError(f"source image {self.id!r} must be HxWx3 uint8, got {p.shape} {p.dtype}")
        h, w = p.shape[:2]
        if h < MIN_SOURCE_SIDE or w < MIN_SOURCE_SIDE:
            raise ValueError(f"source image {self.id!r} is {w}x{h}; minimum side is {MIN_SOURCE_SIDE}")


@dataclass
class RotatedSample:
    source_id: str
    image: np.ndarray
    true_angle: float      # wrapped to [0, 360)
    signed_angle: float    # in the level's native range
    level: DifficultyLevel


@dataclass(frozen=True)
class ManifestEntry:
    source_id: str
    split: str
    signed_angle: float
    level: DifficultyLevel


@dataclass
class SplitManifest:
    entries: List[ManifestEntry]
    seed: int
    counts: Tuple[int, int, int]
    discard_ids: Tuple[str, ...] = ()
    provenance: Dict = field(default_factory=dict)

    def split(self, name: str) -> List[ManifestEntry]:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return [e for e in self.entries if e.split == name]

    @property
    def level(self) -> DifficultyLevel:
        if not self.entries:
            raise ValueError("empty manifest has no level")
        return self.entries[0].level


def synthesize_oriented_corpus(
    n: int, kind: str, seed: int, size: int = DEFAULT_IMAGE_SIZE
) -> List[SourceImage]:
    """n procedurally generated upright images (see synthgen for the kinds).

    kind "mixed" draws evenly from every generator, which makes the hardest
    full-circle training corpus: no single cue dominates.
    """
    if n < 1:
        raise ValueError(f"corpus size must be >= 1, got {n}")
    if kind == "mixed":
        out: List[SourceImage] = []
        for j, k in enumerate(CORPUS_KINDS):
            share = n // len(CORPUS_KINDS) + (1 if j < n % len(CORPUS_KINDS) else 0)
            out.extend(synthesize_oriented_corpus(share, k, seed, size) if share else [])
        return out
    return [
        SourceImage(id=f"{kind}-{seed}-{i:05d}", pixels=generate_image(kind, seed, i, size))
        for i in range(n)
    ]


def build_split(
    corpus: Sequence[SourceImage],
    level: DifficultyLevel,
    seed: int,
    counts: Tuple[int, int, int],
    discard_ids: Iterable[str] = (),
) -> SplitManifest:
    """Deterministically partition the corpus and draw one angle per entry.

    Discarded ids are excluded before the shuffle. Each source id lands in at
    most one split; raises ValueError when the corpus (minus discards) cannot
    cover the requested counts.
    """
    discard = tuple(discard_ids)
    discard_set = set(discard)
    ids = [img.id for img in corpus if img.id not in discard_set]
    if len(set(ids)) != len(ids):
        raise ValueError("corpus contains duplicate source ids")
    counts = tuple(int(c) for c in counts)
    if len(counts) != 3 or any(c < 0 for c in counts):
        raise ValueError(f"counts must be three non-negative integers, got {counts!r}")
    total = sum(counts)
    if total > len(ids):
        raise ValueError(
            f"requested {total} entries but only {len(ids)} eligible sources "
            f"({len(corpus)} in corpus, {len(discard_set & {i.id for i in corpus})} discarded)"
        )
    order = np.random.default_rng(seed).permutation(len(ids))
    entries: List[ManifestEntry] = []
    pos = 0
    for split_name, count in zip(SPLITS, counts):
        for _ in range(count):
            sid = ids[order[pos]]
            angle_rng = np.random.default_rng([int(seed), pos])
            entries.append(
                ManifestEntry(
                    source_id=sid,
                    split=split_name,
                    signed_angle=sample_angle(level, angle_rng),
                    level=level,
                )
            )
            pos += 1
    return SplitManifest(entries=entries, seed=int(seed), counts=counts, discard_ids=discard)


def render_sample(
    source: SourceImage, entry: ManifestEntry, policy: str = "fill_black"
) -> RotatedSample:
    return RotatedSample(
        source_id=source.id,
        image=rotate_image(source.pixels, entry.signed_angle, policy),
        true_angle=wrap_degrees(entry.signed_angle),
        signed_angle=entry.signed_angle,
        level=entry.level,
    )


def render_split(
    corpus: Dict[str, SourceImage] | Sequence[SourceImage],
    manifest: SplitManifest,
    split: str,
    policy: str = "fill_black",
) -> List[RotatedSample]:
    by_id = corpus if isinstance(corpus, dict) else {img.id: img for img in corpus}
    out = []
    for entry in manifest.split(split):
        if entry.source_id not in by_id:
            raise ValueError(f"manifest references unknown source id {entry.source_id!r}")
        out.append(render_sample(by_id[entry.source_id], entry, policy))
    return out


def preprocess_for_model(img: np.ndarray, target_size: Tuple[int, int]) -> np.ndarray:
    """Resize (bilinear) to target (H, W) and scale 0..255 pixel values to [-1, 1].

    Accepts uint8 or float input on the 0..255 scale; a mid-gray 127.5 maps to 0.
    Returns float32 HxWx3.
    """
    th, tw = int(target_size[0]), int(target_size[1])
    arr = np.asarray(img)
    if arr.shape[:2] != (th, tw):
        arr = cv2.resize(arr, (tw, th), interpolation=cv2.INTER_LINEAR)
    return (arr.astype(np.float32) / 127.5) - 1.0


# --- file formats -----------------------------------------------------------
#
# Manifest: JSON lines. The first line is a header record
#   {"counts": [train, val, test], "discard_count": N, "seed": S, ...provenance}
# and every following line is one entry
#   {"level": "...", "signed_angle": x, "source_id": "...", "split": "..."}.
# Keys are sorted, so identical inputs serialize to identical bytes.


def save_manifest(manifest: SplitManifest, path: str | Path, provenance: Dict | None = None) -> None:
    path = Path(path)
    header = {
        "seed": manifest.seed,
        "counts": list(manifest.counts),
        "discard_count": len(manifest.discard_ids),
    }
    header.update(provenance or manifest.provenance or {})
    lines = [json.dumps(header, sort_keys=True)]
    for e in manifest.entries:
        lines.append(
            json.dumps(
                {
                    "source_id": e.source_id,
                    "split": e.split,
                    "signed_angle": e.signed_angle,
                    "level": e.level.value,
                },
                sort_keys=True,
            )
        )
    path.write_text("\n".join(lines) + "\n")


def load_manifest(path: str | Path) -> SplitManifest:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"manifest {path} is empty")
    header = json.loads(lines[0])
    entries = []
    for line in lines[1:]:
        if not line.strip():
            continue
        rec = json.loads(line)
        entries.append(
            ManifestEntry(
                source_id=rec["source_id"],
                split=rec["split"],
                signed_angle=float(rec["signed_angle"]),
                level=DifficultyLevel.parse(rec["level"]),
            )
        )
    provenance = {k: v for k, v in header.items() if k not in ("seed", "counts", "discard_count")}
    return SplitManifest(
        entries=entries,
        seed=int(header["seed"]),
        counts=tuple(header["counts"]),
        provenance=provenance,
    )


def read_discard_list(path: str | Path) -> List[str]:
    """Plain text, one source id per line; blank lines ignored."""
    return [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]


def save_corpus(corpus: Sequence[SourceImage], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for img in corpus:
        write_image(directory / f"{img.id}.png", img.pixels)


def load_corpus_dir(directory: str | Path) -> List[SourceImage]:
    """Read every PNG/JPEG in a directory as an upright source image."""
    directory = Path(directory)
    images = []
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() not in (".png", ".jpg", ".jpeg"):
            continue
        images.append(SourceImage(id=p.stem, pixels=read_image(p)))
    if not images:
        raise ValueError(f"no PNG/JPEG images found in {directory}")
    return images


def read_image(path: str | Path) -> np.ndarray:
    bgr = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if bgr is None:
        raise OSError(f"could not read image {path}")
    return cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)


def write_image(path: str | Path, rgb: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ok = cv2.imwrite(str(path), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))
    if not ok:
        raise OSError(f"could not write image {path}")
