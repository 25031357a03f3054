"""Synthetic dataset generation and on-disk dataset handling.

Samples are square RGB images in [0,1] containing one to three
non-overlapping filled shapes (ellipse, rectangle, triangle) over a
low-amplitude textured background, with a guaranteed luminance contrast
between every shape and the background. Ground truth is the exact shape
union plus its inner boundary (foreground pixels with a 4-connected
background neighbor; the image border counts as background).

Generation is a pure function of ``(seed, index)`` -- every sample draws from
``default_rng([seed, index])`` -- so datasets regenerate bit-identically and
samples can be produced independently in any order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

_LUMA = np.array([0.299, 0.587, 0.114])
_MIN_SHAPE_FRAC = 0.015
_MAX_SHAPE_FRAC = 0.28
_MAX_TOTAL_FRAC = 0.55
_MIN_CONTRAST = 0.25


@dataclass
class Sample:
    image: np.ndarray  # (H, W, 3) float32 in [0, 1]
    y: np.ndarray  # (H, W) uint8 saliency mask
    z: np.ndarray  # (H, W) uint8 salient-edge mask
    id: str


@dataclass(frozen=True)
class DatasetManifest:
    split: str
    count: int
    resolution: int
    seed: int | None
    source: str  # "synthetic" or a source directory path

    def to_json(self) -> str:
        # fixed key order so manifests diff cleanly
        return json.dumps(
            {
                "split": self.split,
                "count": self.count,
                "resolution": self.resolution,
                "seed": self.seed,
                "source": self.source,
            },
            indent=2,
        )

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        d = json.loads(text)
        return DatasetManifest(
            split=d["split"],
            count=int(d["count"]),
            resolution=int(d["resolution"]),
            seed=None if d["seed"] is None else int(d["seed"]),
            source=d["source"],
        )


# ---------------------------------------------------------------------------
# ground-truth helpers


def derive_edge_gt(y: np.ndarray) -> np.ndarray:
    """Inner boundary: foreground pixels with a 4-connected background
    neighbor, where outside the image counts as background."""
    y = np.asarray(y, dtype=np.uint8)
    yp = np.pad(y, 1)
    interior = yp[:-2, 1:-1] & yp[2:, 1:-1] & yp[1:-1, :-2] & yp[1:-1, 2:]
    return ((y == 1) & (interior == 0)).astype(np.uint8)


def downsample_majority(mask: np.ndarray, factor: int) -> np.ndarray:
    """Block-majority downsampling (a block is foreground when at least half
    its pixels are)."""
    if factor == 1:
        return np.asarray(mask, dtype=np.uint8).copy()
    h, w = mask.shape
    blocks = mask.reshape(h // factor, factor, w // factor, factor)
    return (blocks.mean(axis=(1, 3)) >= 0.5).astype(np.uint8)


def downsample_max(mask: np.ndarray, factor: int) -> np.ndarray:
    """Block-max downsampling; keeps one-pixel structures alive."""
    if factor == 1:
        return np.asarray(mask, dtype=np.uint8).copy()
    h, w = mask.shape
    blocks = mask.reshape(h // factor, factor, w // factor, factor)
    return blocks.max(axis=(1, 3)).astype(np.uint8)


# ---------------------------------------------------------------------------
# synthetic generation


def _luminance(color: np.ndarray) -> float:
    return float(_LUMA @ color)


def _random_shape(
    rng: np.random.Generator, xx: np.ndarray, yy: np.ndarray, res: int
) -> np.ndarray:
    kind = int(rng.integers(0, 3))
    cx, cy = rng.uniform(0.2 * res, 0.8 * res, size=2)
    dx, dy = xx - cx, yy - cy
    if kind == 0:  # ellipse
        a, b = rng.uniform(0.08 * res, 0.28 * res, size=2)
        phi = rng.uniform(0.0, np.pi)
        u = dx * np.cos(phi) + dy * np.sin(phi)
        v = -dx * np.sin(phi) + dy * np.cos(phi)
        return (u / a) ** 2 + (v / b) ** 2 <= 1.0
    if kind == 1:  # rotated rectangle
        ha, hb = rng.uniform(0.07 * res, 0.25 * res, size=2)
        phi = rng.uniform(0.0, np.pi)
        u = dx * np.cos(phi) + dy * np.sin(phi)
        v = -dx * np.sin(phi) + dy * np.cos(phi)
        return (np.abs(u) <= ha) & (np.abs(v) <= hb)
    # triangle: three vertices around the center, inside = consistent side
    angles = rng.uniform(0.0, 2 * np.pi) + np.array([0.0, 2.09, 4.19])
    angles += rng.uniform(-0.5, 0.5, size=3)
    radii = rng.uniform(0.12 * res, 0.3 * res, size=3)
    vx = cx + radii * np.cos(angles)
    vy = cy + radii * np.sin(angles)
    inside = np.ones(xx.shape, dtype=bool)
    for k in range(3):
        x1, y1 = vx[k], vy[k]
        x2, y2 = vx[(k + 1) % 3], vy[(k + 1) % 3]
        cross = (x2 - x1) * (yy - y1) - (y2 - y1) * (xx - x1)
        x3, y3 = vx[(k + 2) % 3], vy[(k + 2) % 3]
        ref = (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1)
        inside &= cross * ref >= 0
    return inside


def _textured_background(
    rng: np.random.Generator, res: int, xx: np.ndarray, yy: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    base = rng.uniform(0.2, 0.8, size=3)
    img = np.empty((res, res, 3))
    for c in range(3):
        img[:, :, c] = base[c]
        for _ in range(2):
            amp = rng.uniform(0.02, 0.06)
            freq = rng.uniform(1.0, 4.0) / res
            theta = rng.uniform(0.0, np.pi)
            phase = rng.uniform(0.0, 2 * np.pi)
            img[:, :, c] += amp * np.sin(
                2 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase
            )
    img += rng.normal(0.0, 0.015, size=img.shape)
    return img, base


def _render_sample(rng: np.random.Generator, res: int) -> tuple[np.ndarray, np.ndarray]:
    yy, xx = np.mgrid[0:res, 0:res].astype(np.float64) + 0.5
    img, base = _textured_background(rng, res, xx, yy)
    bg_lum = _luminance(base)

    union = np.zeros((res, res), dtype=bool)
    n_shapes = int(rng.integers(1, 4))
    for _ in range(n_shapes):
        for _attempt in range(40):
            mask = _random_shape(rng, xx, yy, res)
            frac = mask.mean()
            if not (_MIN_SHAPE_FRAC <= frac <= _MAX_SHAPE_FRAC):
                continue
            if (mask & union).any():
                continue
            if (mask | union).mean() > _MAX_TOTAL_FRAC:
                continue
            fg = rng.uniform(0.05, 0.95, size=3)
            while abs(_luminance(fg) - bg_lum) < _MIN_CONTRAST:
                fg = rng.uniform(0.05, 0.95, size=3)
            img[mask] = fg + rng.normal(0.0, 0.02, size=(int(mask.sum()), 3))
            union |= mask
            break
    if not union.any():
        # extremely unlucky rejection streak: place a deterministic ellipse
        mask = ((xx - res / 2) / (0.2 * res)) ** 2 + (
            (yy - res / 2) / (0.15 * res)
        ) ** 2 <= 1.0
        fg = np.clip(base + (0.4 if bg_lum < 0.5 else -0.4), 0.02, 0.98)
        img[mask] = fg
        union = mask

    return np.clip(img, 0.0, 1.0).astype(np.float32), union.astype(np.uint8)


def gen_synthetic(count: int, resolution: int, seed: int) -> list[Sample]:
    """Deterministic synthetic dataset; each sample depends only on
    (seed, index)."""
    if resolution % 32 != 0:
        raise ValueError(f"resolution {resolution} is not divisible by 32")
    samples = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        image, y = _render_sample(rng, resolution)
        samples.append(
            Sample(image, y, derive_edge_gt(y), f"synth-{seed:04d}-{i:05d}")
        )
    return samples


# ---------------------------------------------------------------------------
# disk I/O


def save_dataset(
    directory: str | Path,
    samples: list[Sample],
    manifest: DatasetManifest | None = None,
) -> None:
    root = Path(directory)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    for s in samples:
        img = Image.fromarray(np.round(s.image * 255.0).astype(np.uint8))
        img.save(root / "images" / f"{s.id}.png")
        Image.fromarray(s.y * np.uint8(255)).save(root / "masks" / f"{s.id}.png")
    if manifest is not None:
        (root / "manifest.json").write_text(manifest.to_json() + "\n")


def read_manifest(directory: str | Path) -> DatasetManifest:
    return DatasetManifest.from_json((Path(directory) / "manifest.json").read_text())


def load_dataset(directory: str | Path) -> list[Sample]:
    """Load paired image/mask PNGs (shared basename) from a dataset folder."""
    root = Path(directory)
    images = {p.stem: p for p in sorted((root / "images").glob("*.png"))}
    masks = {p.stem: p for p in sorted((root / "masks").glob("*.png"))}
    unpaired = sorted(set(images) ^ set(masks))
    if unpaired:
        raise ValueError(f"unpaired image/mask basenames: {unpaired}")
    if not images:
        raise ValueError(f"no samples found under {root}")

    samples = []
    for stem, img_path in images.items():
        image = np.asarray(Image.open(img_path).convert("RGB"), dtype=np.float32)
        image /= 255.0
        raw = np.asarray(Image.open(masks[stem]).convert("L"), dtype=np.float32)
        if raw.shape != image.shape[:2]:
            raise ValueError(
                f"mask shape {raw.shape} != image shape {image.shape[:2]} for {stem}"
            )
        y = (raw / 255.0 >= 0.5).astype(np.uint8)
        samples.append(Sample(image, y, derive_edge_gt(y), stem))
    return samples
