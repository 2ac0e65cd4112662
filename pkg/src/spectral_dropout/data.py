"""Seeded synthetic image dataset: four texture classes on a 16x16 grid.

Classes (balanced in every split): oriented bar, checkerboard, soft
blob, ring.  Each sample draws its own pose/scale/phase jitter plus
pixel noise, so a small training split undersamples the pose space and
a capable net can memorize it; that overfitting gap is what the desk
experiments measure.  Generation is fully determined by (seed, counts,
size, noise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SeededRng

CLASS_NAMES = ("bar", "checkerboard", "blob", "ring")


@dataclass
class SyntheticDataset:
    train_images: np.ndarray  # (N_train, 1, S, S) in [0, 1]
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray
    seed: int

    @property
    def size(self) -> int:
        return self.train_images.shape[-1]


def _grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    c = np.linspace(-1.0, 1.0, size)
    return np.meshgrid(c, c, indexing="ij")


def _sample_image(label: int, rng: SeededRng, size: int) -> np.ndarray:
    yy, xx = _grid(size)
    u = rng.uniform(8)
    amp = 0.7 + 0.3 * u[0]
    if label == 0:  # oriented bar
        theta = np.pi * u[1]
        offset = 0.6 * u[2] - 0.3
        width = 0.10 + 0.15 * u[3]
        d = xx * np.sin(theta) - yy * np.cos(theta) - offset
        img = amp * np.exp(-((d / width) ** 2))
    elif label == 1:  # checkerboard
        period = 0.30 + 0.25 * u[1]
        theta = (u[2] - 0.5) * (np.pi / 6)
        phase_x = u[3] * 2 * np.pi
        phase_y = u[4] * 2 * np.pi
        xr = xx * np.cos(theta) + yy * np.sin(theta)
        yr = -xx * np.sin(theta) + yy * np.cos(theta)
        pattern = np.sin(2 * np.pi * xr / period + phase_x) * np.sin(
            2 * np.pi * yr / period + phase_y
        )
        img = amp * 0.5 * (1.0 + np.tanh(3.0 * pattern))
    elif label == 2:  # soft blob
        cx = 0.8 * u[1] - 0.4
        cy = 0.8 * u[2] - 0.4
        sigma = 0.25 + 0.20 * u[3]
        r2 = (xx - cx) ** 2 + (yy - cy) ** 2
        img = amp * np.exp(-r2 / (2 * sigma**2))
    else:  # ring
        cx = 0.3 * u[1] - 0.15
        cy = 0.3 * u[2] - 0.15
        radius = 0.35 + 0.30 * u[3]
        width = 0.08 + 0.07 * u[4]
        r = np.sqrt((xx - cx) ** 2 + (yy - cy) ** 2)
        img = amp * np.exp(-(((r - radius) / width) ** 2))
    return img


def _make_split(count: int, rng: SeededRng, size: int, noise: float):
    if count % len(CLASS_NAMES):
        raise ValueError(
            f"split size {count} not divisible by {len(CLASS_NAMES)} classes"
        )
    labels = np.tile(np.arange(len(CLASS_NAMES)), count // len(CLASS_NAMES))
    images = np.empty((count, 1, size, size))
    for i, label in enumerate(labels):
        img = _sample_image(int(label), rng, size)
        img = img + noise * rng.normal(size * size).reshape(size, size)
        images[i, 0] = np.clip(img, 0.0, 1.0)
    order = rng.permutation(count)
    return images[order], labels[order]


def make_dataset(
    train_count: int = 256,
    test_count: int = 1024,
    seed: int = 0,
    size: int = 16,
    noise: float = 0.6,
) -> SyntheticDataset:
    """Build class-balanced train/test splits from independent substreams."""
    root = SeededRng(seed)
    train_images, train_labels = _make_split(train_count, root.child(1), size, noise)
    test_images, test_labels = _make_split(test_count, root.child(2), size, noise)
    return SyntheticDataset(
        train_images=train_images,
        train_labels=train_labels,
        test_images=test_images,
        test_labels=test_labels,
        seed=seed,
    )
