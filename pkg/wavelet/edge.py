# wavelet/edge.py

from typing import Literal

import numpy as np

from numeric.tensor import ShapeError

EdgeNorm = Literal["per_image", "fixed"]


def gradient_magnitude(normals: np.ndarray) -> np.ndarray:
    """½(‖∇x n‖ + ‖∇y n‖) with forward differences and a replicated border."""
    if normals.ndim != 3:
        raise ShapeError(f"expected a c×H×W map, got shape {normals.shape}")
    dx = np.diff(normals, axis=2, append=normals[:, :, -1:])
    dy = np.diff(normals, axis=1, append=normals[:, -1:, :])
    return 0.5 * (np.linalg.norm(dx, axis=0) + np.linalg.norm(dy, axis=0))


def mean_pool2(values: np.ndarray) -> np.ndarray:
    h, w = values.shape
    if h % 2 or w % 2:
        raise ShapeError(f"2×2 pooling needs even sizes, got {h}×{w}")
    return values.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def edge_mask(n_gt: np.ndarray, normalization: EdgeNorm = "per_image") -> np.ndarray:
    """
    Edge weights in [0, 1] at sub-band resolution, from ground truth only.

    per_image: pooled magnitudes divided by their maximum (all zeros when the
    map is constant). fixed: divided by 2, the largest difference between
    unit vectors, then clipped.
    """
    pooled = mean_pool2(gradient_magnitude(np.asarray(n_gt, dtype=np.float64)))
    if normalization == "fixed":
        return np.clip(pooled / 2.0, 0.0, 1.0)
    if normalization != "per_image":
        raise ValueError(f"unknown edge normalization {normalization!r}")
    peak = pooled.max()
    if peak < 1e-12:
        return np.zeros_like(pooled)
    return pooled / peak
