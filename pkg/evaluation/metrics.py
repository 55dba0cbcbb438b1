# evaluation/metrics.py

from typing import Dict, Sequence

import numpy as np
from pydantic import BaseModel, Field

from config import ACCURACY_THRESHOLDS
from numeric.tensor import ShapeError


class MetricsReport(BaseModel):
    """Mean angular error and threshold accuracies over the masked pixels."""
    mean_deg: float = Field(..., ge=0)
    acc: Dict[str, float]
    n_pixels: int = Field(..., ge=0)


def threshold_key(threshold: float) -> str:
    return f"{threshold:g}"


def _unit(normals: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(normals, axis=0, keepdims=True)
    return normals / np.where(norms < 1e-12, 1.0, norms)


def angular_error_map(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """
    Per-pixel angle in degrees between predicted and ground-truth normals.

    Both maps are renormalized first. Pixels outside the mask are NaN.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 3 or pred.shape[0] != 3:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} must both be 3×H×W")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != pred.shape[1:]:
        raise ShapeError(f"mask {mask.shape} does not match maps {pred.shape[1:]}")
    if not mask.any():
        raise ValueError("mask is empty")

    cos = np.clip(np.sum(_unit(pred) * _unit(gt), axis=0), -1.0, 1.0)
    degrees = np.degrees(np.arccos(cos))
    return np.where(mask, degrees, np.nan)


def aggregate_errors(errors: np.ndarray, thresholds: Sequence[float] = ACCURACY_THRESHOLDS) -> MetricsReport:
    """Report over a flat array of per-pixel errors (no NaNs)."""
    errors = np.asarray(errors, dtype=np.float64).ravel()
    if errors.size == 0:
        raise ValueError("no pixels to aggregate")
    acc = {threshold_key(t): float(np.mean(errors < t) * 100.0) for t in thresholds}
    return MetricsReport(mean_deg=float(np.mean(errors)), acc=acc, n_pixels=int(errors.size))


def aggregate(error_map: np.ndarray, mask: np.ndarray, thresholds: Sequence[float] = ACCURACY_THRESHOLDS) -> MetricsReport:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("mask is empty")
    return aggregate_errors(error_map[mask], thresholds)


def evaluate_pair(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray, thresholds: Sequence[float] = ACCURACY_THRESHOLDS) -> MetricsReport:
    return aggregate(angular_error_map(pred, gt, mask), mask, thresholds)
