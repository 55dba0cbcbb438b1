# evaluation/harness.py

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from config import ACCURACY_THRESHOLDS
from evaluation.metrics import aggregate_errors, angular_error_map
from ingestion.loader import list_samples, load_sample, missing_files, read_normal_map, REQUIRED_FILES

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class SampleReport(BaseModel):
    sample_id: str
    n_pixels: int = Field(..., ge=0)
    mean_deg: float = Field(..., ge=0)
    acc: Dict[str, float]


class DatasetReport(BaseModel):
    """Pixel-pooled metrics plus the per-sample breakdown."""
    dataset: str
    mask_kind: str
    n_samples: int = Field(..., ge=0)
    n_pixels: int = Field(..., ge=0)
    mean_deg: float = Field(..., ge=0)
    acc: Dict[str, float]
    sample_mean_deg: float = Field(..., ge=0)
    per_sample: List[SampleReport]
    skipped: List[str] = Field(default_factory=list)


def prediction_path(predictions_dir: PathLike, sample_id: str) -> Path:
    """Predictions are stored flat as `<predictions_dir>/<sample_id>.png`."""
    return Path(predictions_dir) / f"{sample_id}.png"


def _check_files(sample_dirs: Sequence[Path], predictions_dir: Optional[Path]) -> None:
    missing: List[Path] = []
    for sample_dir in sample_dirs:
        missing.extend(missing_files(sample_dir, REQUIRED_FILES))
        if predictions_dir is not None:
            pred = prediction_path(predictions_dir, sample_dir.name)
            if not pred.exists():
                missing.append(pred)
    if missing:
        raise FileNotFoundError(
            f"{len(missing)} missing file(s):\n" + "\n".join(f"  - {p}" for p in missing)
        )


def check_dataset(dataset_dir: PathLike, split: Optional[str] = None, predictions_dir: Optional[PathLike] = None) -> List[Path]:
    """Sample directories of a split, after checking every ground-truth and prediction file exists."""
    sample_dirs = list_samples(dataset_dir, split)
    if not sample_dirs:
        raise ValueError(f"no samples found in {dataset_dir} (split {split!r})")
    if predictions_dir is not None:
        predictions_dir = Path(predictions_dir)
        if not predictions_dir.is_dir():
            raise FileNotFoundError(f"predictions directory not found: {predictions_dir}")
    _check_files(sample_dirs, predictions_dir)
    return sample_dirs


def evaluate_dataset(
    dataset_dir: PathLike,
    predictions,
    split: Optional[str] = None,
    mask_kind: str = "transparent",
    workers: int = 1,
    thresholds: Sequence[float] = ACCURACY_THRESHOLDS,
) -> DatasetReport:
    """
    Score predictions against ground truth over every sample of a split.

    `predictions` is either a directory of normal PNGs named after the samples
    or an object with a `predict_normal(image)` method. Pixels are pooled
    across samples (every masked pixel counts once); per-sample means are
    reported too. Samples whose mask is empty are skipped with a warning.
    """
    if mask_kind not in ("transparent", "fg"):
        raise ValueError(f"unknown mask kind {mask_kind!r}; expected 'transparent' or 'fg'")
    predictions_dir = None
    if isinstance(predictions, (str, Path)):
        predictions_dir = Path(predictions)
    elif not hasattr(predictions, "predict_normal"):
        raise TypeError(f"predictions must be a directory or a predictor, got {type(predictions).__name__}")
    sample_dirs = check_dataset(dataset_dir, split, predictions_dir)

    def score(sample_dir: Path):
        sample = load_sample(sample_dir)
        mask = sample.mask(mask_kind)
        if not mask.any():
            return sample_dir.name, None
        if predictions_dir is not None:
            pred = read_normal_map(prediction_path(predictions_dir, sample_dir.name))
        else:
            pred = predictions.predict_normal(sample.rgb)
        errors = angular_error_map(pred, sample.normal, mask)[mask]
        return sample_dir.name, errors

    # the predictor is stateful, so only file-backed scoring runs in parallel
    if workers > 1 and predictions_dir is not None:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score, sample_dirs))
    else:
        results = [score(d) for d in sample_dirs]

    per_sample: List[SampleReport] = []
    pooled: List[np.ndarray] = []
    skipped: List[str] = []
    for sample_id, errors in results:
        if errors is None:
            logger.warning("skipping %s: %s mask is empty", sample_id, mask_kind)
            skipped.append(sample_id)
            continue
        report = aggregate_errors(errors, thresholds)
        per_sample.append(SampleReport(sample_id=sample_id, **report.model_dump()))
        pooled.append(errors)

    if not pooled:
        raise ValueError(f"every sample in {dataset_dir} has an empty {mask_kind} mask")

    total = aggregate_errors(np.concatenate(pooled), thresholds)
    logger.info(
        "evaluated %d samples (%d skipped): %.3f° over %d pixels",
        len(per_sample), len(skipped), total.mean_deg, total.n_pixels,
    )
    return DatasetReport(
        dataset=str(dataset_dir),
        mask_kind=mask_kind,
        n_samples=len(per_sample),
        n_pixels=total.n_pixels,
        mean_deg=total.mean_deg,
        acc=total.acc,
        sample_mean_deg=float(np.mean([s.mean_deg for s in per_sample])),
        per_sample=per_sample,
        skipped=skipped,
    )


def write_report_json(path: PathLike, report: DatasetReport) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.model_dump(mode="json"), f, indent=2)
        f.write("\n")
    return path
