# evaluation/error_maps.py

from pathlib import Path
from typing import Union

import numpy as np

from config import ERROR_MAP_MAX_DEG
from ingestion.loader import write_png

OUTSIDE_GRAY = 128


def render_error_map(error_map: np.ndarray, mask: np.ndarray, max_degrees: float = ERROR_MAP_MAX_DEG) -> np.ndarray:
    """Blue (0°) → red (max_degrees) ramp as 8-bit H×W×3; gray outside the mask."""
    if max_degrees <= 0:
        raise ValueError(f"max_degrees must be positive, got {max_degrees}")
    mask = np.asarray(mask, dtype=bool)
    t = np.clip(np.nan_to_num(error_map, nan=0.0) / max_degrees, 0.0, 1.0)
    rgb = np.empty(error_map.shape + (3,), dtype=np.uint8)
    rgb[..., 0] = np.round(255.0 * t).astype(np.uint8)
    rgb[..., 1] = 0
    rgb[..., 2] = np.round(255.0 * (1.0 - t)).astype(np.uint8)
    rgb[~mask] = OUTSIDE_GRAY
    return rgb


def save_error_map(path: Union[str, Path], error_map: np.ndarray, mask: np.ndarray, max_degrees: float = ERROR_MAP_MAX_DEG) -> Path:
    return write_png(path, render_error_map(error_map, mask, max_degrees))
