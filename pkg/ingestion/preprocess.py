# ingestion/preprocess.py

import numpy as np

from numeric.tensor import ShapeError


def to_signed(image: np.ndarray) -> np.ndarray:
    """8-bit H×W×3 image → 3×H×W floats in [-1, 1]."""
    if image.ndim != 3 or image.shape[2] < 3:
        raise ShapeError(f"expected an H×W×3 image, got shape {image.shape}")
    rgb = image[:, :, :3].astype(np.float64) / 255.0
    return np.ascontiguousarray(rgb.transpose(2, 0, 1) * 2.0 - 1.0)


def to_uint8(image: np.ndarray) -> np.ndarray:
    """3×H×W floats in [-1, 1] → 8-bit H×W×3."""
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeError(f"expected a 3×H×W map, got shape {image.shape}")
    unit = np.clip((image + 1.0) / 2.0, 0.0, 1.0)
    return np.round(unit * 255.0).astype(np.uint8).transpose(1, 2, 0)


def encode_normal_png(normals: np.ndarray) -> np.ndarray:
    """Unit normals → 8-bit H×W×3 with value round((n + 1)/2 · 255), order (x, y, z)."""
    return to_uint8(normals)


def decode_normal_png(pixels: np.ndarray, renormalize: bool = True) -> np.ndarray:
    """8-bit normal image → 3×H×W vectors, renormalized to unit length by default."""
    normals = to_signed(pixels)
    if not renormalize:
        return normals
    norms = np.linalg.norm(normals, axis=0, keepdims=True)
    safe = np.where(norms < 1e-12, 1.0, norms)
    out = normals / safe
    degenerate = norms[0] < 1e-12
    out[:, degenerate] = np.array([0.0, 0.0, 1.0])[:, None]
    return out


def encode_mask_png(mask: np.ndarray) -> np.ndarray:
    return np.where(mask, 255, 0).astype(np.uint8)


def decode_mask_png(pixels: np.ndarray) -> np.ndarray:
    """> 127 means foreground."""
    if pixels.ndim == 3:
        pixels = pixels[:, :, 0]
    return pixels > 127


def encode_depth_png(depth: np.ndarray) -> np.ndarray:
    """Normalized depth in [0, 1] → 16-bit."""
    return np.round(np.clip(depth, 0.0, 1.0) * 65535.0).astype(np.uint16)


def decode_depth_png(pixels: np.ndarray) -> np.ndarray:
    return pixels.astype(np.float64) / 65535.0
