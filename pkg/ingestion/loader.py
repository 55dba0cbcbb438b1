# ingestion/loader.py

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from PIL import Image

from ingestion.preprocess import (
    decode_depth_png,
    decode_mask_png,
    decode_normal_png,
    encode_depth_png,
    encode_mask_png,
    encode_normal_png,
    to_signed,
    to_uint8,
)
from scenegen.sample import SceneSample

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

REQUIRED_FILES = ("input.png", "gt_normal.png", "mask.png")
MANIFEST_NAME = "manifest.json"


# ----------------------------------------------------------------------
# PNG I/O
# ----------------------------------------------------------------------
def read_png(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    with Image.open(path) as img:
        if img.mode in ("I;16", "I;16B", "I;16L", "I"):
            return np.array(img).astype(np.uint16)
        if img.mode not in ("RGB", "L"):
            img = img.convert("RGB")
        return np.array(img)


def write_png(path: PathLike, pixels: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if pixels.dtype == np.uint16:
        img = Image.fromarray(pixels)
    else:
        img = Image.fromarray(pixels.astype(np.uint8))
    img.save(path, format="PNG")
    return path


def read_image(path: PathLike) -> np.ndarray:
    """Any RGB(A)/gray PNG → 3×H×W floats in [-1, 1]."""
    pixels = read_png(path)
    if pixels.dtype == np.uint16:
        pixels = pixels >> 8
    if pixels.ndim == 2:
        pixels = np.repeat(pixels[:, :, None], 3, axis=2)
    return to_signed(pixels.astype(np.uint8))


def read_normal_map(path: PathLike) -> np.ndarray:
    return decode_normal_png(read_png(path))


def write_normal_map(path: PathLike, normals: np.ndarray) -> Path:
    return write_png(path, encode_normal_png(normals))


# ----------------------------------------------------------------------
# sample directories
# ----------------------------------------------------------------------
def missing_files(sample_dir: PathLike, names=REQUIRED_FILES) -> List[Path]:
    sample_dir = Path(sample_dir)
    return [sample_dir / name for name in names if not (sample_dir / name).exists()]


def load_sample(sample_dir: PathLike, source: str = "") -> SceneSample:
    sample_dir = Path(sample_dir)
    missing = missing_files(sample_dir)
    if missing:
        raise FileNotFoundError("missing sample files: " + ", ".join(str(p) for p in missing))

    rgb = read_image(sample_dir / "input.png")
    normal = read_normal_map(sample_dir / "gt_normal.png")
    mask_fg = decode_mask_png(read_png(sample_dir / "mask.png"))
    transparent_path = sample_dir / "mask_transparent.png"
    mask_transparent = decode_mask_png(read_png(transparent_path)) if transparent_path.exists() else mask_fg.copy()

    def optional_image(name: str) -> Optional[np.ndarray]:
        path = sample_dir / name
        return read_image(path) if path.exists() else None

    depth_path = sample_dir / "depth.png"
    depth = decode_depth_png(read_png(depth_path)) if depth_path.exists() else None
    camera_path = sample_dir / "camera.json"
    intrinsics: Dict[str, float] = json.loads(camera_path.read_text(encoding="utf-8")) if camera_path.exists() else {}

    return SceneSample(
        rgb=rgb,
        normal=normal,
        mask_fg=mask_fg,
        mask_transparent=mask_transparent,
        rgb_randomized=optional_image("input_randmat.png"),
        rgb_background=optional_image("input_bg.png"),
        depth=depth,
        intrinsics=intrinsics,
        sample_id=sample_dir.name,
        source=source,
    )


def write_sample(sample_dir: PathLike, sample: SceneSample) -> Path:
    sample_dir = Path(sample_dir)
    sample_dir.mkdir(parents=True, exist_ok=True)
    write_png(sample_dir / "input.png", to_uint8(sample.rgb))
    if sample.rgb_randomized is not None:
        write_png(sample_dir / "input_randmat.png", to_uint8(sample.rgb_randomized))
    if sample.rgb_background is not None:
        write_png(sample_dir / "input_bg.png", to_uint8(sample.rgb_background))
    write_normal_map(sample_dir / "gt_normal.png", sample.normal)
    write_png(sample_dir / "mask.png", encode_mask_png(sample.mask_fg))
    write_png(sample_dir / "mask_transparent.png", encode_mask_png(sample.mask_transparent))
    if sample.depth is not None:
        write_png(sample_dir / "depth.png", encode_depth_png(sample.depth))
    (sample_dir / "camera.json").write_text(json.dumps(sample.intrinsics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return sample_dir


def split_dir(dataset_dir: PathLike, split: Optional[str]) -> Path:
    """`<dataset>/<split>` when it exists, else the dataset directory itself."""
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.exists():
        raise FileNotFoundError(f"dataset directory not found: {dataset_dir}")
    if split and (dataset_dir / split).is_dir():
        return dataset_dir / split
    return dataset_dir


def list_samples(dataset_dir: PathLike, split: Optional[str] = None) -> List[Path]:
    root = split_dir(dataset_dir, split)
    return sorted(
        p for p in root.iterdir()
        if p.is_dir() and (p.name.startswith("sample_") or (p / "input.png").exists())
    )


def load_split(dataset_dir: PathLike, split: Optional[str] = None, source: str = "", limit: Optional[int] = None) -> List[SceneSample]:
    dirs = list_samples(dataset_dir, split)
    if limit is not None:
        dirs = dirs[:limit]
    samples = [load_sample(d, source=source) for d in dirs]
    logger.info("loaded %d samples from %s", len(samples), split_dir(dataset_dir, split))
    return samples


def read_manifest(path: PathLike) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    return json.loads(path.read_text(encoding="utf-8"))
