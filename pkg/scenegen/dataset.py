# scenegen/dataset.py

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from config import DATASET_LAYOUT_VERSION
from ingestion.loader import MANIFEST_NAME, read_manifest, write_sample
from scenegen.primitives import random_scene_spec
from scenegen.render import render
from scenegen.sample import SceneSample

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SEED_STRIDE = 1_000_000


def sample_seed(base_seed: int, index: int) -> int:
    return base_seed * SEED_STRIDE + index


def sample_name(index: int) -> str:
    return f"sample_{index:05d}"


def render_seed(seed: int, params: Dict[str, Any]) -> SceneSample:
    spec = random_scene_spec(
        seed,
        image_size=params["image_size"],
        max_objects=params["max_objects"],
        transparent_prob=params["transparent_prob"],
        ground_plane_prob=params["ground_plane_prob"],
    )
    return render(spec)


def _write_split(out_dir: Path, entries: List[Dict[str, Any]], params: Dict[str, Any], workers: int) -> None:
    def job(entry: Dict[str, Any]) -> Path:
        sample = render_seed(entry["seed"], params)
        return write_sample(out_dir / entry["split"] / entry["id"], sample)

    # map keeps manifest order; every sample writes its own directory
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            written = list(pool.map(job, entries))
    else:
        written = [job(e) for e in entries]
    logger.info("rendered %d samples into %s", len(written), out_dir)


def write_manifest(out_dir: Path, manifest: Dict[str, Any]) -> Path:
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def build_manifest(
    count: int,
    train_frac: float,
    base_seed: int,
    image_size: int,
    max_objects: int = 3,
    transparent_prob: float = 0.7,
    ground_plane_prob: float = 0.8,
) -> Dict[str, Any]:
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    if not 0.0 <= train_frac <= 1.0:
        raise ValueError(f"train_frac must lie in [0, 1], got {train_frac}")
    n_train = int(round(count * train_frac))
    samples = [
        {"id": sample_name(i), "seed": sample_seed(base_seed, i), "split": "train" if i < n_train else "test"}
        for i in range(count)
    ]
    return {
        "layout_version": DATASET_LAYOUT_VERSION,
        "base_seed": base_seed,
        "params": {
            "image_size": image_size,
            "max_objects": max_objects,
            "transparent_prob": transparent_prob,
            "ground_plane_prob": ground_plane_prob,
        },
        "splits": {"train": n_train, "test": count - n_train},
        "samples": samples,
    }


def generate_dataset(
    out_dir: PathLike,
    count: int,
    train_frac: float = 0.8,
    base_seed: int = 0,
    image_size: int = 64,
    max_objects: int = 3,
    transparent_prob: float = 0.7,
    ground_plane_prob: float = 0.8,
    workers: int = 1,
) -> Dict[str, Any]:
    """
    Render `count` procedural samples into `<out_dir>/{train,test}/sample_XXXXX`
    and write `manifest.json`. Output is a pure function of the arguments.
    """
    manifest = build_manifest(count, train_frac, base_seed, image_size, max_objects, transparent_prob, ground_plane_prob)
    return generate_from_manifest(manifest, out_dir, workers=workers)


def check_manifest(manifest: Union[PathLike, Dict[str, Any]]) -> Dict[str, Any]:
    """Load a manifest if given a path and check its layout version and keys."""
    if not isinstance(manifest, dict):
        manifest = read_manifest(manifest)
    version = manifest.get("layout_version")
    if version != DATASET_LAYOUT_VERSION:
        raise ValueError(f"manifest layout_version {version!r} is not supported (expected {DATASET_LAYOUT_VERSION})")
    missing = [key for key in ("params", "samples") if key not in manifest]
    if missing:
        raise ValueError(f"manifest is missing {', '.join(missing)}")
    return manifest


def generate_from_manifest(manifest: Union[PathLike, Dict[str, Any]], out_dir: PathLike, workers: int = 1) -> Dict[str, Any]:
    """Render every sample a manifest lists, using the seeds it records."""
    manifest = check_manifest(manifest)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_split(out_dir, manifest["samples"], manifest["params"], workers)
    write_manifest(out_dir, manifest)
    return manifest


def regenerate_sample(manifest: Dict[str, Any], sample_id: str) -> Optional[SceneSample]:
    for entry in manifest["samples"]:
        if entry["id"] == sample_id:
            return render_seed(entry["seed"], manifest["params"])
    return None
