# training/augment.py

from dataclasses import replace
from typing import Optional

import numpy as np

from scenegen.sample import SceneSample


def _mirror(array: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if array is None:
        return None
    return np.ascontiguousarray(array[..., ::-1])


def flip_sample(sample: SceneSample) -> SceneSample:
    """Horizontal mirror; the normal field's x-component changes sign."""
    normal = _mirror(sample.normal)
    normal[0] = -normal[0]
    intrinsics = dict(sample.intrinsics)
    if "cx" in intrinsics:
        intrinsics["cx"] = (sample.width - 1) - intrinsics["cx"]
    return replace(
        sample,
        rgb=_mirror(sample.rgb),
        rgb_randomized=_mirror(sample.rgb_randomized),
        rgb_background=_mirror(sample.rgb_background),
        normal=normal,
        depth=_mirror(sample.depth),
        mask_fg=_mirror(sample.mask_fg),
        mask_transparent=_mirror(sample.mask_transparent),
        intrinsics=intrinsics,
    )


def augment_flip(sample: SceneSample, rng: np.random.Generator, prob: float = 0.5) -> SceneSample:
    if rng.random() < prob:
        return flip_sample(sample)
    return sample


def material_swap(sample: SceneSample, rng: np.random.Generator, prob: float = 0.0) -> SceneSample:
    """Replace the input by its randomized-material render (geometry is shared)."""
    if prob <= 0 or sample.rgb_randomized is None:
        return sample
    if rng.random() < prob:
        return sample.with_rgb(sample.rgb_randomized)
    return sample
