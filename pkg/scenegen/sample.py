# scenegen/sample.py

from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np


@dataclass
class SceneSample:
    """
    One dataset element, channel-first.

    RGB maps are 3×H×W in [-1, 1]; `normal` holds camera-space unit vectors
    (x right, y up, z towards the camera); masks are H×W booleans; `depth` is
    z-depth normalized to [0, 1].
    """
    rgb: np.ndarray
    normal: np.ndarray
    mask_fg: np.ndarray
    mask_transparent: np.ndarray
    rgb_randomized: Optional[np.ndarray] = None
    rgb_background: Optional[np.ndarray] = None
    depth: Optional[np.ndarray] = None
    intrinsics: Dict[str, float] = field(default_factory=dict)
    sample_id: str = ""
    source: str = ""

    @property
    def height(self) -> int:
        return self.rgb.shape[1]

    @property
    def width(self) -> int:
        return self.rgb.shape[2]

    def with_rgb(self, rgb: np.ndarray) -> "SceneSample":
        return replace(self, rgb=rgb)

    def mask(self, kind: str) -> np.ndarray:
        if kind == "transparent":
            return self.mask_transparent
        if kind == "fg":
            return self.mask_fg
        raise ValueError(f"unknown mask kind {kind!r}; expected 'transparent' or 'fg'")
