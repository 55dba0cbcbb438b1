# scenegen/camera.py

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from config import CAMERA_VFOV_DEG, SCENE_FAR

EYE = (0.0, 2.2, 4.0)
TARGET = (0.0, 0.4, 0.0)
WORLD_UP = (0.0, 1.0, 0.0)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class Camera:
    """
    Fixed pinhole camera. World frame is y-up with the ground at y = 0.

    Camera space: x right, y up, looking down −z; camera-space normals use the
    same axes, so a surface facing the camera has n_z > 0.
    """
    height: int
    width: int
    eye: Tuple[float, float, float] = EYE
    target: Tuple[float, float, float] = TARGET
    vfov_deg: float = CAMERA_VFOV_DEG
    far: float = SCENE_FAR

    @property
    def basis(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(right, up, forward) in world coordinates."""
        forward = _unit(np.subtract(self.target, self.eye).astype(np.float64))
        right = _unit(np.cross(forward, WORLD_UP))
        up = np.cross(right, forward)
        return right, up, forward

    @property
    def fy(self) -> float:
        return (self.height / 2.0) / np.tan(np.radians(self.vfov_deg) / 2.0)

    @property
    def fx(self) -> float:
        return self.fy

    @property
    def cx(self) -> float:
        return (self.width - 1) / 2.0

    @property
    def cy(self) -> float:
        return (self.height - 1) / 2.0

    def intrinsics(self) -> Dict[str, float]:
        return {
            "fx": float(self.fx),
            "fy": float(self.fy),
            "cx": float(self.cx),
            "cy": float(self.cy),
            "width": float(self.width),
            "height": float(self.height),
            "far": float(self.far),
            "vfov_deg": float(self.vfov_deg),
        }

    def camera_rays(self) -> np.ndarray:
        """Unnormalized camera-space ray directions, H×W×3 with z = −1."""
        i, j = np.meshgrid(np.arange(self.height), np.arange(self.width), indexing="ij")
        return np.stack(
            [(j - self.cx) / self.fx, -(i - self.cy) / self.fy, -np.ones((self.height, self.width))],
            axis=-1,
        )

    def world_rays(self) -> np.ndarray:
        """Unit world-space directions, (H·W)×3 in row-major pixel order."""
        right, up, forward = self.basis
        cam = self.camera_rays().reshape(-1, 3)
        dirs = cam[:, :1] * right + cam[:, 1:2] * up - cam[:, 2:3] * forward
        return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)

    def to_camera(self, vectors: np.ndarray) -> np.ndarray:
        """World directions (N×3) → camera-space directions (N×3)."""
        right, up, forward = self.basis
        return np.stack([vectors @ right, vectors @ up, -(vectors @ forward)], axis=-1)

    def project(self, point) -> Tuple[float, float, float]:
        """World point → (row, col, z-depth); z-depth ≤ 0 means behind the camera."""
        rel = np.asarray(point, dtype=np.float64) - np.asarray(self.eye)
        right, up, forward = self.basis
        depth = float(rel @ forward)
        if depth <= 0:
            return float("nan"), float("nan"), depth
        col = self.cx + self.fx * float(rel @ right) / depth
        row = self.cy - self.fy * float(rel @ up) / depth
        return row, col, depth
