# codec/latent.py

from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from config import DEFAULT_CODEC_FACTOR
from numeric.tensor import Function, ShapeError, Tensor, as_tensor

UNIT_NORM_TOLERANCE = 1e-3


@dataclass
class LatentGrid:
    """c×h×w latent of an image or normal map."""
    values: Tensor
    factor: int

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


# ----------------------------------------------------------------------
# space-to-depth rearrangement
# ----------------------------------------------------------------------
def space_to_depth(x: np.ndarray, f: int) -> np.ndarray:
    c, height, width = x.shape
    h, w = height // f, width // f
    blocks = x.reshape(c, h, f, w, f).transpose(2, 4, 0, 1, 3)
    return np.ascontiguousarray(blocks.reshape(c * f * f, h, w))


def depth_to_space(z: np.ndarray, f: int) -> np.ndarray:
    c_lat, h, w = z.shape
    c = c_lat // (f * f)
    pixels = z.reshape(f, f, c, h, w).transpose(2, 3, 0, 4, 1)
    return np.ascontiguousarray(pixels.reshape(c, h * f, w * f))


class SpaceToDepth(Function):
    def forward(self, x, factor):
        self.factor = factor
        return space_to_depth(x, factor)

    def backward(self, grad):
        return (depth_to_space(grad, self.factor),)


class DepthToSpace(Function):
    def forward(self, z, factor):
        self.factor = factor
        return depth_to_space(z, factor)

    def backward(self, grad):
        return (space_to_depth(grad, self.factor),)


# ----------------------------------------------------------------------
# codec
# ----------------------------------------------------------------------
class SpaceToDepthCodec:
    """
    Lossless, parameter-free stand-in for a frozen image autoencoder.

    Each f×f×3 block of a 3×H×W map becomes one latent pixel with 3f²
    channels. Encoding is a permutation, so decode(encode(x)) == x exactly
    and gradients pass through both directions unchanged.
    """

    kind = "space_to_depth"

    def __init__(self, factor: int = DEFAULT_CODEC_FACTOR):
        if factor < 1:
            raise ValueError(f"codec factor must be positive, got {factor}")
        self.factor = factor
        self.channels = 3 * factor * factor

    def encode(self, image: Union[np.ndarray, Tensor]) -> LatentGrid:
        x = as_tensor(image)
        if x.ndim != 3 or x.shape[0] != 3:
            raise ShapeError(f"expected a 3×H×W map, got shape {x.shape}")
        _, height, width = x.shape
        f = self.factor
        if height % f or width % f:
            raise ValueError(f"image size {height}×{width} is not divisible by codec factor {f}")
        return LatentGrid(SpaceToDepth.apply(x, factor=f), f)

    def decode(self, z: Union[LatentGrid, Tensor, np.ndarray]) -> Tensor:
        values = z.values if isinstance(z, LatentGrid) else as_tensor(z)
        if values.ndim != 3 or values.shape[0] != self.channels:
            raise ShapeError(
                f"latent has shape {values.shape}; expected {self.channels} channels for factor {self.factor}"
            )
        return DepthToSpace.apply(values, factor=self.factor)

    def encode_normal(self, normals: Union[np.ndarray, Tensor]) -> LatentGrid:
        data = normals.data if isinstance(normals, Tensor) else np.asarray(normals, dtype=np.float64)
        check_unit_normals(data)
        return self.encode(normals)


def check_unit_normals(normals: np.ndarray, tolerance: float = UNIT_NORM_TOLERANCE) -> None:
    if normals.ndim != 3 or normals.shape[0] != 3:
        raise ShapeError(f"expected a 3×H×W normal map, got shape {normals.shape}")
    norms = np.linalg.norm(normals, axis=0)
    worst = float(np.max(np.abs(norms - 1.0)))
    if worst > tolerance:
        raise ValueError(f"normal map is not unit length (max deviation {worst:.3e} > {tolerance:g})")


_DEFAULT = SpaceToDepthCodec()


def _codec_for(factor: int) -> SpaceToDepthCodec:
    return _DEFAULT if factor == _DEFAULT.factor else SpaceToDepthCodec(factor)


def encode(image: Any, factor: int = DEFAULT_CODEC_FACTOR) -> LatentGrid:
    return _codec_for(factor).encode(image)


def decode(z: Any, factor: int = DEFAULT_CODEC_FACTOR) -> Tensor:
    return _codec_for(factor).decode(z)


def encode_normal(normals: Any, factor: int = DEFAULT_CODEC_FACTOR) -> LatentGrid:
    return _codec_for(factor).encode_normal(normals)
