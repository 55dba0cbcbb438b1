# wavelet/haar.py

from dataclasses import dataclass
from typing import Union

import numpy as np

from numeric import functional as F
from numeric.tensor import Function, ShapeError, Tensor, as_tensor


@dataclass
class WaveletBands:
    """One-level Haar bands; `hf` stacks [LH; HL; HH] channel-wise."""
    ll: Tensor
    hf: Tensor

    @property
    def channels(self) -> int:
        return self.ll.shape[0]

    def band(self, name: str) -> np.ndarray:
        c = self.channels
        if name == "LL":
            return self.ll.data
        offsets = {"LH": 0, "HL": 1, "HH": 2}
        if name not in offsets:
            raise ValueError(f"unknown band {name!r}; expected LL, LH, HL or HH")
        k = offsets[name]
        return self.hf.data[k * c:(k + 1) * c]


def _check_even(shape) -> None:
    if len(shape) != 3:
        raise ShapeError(f"expected a c×H×W map, got shape {shape}")
    if shape[1] % 2 or shape[2] % 2:
        raise ShapeError(f"Haar transform needs even height and width, got {shape[1]}×{shape[2]}")


def dwt_array(x: np.ndarray) -> np.ndarray:
    """c×H×W → 4c×H/2×W/2 laid out [LL; LH; HL; HH], orthonormal scaling."""
    _check_even(x.shape)
    a = x[:, 0::2, 0::2]
    b = x[:, 0::2, 1::2]
    c = x[:, 1::2, 0::2]
    d = x[:, 1::2, 1::2]
    ll = (a + b + c + d) / 2.0
    lh = (a + b - c - d) / 2.0
    hl = (a - b + c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    return np.concatenate([ll, lh, hl, hh], axis=0)


def idwt_array(bands: np.ndarray) -> np.ndarray:
    if bands.ndim != 3 or bands.shape[0] % 4:
        raise ShapeError(f"expected 4c×h×w bands, got shape {bands.shape}")
    ll, lh, hl, hh = np.split(bands, 4, axis=0)
    c, h, w = ll.shape
    x = np.empty((c, 2 * h, 2 * w))
    x[:, 0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    x[:, 0::2, 1::2] = (ll + lh - hl - hh) / 2.0
    x[:, 1::2, 0::2] = (ll - lh + hl - hh) / 2.0
    x[:, 1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return x


class HaarAnalysis(Function):
    # orthonormal, so the adjoint is the inverse transform
    def forward(self, x):
        return dwt_array(x)

    def backward(self, grad):
        return (idwt_array(grad),)


class HaarSynthesis(Function):
    def forward(self, bands):
        return idwt_array(bands)

    def backward(self, grad):
        return (dwt_array(grad),)


def haar_dwt2(x: Union[Tensor, np.ndarray]) -> WaveletBands:
    x = as_tensor(x)
    _check_even(x.shape)
    c = x.shape[0]
    out = HaarAnalysis.apply(x)
    return WaveletBands(ll=out[:c], hf=out[c:])


def haar_idwt2(bands: WaveletBands) -> Tensor:
    c, h, w = bands.ll.shape
    if bands.hf.shape != (3 * c, h, w):
        raise ShapeError(f"HF bands {bands.hf.shape} do not match LL {bands.ll.shape}")
    return HaarSynthesis.apply(F.concat([bands.ll, bands.hf], axis=0))
