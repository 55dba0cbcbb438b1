# predictor/layers.py

import math
from typing import Optional

import numpy as np

from config import DEFAULT_NORM_GROUPS
from numeric import functional as F
from numeric.module import Module
from numeric.tensor import ShapeError, Tensor, parameter


def norm_groups(channels: int, groups: int = DEFAULT_NORM_GROUPS) -> int:
    return math.gcd(groups, channels)


class Conv2d(Module):
    """3×3 convolution with bias."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, stride: int = 1):
        std = math.sqrt(1.0 / (c_in * 9))
        self.weight = parameter(rng.normal(0.0, std, size=(c_out, c_in, 3, 3)))
        self.bias = parameter(np.zeros(c_out))
        self._stride = stride

    def forward(self, x: Tensor) -> Tensor:
        y = F.conv2d(x, self.weight, stride=self._stride)
        return y + self.bias.reshape(-1, 1, 1)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = parameter(rng.normal(0.0, math.sqrt(1.0 / d_in), size=(d_in, d_out)))
        self.bias = parameter(np.zeros(d_out)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        y = F.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class PointwiseConv(Module):
    """1×1 convolution, used on residual skips that change width."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator):
        self.weight = parameter(rng.normal(0.0, math.sqrt(1.0 / c_in), size=(c_out, c_in)))

    def forward(self, x: Tensor) -> Tensor:
        c_in, height, width = x.shape
        y = F.matmul(self.weight, x.reshape(c_in, height * width))
        return y.reshape(-1, height, width)


class GroupNorm(Module):
    def __init__(self, channels: int, groups: int = DEFAULT_NORM_GROUPS, eps: float = 1e-5):
        self.gamma = parameter(np.ones(channels))
        self.beta = parameter(np.zeros(channels))
        self._groups = norm_groups(channels, groups)
        self._eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return F.groupnorm(x, self._groups, self.gamma, self.beta, eps=self._eps)


class ResBlock(Module):
    """
    norm → silu → conv, plus the projected time/task embedding, then
    norm → silu → conv, added to a (possibly 1×1-projected) skip.
    """

    def __init__(self, c_in: int, c_out: int, t_dim: int, rng: np.random.Generator):
        self.norm1 = GroupNorm(c_in)
        self.conv1 = Conv2d(c_in, c_out, rng)
        self.time = Linear(t_dim, c_out, rng)
        self.norm2 = GroupNorm(c_out)
        self.conv2 = Conv2d(c_out, c_out, rng)
        self.skip: Optional[PointwiseConv] = PointwiseConv(c_in, c_out, rng) if c_in != c_out else None
        self._c_in = c_in

    def forward(self, x: Tensor, t_emb: Tensor) -> Tensor:
        if x.shape[0] != self._c_in:
            raise ShapeError(f"ResBlock expects {self._c_in} channels, got input {x.shape}")
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.time(t_emb).reshape(-1, 1, 1)
        h = self.conv2(F.silu(self.norm2(h)))
        skip = self.skip(x) if self.skip is not None else x
        return h + skip
