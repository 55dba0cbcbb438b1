# predictor/attention.py

import math

import numpy as np

from numeric import functional as F
from numeric.module import Module
from numeric.tensor import ShapeError, Tensor, parameter


class CrossAttention(Module):
    """
    Single-head cross-attention from spatial features to semantic tokens.

    Queries come from the flattened feature map h (n×d_l); keys and values come
    from the conditioning tokens c (m×d_ctx). The attended values are projected
    back to d_l by W_O and added to h.
    """

    def __init__(self, d_model: int, d_context: int, rng: np.random.Generator):
        self.w_q = parameter(rng.normal(0.0, 1.0 / math.sqrt(d_model), size=(d_model, d_model)))
        self.w_k = parameter(rng.normal(0.0, 1.0 / math.sqrt(d_context), size=(d_context, d_model)))
        self.w_v = parameter(rng.normal(0.0, 1.0 / math.sqrt(d_context), size=(d_context, d_model)))
        self.w_o = parameter(rng.normal(0.0, 1.0 / math.sqrt(d_model), size=(d_model, d_model)))
        self._d_model = d_model
        self._d_context = d_context

    @property
    def d_k(self) -> int:
        return self._d_model

    def _check(self, h: Tensor, context: Tensor) -> None:
        if h.ndim != 2 or h.shape[1] != self._d_model:
            raise ShapeError(f"queries must be n×{self._d_model}, got {h.shape}")
        if context.ndim != 2 or context.shape[1] != self._d_context:
            raise ShapeError(f"context must be m×{self._d_context}, got {context.shape}")

    def attention_weights(self, h: Tensor, context: Tensor) -> Tensor:
        self._check(h, context)
        q = F.matmul(h, self.w_q)
        k = F.matmul(context, self.w_k)
        scores = F.matmul(q, k.T) * (1.0 / math.sqrt(self.d_k))
        return F.softmax_rows(scores)

    def attend(self, h: Tensor, context: Tensor) -> Tensor:
        """Attention-weighted values, before the output projection."""
        weights = self.attention_weights(h, context)
        return F.matmul(weights, F.matmul(context, self.w_v))

    def forward(self, h: Tensor, context: Tensor) -> Tensor:
        return h + F.matmul(self.attend(h, context), self.w_o)

    def forward_map(self, x: Tensor, context: Tensor) -> Tensor:
        """Apply to a c×H×W feature map, one query per spatial position."""
        channels, height, width = x.shape
        tokens = x.reshape(channels, height * width).T
        out = self.forward(tokens, context)
        return out.T.reshape(channels, height, width)
