# semantic/projector.py

import math
from typing import Union

import numpy as np

from numeric import functional as F
from numeric.module import Module
from numeric.rng import make_rng
from numeric.tensor import ShapeError, Tensor, parameter
from semantic.embedder import SemanticTokens


class SemanticProjector(Module):
    """Trainable linear map from encoder tokens to the predictor's context width."""

    def __init__(self, d_sem: int, d_unet: int, seed: int = 0):
        rng = make_rng(seed, "projector")
        self.w_proj = parameter(rng.normal(0.0, 1.0 / math.sqrt(d_sem), size=(d_sem, d_unet)), name="w_proj")

    def forward(self, tokens: Union[SemanticTokens, Tensor]) -> Tensor:
        return project(tokens, self.w_proj)


def project(tokens: Union[SemanticTokens, Tensor], w_proj: Union[Tensor, np.ndarray]) -> Tensor:
    """c_sem = F_sem · W_proj."""
    values = tokens.values if isinstance(tokens, SemanticTokens) else tokens
    w = w_proj if isinstance(w_proj, Tensor) else Tensor(w_proj)
    if values.ndim != 2 or w.ndim != 2 or values.shape[1] != w.shape[0]:
        raise ShapeError(f"tokens {values.shape} cannot be projected by W_proj {w.shape}")
    return F.matmul(values, w)
