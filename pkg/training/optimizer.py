# training/optimizer.py

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import ADAMW_BETAS, ADAMW_EPS, ADAMW_WEIGHT_DECAY, GRAD_NORM_WARN
from numeric.tensor import ShapeError, Tensor

logger = logging.getLogger(__name__)


@dataclass
class AdamWState:
    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    skipped: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamWState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def optimizer_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamWState,
    lr: float,
    betas: Tuple[float, float] = ADAMW_BETAS,
    eps: float = ADAMW_EPS,
    weight_decay: float = ADAMW_WEIGHT_DECAY,
) -> Tuple[List[np.ndarray], AdamWState]:
    """
    One AdamW update; returns new parameter arrays and the updated state.

    Decay multiplies the weights by (1 - lr·weight_decay) and never enters
    the moment estimates. A non-finite gradient skips the whole step.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError(f"{len(params)} params, {len(grads)} grads, {len(state.m)} state slots")
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"param {p.shape}, grad {g.shape} and state {m.shape} differ")

    if not all(np.all(np.isfinite(g)) for g in grads):
        state.skipped += 1
        logger.warning("non-finite gradient at step %d; update skipped (%d skipped so far)", state.step + 1, state.skipped)
        return [p.copy() for p in params], state

    beta1, beta2 = betas
    state.step += 1
    t = state.step
    bias1 = 1.0 - beta1 ** t
    bias2 = 1.0 - beta2 ** t

    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / bias1
        v_hat = state.v[i] / bias2
        new = p * (1.0 - lr * weight_decay) - lr * m_hat / (np.sqrt(v_hat) + eps)
        updated.append(new)
    return updated, state


class AdamW:
    """AdamW over a list of parameter tensors, reading their `.grad` buffers."""

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float,
        betas: Tuple[float, float] = ADAMW_BETAS,
        eps: float = ADAMW_EPS,
        weight_decay: float = ADAMW_WEIGHT_DECAY,
        grad_norm_warn: float = GRAD_NORM_WARN,
    ):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.grad_norm_warn = grad_norm_warn
        self.state = AdamWState.zeros_like([p.data for p in self.params])
        self.last_grad_norm: Optional[float] = None

    @property
    def skipped_steps(self) -> int:
        return self.state.skipped

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
        self.last_grad_norm = norm
        if np.isfinite(norm) and norm > self.grad_norm_warn:
            # logged only; gradients are never clipped
            logger.warning("gradient norm %.3e exceeds %.3e", norm, self.grad_norm_warn)

        new_params, self.state = optimizer_step(
            [p.data for p in self.params], grads, self.state,
            lr=self.lr, betas=self.betas, eps=self.eps, weight_decay=self.weight_decay,
        )
        for p, data in zip(self.params, new_params):
            p.data = data
