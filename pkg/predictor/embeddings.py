# predictor/embeddings.py

import math

import numpy as np

from config import DEFAULT_TIMESTEP, DEFAULT_TIME_EMBED_DIM
from numeric import functional as F
from numeric.module import Module
from numeric.rng import make_rng
from numeric.tensor import Tensor
from predictor.layers import Linear

TASKS = ("normal", "rgb")


def timestep_embedding(t: int = DEFAULT_TIMESTEP, dim: int = DEFAULT_TIME_EMBED_DIM, max_period: float = 10000.0) -> np.ndarray:
    """Sinusoidal embedding of a scalar timestep, laid out as [cos | sin]."""
    if dim % 2:
        raise ValueError(f"timestep embedding dim must be even, got {dim}")
    half = dim // 2
    freqs = np.exp(-math.log(max_period) * np.arange(half) / half)
    args = float(t) * freqs
    return np.concatenate([np.cos(args), np.sin(args)])


class TaskEmbedding:
    """
    The two fixed task vectors (normal prediction / RGB reconstruction).

    Drawn once from the seed and stored read-only; they are constants, not
    parameters, so no optimizer can touch them.
    """

    def __init__(self, dim: int = DEFAULT_TIME_EMBED_DIM, seed: int = 0):
        rng = make_rng(seed, "task_embedding")
        s_n = rng.normal(0.0, 1.0, size=dim)
        s_rgb = rng.normal(0.0, 1.0, size=dim)
        s_n.setflags(write=False)
        s_rgb.setflags(write=False)
        self.s_n = s_n
        self.s_rgb = s_rgb

    def __getitem__(self, task: str) -> np.ndarray:
        if task == "normal":
            return self.s_n
        if task == "rgb":
            return self.s_rgb
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")


class TimeMLP(Module):
    def __init__(self, d_in: int, d_hidden: int, rng: np.random.Generator):
        self.lin1 = Linear(d_in, d_hidden, rng)
        self.lin2 = Linear(d_hidden, d_hidden, rng)

    def forward(self, emb: np.ndarray) -> Tensor:
        x = Tensor(emb.reshape(1, -1))
        return self.lin2(F.silu(self.lin1(x)))
