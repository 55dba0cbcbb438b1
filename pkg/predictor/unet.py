# predictor/unet.py

import logging
from typing import List, Optional, Sequence

from config import (
    DEFAULT_BASE_WIDTH,
    DEFAULT_LEVELS,
    DEFAULT_TIMESTEP,
    DEFAULT_TIME_EMBED_DIM,
    DEFAULT_TIME_HIDDEN_DIM,
    DEFAULT_UNET_CONTEXT_DIM,
)
from numeric import functional as F
from numeric.module import Module
from numeric.rng import make_rng
from numeric.tensor import ShapeError, Tensor
from predictor.attention import CrossAttention
from predictor.embeddings import TaskEmbedding, TimeMLP, timestep_embedding
from predictor.layers import Conv2d, GroupNorm, ResBlock

logger = logging.getLogger(__name__)


class UNet(Module):
    """
    Miniature encoder-decoder with skip connections and cross-attention.

    Widths double per level starting from `base_width`. Each encoder level is a
    ResBlock followed by optional cross-attention and (except at the bottom)
    a stride-2 convolution; each decoder level upsamples, concatenates the
    matching encoder features and applies a ResBlock plus optional attention.
    The timestep is fixed, and the task embedding is added to its sinusoidal
    embedding before the time MLP.
    """

    def __init__(
        self,
        in_channels: int = 48,
        base_width: int = DEFAULT_BASE_WIDTH,
        levels: int = DEFAULT_LEVELS,
        context_dim: int = DEFAULT_UNET_CONTEXT_DIM,
        attention_levels: Optional[Sequence[bool]] = None,
        time_embed_dim: int = DEFAULT_TIME_EMBED_DIM,
        time_hidden_dim: int = DEFAULT_TIME_HIDDEN_DIM,
        timestep: int = DEFAULT_TIMESTEP,
        seed: int = 0,
    ):
        if levels < 1:
            raise ValueError(f"levels must be >= 1, got {levels}")
        mask = list(attention_levels) if attention_levels is not None else [True] * levels
        if len(mask) != levels:
            raise ValueError(f"attention mask has {len(mask)} entries for {levels} levels")

        rng = make_rng(seed, "unet")
        widths = [base_width * 2 ** i for i in range(levels)]

        self.time_mlp = TimeMLP(time_embed_dim, time_hidden_dim, rng)
        self.conv_in = Conv2d(in_channels, widths[0], rng)

        down_blocks: List[ResBlock] = []
        down_attn: List[Optional[CrossAttention]] = []
        downsamplers: List[Conv2d] = []
        c_prev = widths[0]
        for level, width in enumerate(widths):
            down_blocks.append(ResBlock(c_prev, width, time_hidden_dim, rng))
            down_attn.append(CrossAttention(width, context_dim, rng) if mask[level] else None)
            if level < levels - 1:
                downsamplers.append(Conv2d(width, width, rng, stride=2))
            c_prev = width

        up_blocks: List[ResBlock] = []
        up_attn: List[Optional[CrossAttention]] = []
        for level in reversed(range(levels - 1)):
            up_blocks.append(ResBlock(c_prev + widths[level], widths[level], time_hidden_dim, rng))
            up_attn.append(CrossAttention(widths[level], context_dim, rng) if mask[level] else None)
            c_prev = widths[level]

        self.down_blocks = down_blocks
        self.down_attn = down_attn
        self.downsamplers = downsamplers
        self.up_blocks = up_blocks
        self.up_attn = up_attn
        self.norm_out = GroupNorm(widths[0])
        self.conv_out = Conv2d(widths[0], in_channels, rng)

        self.task_embedding = TaskEmbedding(time_embed_dim, seed=seed)
        self._t_emb = timestep_embedding(timestep, time_embed_dim)
        self._t_emb.setflags(write=False)
        self._in_channels = in_channels
        self._levels = levels
        self._context_dim = context_dim

    @property
    def in_channels(self) -> int:
        return self._in_channels

    @property
    def levels(self) -> int:
        return self._levels

    @property
    def context_dim(self) -> int:
        return self._context_dim

    @property
    def size_multiple(self) -> int:
        """Latent height and width must be multiples of this."""
        return 2 ** (self._levels - 1)

    def check_latent(self, z: Tensor) -> None:
        if z.ndim != 3 or z.shape[0] != self._in_channels:
            raise ShapeError(f"latent must have shape {self._in_channels}×h×w, got {z.shape}")
        _, h, w = z.shape
        m = self.size_multiple
        if h % m or w % m:
            raise ShapeError(f"latent size {h}×{w} must be divisible by {m} for {self._levels} levels")
        if min(h, w) // m < 3:
            raise ShapeError(f"latent size {h}×{w} is too small: the coarsest level needs at least 3×3")

    def forward(self, z: Tensor, task: str, context: Optional[Tensor] = None) -> Tensor:
        self.check_latent(z)
        if context is not None and (context.ndim != 2 or context.shape[1] != self._context_dim):
            raise ShapeError(f"conditioning must be N×{self._context_dim}, got {context.shape}")

        emb = self._t_emb + self.task_embedding[task]
        t = F.silu(self.time_mlp(emb))

        h = self.conv_in(z)
        skips: List[Tensor] = []
        for level, block in enumerate(self.down_blocks):
            h = block(h, t)
            attn = self.down_attn[level]
            if attn is not None and context is not None:
                h = attn.forward_map(h, context)
            if level < self._levels - 1:
                skips.append(h)
                h = self.downsamplers[level](h)

        for block, attn in zip(self.up_blocks, self.up_attn):
            h = F.upsample_nearest2x(h)
            h = F.concat([h, skips.pop()], axis=0)
            h = block(h, t)
            if attn is not None and context is not None:
                h = attn.forward_map(h, context)

        return self.conv_out(F.silu(self.norm_out(h)))

    def attention_blocks(self) -> List[CrossAttention]:
        return [a for a in self.down_attn + self.up_attn if a is not None]

    def describe(self) -> str:
        return f"UNet(levels={self._levels}, in={self._in_channels}, params={self.num_parameters():,})"
