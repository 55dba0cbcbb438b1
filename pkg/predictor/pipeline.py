# predictor/pipeline.py

import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from codec.autoencoder import ConvAutoencoderCodec
from codec.latent import LatentGrid, SpaceToDepthCodec
from numeric.module import Module
from numeric.tensor import ShapeError, Tensor, active_tape
from predictor.checkpoint import load_checkpoint, save_checkpoint
from predictor.unet import UNet
from semantic.embedder import SemanticEmbedder
from semantic.projector import SemanticProjector
from settings import ModelConfig

logger = logging.getLogger(__name__)


def renormalize(normals: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Per-pixel unit vectors; zero vectors become (0, 0, 1)."""
    norms = np.linalg.norm(normals, axis=0, keepdims=True)
    degenerate = norms[0] < eps
    out = normals / np.where(norms < eps, 1.0, norms)
    out[:, degenerate] = np.array([0.0, 0.0, 1.0])[:, None]
    return out


def build_codec(config: ModelConfig):
    """Codec named by the config; an autoencoder comes back unfitted."""
    if config.codec == "autoencoder":
        return ConvAutoencoderCodec(config.codec_factor, bottleneck=config.codec_bottleneck, seed=config.seed)
    return SpaceToDepthCodec(config.codec_factor)


class NormalPredictor(Module):
    """
    Image → normal map in one network evaluation.

    encode the image, condition on projected semantic tokens, run the U-Net
    with the normal task embedding, decode, renormalize per pixel. The same
    network run with the RGB task embedding reconstructs the input latent.
    """

    def __init__(self, config: Optional[ModelConfig] = None, codec=None):
        config = config or ModelConfig()
        self.config = config
        self.codec = codec if codec is not None else build_codec(config)
        if self.codec.factor != config.codec_factor:
            raise ValueError(f"codec factor {self.codec.factor} does not match model.codec_factor {config.codec_factor}")
        self.encoder = SemanticEmbedder(
            kind=config.encoder_kind,
            patch_size=config.patch_size,
            dim=config.semantic_dim,
            seed=config.seed,
            trainable=config.encoder_trainable,
            feature_layer=config.feature_layer,
        )
        self.projector = SemanticProjector(self.encoder.dim, config.context_dim, seed=config.seed)
        self.unet = UNet(
            in_channels=self.codec.channels,
            base_width=config.base_width,
            levels=config.levels,
            context_dim=config.context_dim,
            attention_levels=config.attention_levels,
            time_embed_dim=config.time_embed_dim,
            time_hidden_dim=config.time_hidden_dim,
            timestep=config.timestep,
            seed=config.seed,
        )
        self.forward_calls = 0
        logger.info(
            "predictor: %s, projector %d params, encoder %s (d_sem=%d, trainable=%s)",
            self.unet.describe(), self.projector.num_parameters(),
            self.encoder.kind, self.encoder.dim, self.encoder.trainable,
        )

    # ------------------------------------------------------------------
    # validation
    # ------------------------------------------------------------------
    @property
    def size_multiple(self) -> int:
        return self.codec.factor * self.unet.size_multiple

    def check_image(self, image: np.ndarray) -> None:
        if image.ndim != 3 or image.shape[0] != 3:
            raise ShapeError(f"expected a 3×H×W image, got shape {image.shape}")
        _, height, width = image.shape
        m = self.size_multiple
        if height % m or width % m:
            raise ValueError(f"image size {height}×{width} must be divisible by {m}")
        p = self.encoder.patch_size
        if height < p or width < p:
            raise ValueError(f"image size {height}×{width} is smaller than one {p}×{p} patch")

    # ------------------------------------------------------------------
    # forward passes
    # ------------------------------------------------------------------
    def condition(self, image: np.ndarray) -> Optional[Tensor]:
        if not self.config.semantic_conditioning:
            return None
        return self.projector(self.encoder.encode(image))

    def run(self, z: Union[LatentGrid, Tensor], task: str, context: Optional[Tensor]) -> Tensor:
        """One U-Net evaluation."""
        self.forward_calls += 1
        values = z.values if isinstance(z, LatentGrid) else z
        return self.unet(values, task, context)

    def predict_latent(self, image: np.ndarray, task: str = "normal") -> Tensor:
        self.check_image(image)
        z = self.codec.encode(image)
        return self.run(z, task, self.condition(image))

    def predict_normal(self, image: np.ndarray) -> np.ndarray:
        if active_tape() is not None:
            logger.debug("predict_normal called inside an active tape; the pass will be recorded")
        image = np.asarray(image, dtype=np.float64)
        z_hat = self.predict_latent(image, task="normal")
        decoded = self.codec.decode(z_hat).data
        return renormalize(decoded)

    # ------------------------------------------------------------------
    # parameters
    # ------------------------------------------------------------------
    def trainable_parameters(self, freeze_predictor: bool = False) -> List[Tensor]:
        params: List[Tensor] = []
        if not freeze_predictor:
            params.extend(self.unet.parameters())
        params.extend(self.projector.parameters())
        params.extend(self.encoder.parameters())
        return params

    def save(self, path: Union[str, Path]) -> Path:
        return save_checkpoint(path, self.state_dict())

    def load(self, path: Union[str, Path]) -> "NormalPredictor":
        self.load_state_dict(load_checkpoint(path))
        return self

    @classmethod
    def from_checkpoint(cls, path: Union[str, Path], config: Optional[ModelConfig] = None, codec=None) -> "NormalPredictor":
        return cls(config, codec=codec).load(path)
