# codec/autoencoder.py

import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np

from codec.latent import DepthToSpace, LatentGrid, SpaceToDepth, check_unit_normals
from config import DEFAULT_CODEC_FACTOR
from numeric import functional as F
from numeric.module import Module
from numeric.rng import make_rng
from numeric.tensor import ShapeError, Tensor, as_tensor, parameter, value_and_grad
from training.optimizer import AdamW

logger = logging.getLogger(__name__)

PSNR_PEAK_TO_PEAK = 2.0  # maps live in [-1, 1]
MIN_PSNR_DB = 35.0


def psnr(reference: np.ndarray, reconstruction: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for maps in [-1, 1]."""
    mse = float(np.mean((np.asarray(reference) - np.asarray(reconstruction)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(PSNR_PEAK_TO_PEAK ** 2 / mse)


class ConvAutoencoderCodec(Module):
    """
    Trained linear autoencoder with an f×f, stride-f patch convolution on
    each side, the learned counterpart of the space-to-depth codec.

    Latents keep the 3f² channel layout so the predictor is unchanged; a
    smaller `bottleneck` makes the codec lossy. `fit` initializes from the
    principal components of the training blocks and refines with AdamW.
    The codec is frozen once fitted and must pass `verify` before use.
    """

    kind = "autoencoder"

    def __init__(self, factor: int = DEFAULT_CODEC_FACTOR, bottleneck: Optional[int] = None, seed: int = 0):
        if factor < 1:
            raise ValueError(f"codec factor must be positive, got {factor}")
        self.factor = factor
        self.channels = 3 * factor * factor
        self._bottleneck = bottleneck or self.channels
        if not 1 <= self._bottleneck <= self.channels:
            raise ValueError(f"bottleneck must lie in [1, {self.channels}], got {bottleneck}")
        rng = make_rng(seed, "autoencoder")
        std = 1.0 / math.sqrt(self.channels)
        self.enc_weight = parameter(rng.normal(0.0, std, size=(self.channels, self.channels)))
        self.enc_bias = parameter(np.zeros(self.channels))
        self.dec_weight = parameter(rng.normal(0.0, std, size=(self.channels, self.channels)))
        self.dec_bias = parameter(np.zeros(self.channels))
        self._mask = np.zeros((self.channels, 1))
        self._mask[: self._bottleneck] = 1.0
        self.fitted_psnr: Optional[float] = None
        self.set_trainable(False)

    @property
    def bottleneck(self) -> int:
        return self._bottleneck

    # ------------------------------------------------------------------
    # codec interface
    # ------------------------------------------------------------------
    def _blocks(self, image: Union[np.ndarray, Tensor]) -> Tensor:
        x = as_tensor(image)
        if x.ndim != 3 or x.shape[0] != 3:
            raise ShapeError(f"expected a 3×H×W map, got shape {x.shape}")
        _, height, width = x.shape
        if height % self.factor or width % self.factor:
            raise ValueError(f"image size {height}×{width} is not divisible by codec factor {self.factor}")
        return SpaceToDepth.apply(x, factor=self.factor)

    def encode(self, image: Union[np.ndarray, Tensor]) -> LatentGrid:
        blocks = self._blocks(image)
        c, h, w = blocks.shape
        z = F.matmul(self.enc_weight, blocks.reshape(c, h * w)) + self.enc_bias.reshape(-1, 1)
        z = z * self._mask
        return LatentGrid(z.reshape(c, h, w), self.factor)

    def decode(self, z: Union[LatentGrid, Tensor, np.ndarray]) -> Tensor:
        values = z.values if isinstance(z, LatentGrid) else as_tensor(z)
        if values.ndim != 3 or values.shape[0] != self.channels:
            raise ShapeError(
                f"latent has shape {values.shape}; expected {self.channels} channels for factor {self.factor}"
            )
        c, h, w = values.shape
        blocks = F.matmul(self.dec_weight, values.reshape(c, h * w)) + self.dec_bias.reshape(-1, 1)
        return DepthToSpace.apply(blocks.reshape(c, h, w), factor=self.factor)

    def encode_normal(self, normals: Union[np.ndarray, Tensor]) -> LatentGrid:
        data = normals.data if isinstance(normals, Tensor) else np.asarray(normals, dtype=np.float64)
        check_unit_normals(data)
        return self.encode(normals)

    def reconstruct(self, image: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(image)).data

    # ------------------------------------------------------------------
    # fitting
    # ------------------------------------------------------------------
    def _block_matrix(self, images: Sequence[np.ndarray]) -> np.ndarray:
        cols = [self._blocks(np.asarray(img, dtype=np.float64)).data.reshape(self.channels, -1) for img in images]
        return np.concatenate(cols, axis=1)

    def init_from_components(self, images: Sequence[np.ndarray]) -> None:
        """Closed-form optimum of the linear autoencoder: centered principal components."""
        blocks = self._block_matrix(images)
        mean = blocks.mean(axis=1)
        u, _, _ = np.linalg.svd(blocks - mean[:, None], full_matrices=True)
        # SVD signs are arbitrary; pin them so the fit is reproducible
        u = u * np.where(u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])] < 0, -1.0, 1.0)
        self.enc_weight.data = u.T.copy()
        self.enc_bias.data = -(u.T @ mean)
        self.dec_weight.data = u.copy()
        self.dec_bias.data = mean.copy()

    def fit(
        self,
        images: Sequence[np.ndarray],
        steps: int = 200,
        lr: float = 1e-4,
        seed: int = 0,
        batch: int = 4,
    ) -> List[float]:
        """
        Fit on 3×H×W maps (RGB images and normal maps alike). Returns the
        per-step reconstruction MSE of the refinement.
        """
        if not images:
            raise ValueError("fit needs at least one image")
        self.set_trainable(True)
        self.init_from_components(images)
        params = self.parameters()
        optimizer = AdamW(params, lr=lr, weight_decay=0.0)
        rng = make_rng(seed, "autoencoder-fit")
        history: List[float] = []
        for _ in range(steps):
            picks = rng.choice(len(images), size=min(batch, len(images)), replace=False)

            def loss(*_):
                total = None
                for idx in picks:
                    target = np.asarray(images[idx], dtype=np.float64)
                    diff = self.decode(self.encode(target)) - target
                    term = F.reduce_mean(F.square(diff))
                    total = term if total is None else total + term
                return total * (1.0 / len(picks))

            value, grads = value_and_grad(loss, *params)
            for p, g in zip(params, grads):
                p.grad = g
            optimizer.step()
            history.append(value)
        self.set_trainable(False)
        self.fitted_psnr = self.measure_psnr(images)
        logger.info("autoencoder fitted: %d steps, bottleneck %d/%d, %.2f dB", steps, self._bottleneck, self.channels, self.fitted_psnr)
        return history

    def measure_psnr(self, images: Sequence[np.ndarray]) -> float:
        reference = np.concatenate([np.asarray(img, dtype=np.float64).ravel() for img in images])
        recon = np.concatenate([self.reconstruct(np.asarray(img, dtype=np.float64)).ravel() for img in images])
        return psnr(reference, recon)

    def verify(self, images: Sequence[np.ndarray], min_psnr: float = MIN_PSNR_DB) -> float:
        """Raise ValueError unless the reconstruction PSNR reaches `min_psnr` dB."""
        value = self.measure_psnr(images)
        if value < min_psnr:
            raise ValueError(f"autoencoder reconstruction PSNR {value:.2f} dB is below the {min_psnr:g} dB gate")
        return value
