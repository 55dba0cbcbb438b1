# semantic/embedder.py

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from config import DEFAULT_PATCH_SIZE, DEFAULT_SEMANTIC_DIM
from numeric import functional as F
from numeric.module import Module
from numeric.rng import make_rng
from numeric.tensor import ShapeError, Tensor, parameter

logger = logging.getLogger(__name__)

ENCODER_KINDS = ("default", "low-dim", "patch-mean")


@dataclass
class SemanticTokens:
    """N_p×d_sem tokens, row-major over a gh×gw patch grid."""
    values: Tensor
    grid: Tuple[int, int]

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def patchify(image: np.ndarray, patch: int) -> Tuple[np.ndarray, Tuple[int, int]]:
    """Non-overlapping p×p patches of a 3×H×W image, flattened to 3p² each."""
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeError(f"expected a 3×H×W image, got shape {image.shape}")
    _, height, width = image.shape
    if height < patch or width < patch:
        raise ValueError(f"image {height}×{width} is smaller than one {patch}×{patch} patch")
    gh, gw = height // patch, width // patch
    cropped = image[:, :gh * patch, :gw * patch]
    patches = cropped.reshape(3, gh, patch, gw, patch).transpose(1, 3, 0, 2, 4)
    return patches.reshape(gh * gw, 3 * patch * patch), (gh, gw)


def position_features(grid: Tuple[int, int], dim: int) -> np.ndarray:
    """Fixed 2-D sinusoids: [sin(iω), cos(iω), sin(jω), cos(jω)] per frequency."""
    if dim % 4:
        raise ValueError(f"position feature dim must be divisible by 4, got {dim}")
    gh, gw = grid
    quarter = dim // 4
    omega = 1.0 / (10000.0 ** (np.arange(quarter) / quarter))
    rows, cols = np.meshgrid(np.arange(gh), np.arange(gw), indexing="ij")
    r = rows.reshape(-1, 1) * omega
    c = cols.reshape(-1, 1) * omega
    return np.concatenate([np.sin(r), np.cos(r), np.sin(c), np.cos(c)], axis=1)


def orthonormal(n_in: int, n_out: int, rng: np.random.Generator) -> np.ndarray:
    """n_in×n_out matrix with orthonormal columns (or rows when n_in < n_out)."""
    tall = n_in >= n_out
    gaussian = rng.normal(size=(n_in, n_out) if tall else (n_out, n_in))
    q, r = np.linalg.qr(gaussian)
    q = q * np.sign(np.diag(r))
    return q if tall else q.T


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=np.float64)
    array.setflags(write=False)
    return array


class SemanticEmbedder(Module):
    """
    Frozen dense patch encoder standing in for a pretrained vision backbone.

    default:    patch → orthonormal projection → tanh → seeded mixing
    low-dim:    same with half the output width
    patch-mean: mean patch colour lifted by a seeded matrix (weak on purpose)

    Fixed sinusoidal position features are added in every case. Weights are
    read-only arrays; with `trainable=True` only the mixing matrix becomes a
    parameter.
    """

    def __init__(
        self,
        kind: str = "default",
        patch_size: int = DEFAULT_PATCH_SIZE,
        dim: int = DEFAULT_SEMANTIC_DIM,
        seed: int = 0,
        trainable: bool = False,
        feature_layer: str = "final",
    ):
        if kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind {kind!r}; expected one of {ENCODER_KINDS}")
        if kind == "patch-mean" and trainable:
            raise ValueError("the patch-mean encoder has no mixing layer to train")
        self.kind = kind
        self.patch_size = patch_size
        self.dim = dim // 2 if kind == "low-dim" else dim
        self.feature_layer = feature_layer
        if self.dim % 4:
            raise ValueError(f"semantic dim must be divisible by 4, got {self.dim}")

        rng = make_rng(seed, "semantic", kind)
        n_in = 3 * patch_size * patch_size
        if kind == "patch-mean":
            self._lift = _freeze(rng.normal(0.0, 1.0, size=(3, self.dim)))
        else:
            self._projection = _freeze(orthonormal(n_in, self.dim, rng))
            self._gain = math.sqrt(self.dim / n_in)
            mixing = rng.normal(0.0, 1.0 / math.sqrt(self.dim), size=(self.dim, self.dim))
            if trainable:
                self.mixing = parameter(mixing, name="mixing")
            else:
                self._mixing = _freeze(mixing)

    @property
    def trainable(self) -> bool:
        return hasattr(self, "mixing")

    def encode(self, image: Union[np.ndarray, Tensor]) -> SemanticTokens:
        data = image.data if isinstance(image, Tensor) else np.asarray(image, dtype=np.float64)
        patches, grid = patchify(data, self.patch_size)
        pos = position_features(grid, self.dim)

        if self.kind == "patch-mean":
            means = patches.reshape(len(patches), 3, -1).mean(axis=2)
            return SemanticTokens(Tensor(means @ self._lift + pos), grid)

        hidden = np.tanh(self._gain * (patches @ self._projection))
        if self.trainable:
            values = F.matmul(Tensor(hidden), self.mixing) + pos
        else:
            values = Tensor(hidden @ self._mixing + pos)
        return SemanticTokens(values, grid)

    forward = encode

    def frozen_weights(self) -> dict:
        return {k: v for k, v in vars(self).items() if isinstance(v, np.ndarray)}

    def fingerprint(self) -> str:
        """sha256 over every frozen weight, for before/after training checks."""
        digest = hashlib.sha256()
        for name, array in sorted(self.frozen_weights().items()):
            digest.update(name.encode("utf-8"))
            digest.update(array.tobytes())
        return digest.hexdigest()


def tokenize(image: np.ndarray, patch: int = DEFAULT_PATCH_SIZE, encoder: SemanticEmbedder = None) -> SemanticTokens:
    encoder = encoder or SemanticEmbedder(patch_size=patch)
    if encoder.patch_size != patch:
        raise ValueError(f"encoder patch size {encoder.patch_size} does not match requested {patch}")
    return encoder.encode(image)


def stand_in_variant(kind: str, patch_size: int = DEFAULT_PATCH_SIZE, dim: int = DEFAULT_SEMANTIC_DIM, seed: int = 0) -> SemanticEmbedder:
    return SemanticEmbedder(kind=kind, patch_size=patch_size, dim=dim, seed=seed)
