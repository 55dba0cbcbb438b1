# settings.py

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import (
    ACCURACY_THRESHOLDS,
    ADAMW_BETAS,
    ADAMW_EPS,
    ADAMW_WEIGHT_DECAY,
    DEFAULT_BASE_WIDTH,
    DEFAULT_BATCH_SIZE,
    DEFAULT_CODEC_FACTOR,
    DEFAULT_IMAGE_SIZE,
    DEFAULT_LAMBDA_RGB,
    DEFAULT_LAMBDA_WV,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LEVELS,
    DEFAULT_PATCH_SIZE,
    DEFAULT_SEMANTIC_DIM,
    DEFAULT_STEPS,
    DEFAULT_TIMESTEP,
    DEFAULT_TIME_EMBED_DIM,
    DEFAULT_TIME_HIDDEN_DIM,
    DEFAULT_UNET_CONTEXT_DIM,
    ERROR_MAP_MAX_DEG,
    GRAD_NORM_WARN,
    OUTPUT_DIR,
)

logger = logging.getLogger(__name__)

EncoderKind = Literal["default", "low-dim", "patch-mean"]
LossMode = Literal["edge", "interior", "ll_only", "none"]


class ConfigError(ValueError):
    """A rejected configuration or input, raised before a command writes anything."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())


class ModelConfig(_Strict):
    """Codec, semantic encoder and predictor architecture."""
    codec: Literal["space_to_depth", "autoencoder"] = "space_to_depth"
    codec_factor: int = Field(DEFAULT_CODEC_FACTOR, ge=1)
    codec_bottleneck: Optional[int] = Field(None, ge=1)
    codec_fit_steps: int = Field(50, ge=0)
    codec_min_psnr: float = Field(35.0, gt=0)
    patch_size: int = Field(DEFAULT_PATCH_SIZE, ge=1)
    semantic_dim: int = Field(DEFAULT_SEMANTIC_DIM, ge=4)
    encoder_kind: EncoderKind = "default"
    encoder_trainable: bool = False
    # recorded for a future real-encoder integration; the stand-in has one layer choice
    feature_layer: str = "final"
    semantic_conditioning: bool = True
    context_dim: int = Field(DEFAULT_UNET_CONTEXT_DIM, ge=1)
    base_width: int = Field(DEFAULT_BASE_WIDTH, ge=1)
    levels: int = Field(DEFAULT_LEVELS, ge=1, le=5)
    attention_levels: Optional[List[bool]] = None
    time_embed_dim: int = Field(DEFAULT_TIME_EMBED_DIM, ge=2)
    time_hidden_dim: int = Field(DEFAULT_TIME_HIDDEN_DIM, ge=1)
    timestep: int = Field(DEFAULT_TIMESTEP, ge=0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_dims(self) -> "ModelConfig":
        if self.semantic_dim % 4:
            raise ValueError(f"model.semantic_dim must be divisible by 4, got {self.semantic_dim}")
        if self.encoder_kind == "low-dim" and (self.semantic_dim // 2) % 4:
            raise ValueError(f"model.semantic_dim/2 must be divisible by 4 for the low-dim encoder, got {self.semantic_dim}")
        if self.time_embed_dim % 2:
            raise ValueError(f"model.time_embed_dim must be even, got {self.time_embed_dim}")
        if self.attention_levels is not None and len(self.attention_levels) != self.levels:
            raise ValueError(
                f"model.attention_levels has {len(self.attention_levels)} entries for {self.levels} levels"
            )
        return self

    @property
    def size_multiple(self) -> int:
        """Image height and width must be multiples of this."""
        return self.codec_factor * 2 ** (self.levels - 1)


class TrainConfig(_Strict):
    lr: float = Field(DEFAULT_LEARNING_RATE, gt=0)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1)
    steps: int = Field(DEFAULT_STEPS, ge=0)
    loss_mode: LossMode = "edge"
    lambda_rgb: float = Field(DEFAULT_LAMBDA_RGB, ge=0)
    lambda_wv: float = Field(DEFAULT_LAMBDA_WV, ge=0)
    edge_norm: Literal["per_image", "fixed"] = "per_image"
    betas: Tuple[float, float] = ADAMW_BETAS
    eps: float = Field(ADAMW_EPS, gt=0)
    weight_decay: float = Field(ADAMW_WEIGHT_DECAY, ge=0)
    flip_prob: float = Field(0.5, ge=0, le=1)
    material_swap_prob: float = Field(0.0, ge=0, le=1)
    freeze_predictor: bool = False
    mixture: Dict[str, float] = Field(default_factory=dict)
    eval_every: int = Field(500, ge=0)
    eval_samples: int = Field(16, ge=1)
    checkpoint_every: int = Field(1000, ge=0)
    grad_norm_warn: float = Field(GRAD_NORM_WARN, gt=0)

    @field_validator("betas")
    @classmethod
    def _check_betas(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not all(0.0 <= b < 1.0 for b in value):
            raise ValueError(f"train.betas must lie in [0, 1), got {value}")
        return value

    @field_validator("mixture")
    @classmethod
    def _check_mixture(cls, value: Dict[str, float]) -> Dict[str, float]:
        if any(w < 0 for w in value.values()):
            raise ValueError(f"train.mixture weights must be non-negative, got {value}")
        if value and sum(value.values()) <= 0:
            raise ValueError("train.mixture weights must sum to a positive value")
        return value


class DataConfig(_Strict):
    """Where training data lives and how procedural scenes are generated."""
    sources: Dict[str, str] = Field(default_factory=dict)
    train_split: str = "train"
    eval_split: str = "test"
    image_size: int = Field(DEFAULT_IMAGE_SIZE, ge=16)
    count: int = Field(80, ge=1)
    train_frac: float = Field(0.8, ge=0, le=1)
    base_seed: int = Field(0, ge=0)
    max_objects: int = Field(3, ge=1)
    transparent_prob: float = Field(0.7, ge=0, le=1)
    ground_plane_prob: float = Field(0.8, ge=0, le=1)

    @field_validator("image_size")
    @classmethod
    def _check_even(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"data.image_size must be even, got {value}")
        return value


class EvalConfig(_Strict):
    mask_kind: Literal["transparent", "fg"] = "transparent"
    max_degrees: float = Field(ERROR_MAP_MAX_DEG, gt=0)
    tie_policy: Literal["fractional", "min"] = "fractional"
    thresholds: Tuple[float, ...] = ACCURACY_THRESHOLDS


class RunConfig(_Strict):
    seed: int = Field(0, ge=0)
    deterministic: bool = False
    workers: int = Field(1, ge=1)
    out: str = str(OUTPUT_DIR)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @property
    def effective_workers(self) -> int:
        return 1 if self.deterministic else self.workers

    @model_validator(mode="after")
    def _check_image_size(self) -> "RunConfig":
        multiple = self.model.size_multiple
        if self.data.image_size % multiple:
            raise ValueError(
                f"data.image_size {self.data.image_size} must be divisible by {multiple} "
                f"(codec factor {self.model.codec_factor} × 2^(levels-1))"
            )
        if self.data.image_size < self.model.patch_size:
            raise ValueError(f"data.image_size {self.data.image_size} is smaller than one patch ({self.model.patch_size})")
        return self


# ----------------------------------------------------------------------
# flat dotted-key JSON
# ----------------------------------------------------------------------
def flatten(tree: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict) and value:
            flat.update(flatten(value, prefix=f"{name}."))
        else:
            flat[name] = list(value) if isinstance(value, tuple) else value
    return flat


def unflatten(flat: Dict[str, Any]) -> Dict[str, Any]:
    tree: Dict[str, Any] = {}
    for key, value in flat.items():
        node = tree
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ValueError(f"config key {key!r} conflicts with a value at {part!r}")
            node = child
        node[parts[-1]] = value
    return tree


def parse_override(item: str) -> Tuple[str, Any]:
    """`key=value`; the value is read as JSON when possible, else as a string."""
    if "=" not in item:
        raise ValueError(f"override {item!r} must look like key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Sequence[str] = (),
    **top_level: Any,
) -> RunConfig:
    """
    Build a validated RunConfig from a flat JSON file, `--set` overrides and
    explicit top-level values (later sources win).
    """
    flat: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        loaded = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {path} must contain a JSON object")
        flat.update(flatten(loaded))
    for item in overrides:
        key, value = parse_override(item)
        flat[key] = value
    flat.update({k: v for k, v in top_level.items() if v is not None})
    return RunConfig.model_validate(unflatten(flat))


def resolved_config(config: RunConfig) -> Dict[str, Any]:
    return dict(sorted(flatten(config.model_dump(mode="json")).items()))


def write_resolved_config(config: RunConfig, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "config.json"
    path.write_text(json.dumps(resolved_config(config), indent=2) + "\n", encoding="utf-8")
    logger.info("resolved config written to %s", path)
    return path
