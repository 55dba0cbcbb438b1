# training/losses.py

import logging
from typing import Dict, Sequence, Tuple

from pydantic import BaseModel, Field

from config import DEFAULT_LAMBDA_RGB, DEFAULT_LAMBDA_WV
from numeric.tensor import ShapeError, Tensor, as_tensor
from scenegen.sample import SceneSample
from wavelet.loss import wavelet_loss

logger = logging.getLogger(__name__)

LOSS_MODES = ("edge", "interior", "ll_only", "none")


class LossWeights(BaseModel):
    lambda_rgb: float = Field(DEFAULT_LAMBDA_RGB, ge=0)
    lambda_wv: float = Field(DEFAULT_LAMBDA_WV, ge=0)


class LossReport(BaseModel):
    """Scalar loss terms of one step (batch means)."""
    normal: float
    rgb: float
    ll: float
    hf: float
    wavelet: float
    total: float

    def identity_gap(self, weights: LossWeights) -> float:
        expected = self.normal + weights.lambda_rgb * self.rgb + weights.lambda_wv * self.wavelet
        return abs(self.total - expected)


def mse(pred: Tensor, target) -> Tensor:
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = pred - target
    return (diff * diff).mean()


def latent_losses(zn_hat: Tensor, zn, zrgb_hat: Tensor, zrgb) -> Tuple[Tensor, Tensor]:
    """Mean squared latent reconstruction errors for the normal and rgb branches."""
    return mse(as_tensor(zn_hat), zn), mse(as_tensor(zrgb_hat), zrgb)


def sample_terms(model, sample: SceneSample, mode: str = "edge", edge_norm: str = "per_image") -> Dict[str, Tensor]:
    """Both task passes for one sample; returns the unweighted loss tensors."""
    codec = model.codec
    z_rgb = codec.encode(sample.rgb).values
    z_n = codec.encode_normal(sample.normal).values
    context = model.condition(sample.rgb)

    zn_hat = model.run(z_rgb, "normal", context)
    zrgb_hat = model.run(z_rgb, "rgb", context)
    loss_n, loss_rgb = latent_losses(zn_hat, z_n, zrgb_hat, z_rgb)

    if mode == "none":
        zero = Tensor(0.0)
        loss_ll, loss_hf, loss_wv = zero, zero, zero
    else:
        decoded = codec.decode(zn_hat)
        loss_ll, loss_hf, loss_wv = wavelet_loss(decoded, sample.normal, mode=mode, normalization=edge_norm)
    return {"normal": loss_n, "rgb": loss_rgb, "ll": loss_ll, "hf": loss_hf, "wavelet": loss_wv}


def total_loss(
    batch: Sequence[SceneSample],
    model,
    weights: LossWeights = None,
    mode: str = "edge",
    edge_norm: str = "per_image",
) -> Tuple[Tensor, LossReport]:
    """
    total = normal + λ_rgb·rgb + λ_wv·wavelet, averaged over the batch.

    Returns the differentiable total together with a report of every term.
    """
    if not batch:
        raise ValueError("cannot compute a loss on an empty batch")
    if mode not in LOSS_MODES:
        raise ValueError(f"unknown loss mode {mode!r}; expected one of {LOSS_MODES}")
    weights = weights or LossWeights()

    sums: Dict[str, Tensor] = {}
    for sample in batch:
        for name, value in sample_terms(model, sample, mode, edge_norm).items():
            sums[name] = value if name not in sums else sums[name] + value
    means = {name: value * (1.0 / len(batch)) for name, value in sums.items()}

    total = means["normal"] + means["rgb"] * weights.lambda_rgb + means["wavelet"] * weights.lambda_wv
    report = LossReport(
        normal=means["normal"].item(),
        rgb=means["rgb"].item(),
        ll=means["ll"].item(),
        hf=means["hf"].item(),
        wavelet=means["wavelet"].item(),
        total=total.item(),
    )
    return total, report


def loss_weights_from(train_config) -> LossWeights:
    return LossWeights(lambda_rgb=train_config.lambda_rgb, lambda_wv=train_config.lambda_wv)
