# wavelet/loss.py

from typing import Literal, Optional, Tuple, Union

import numpy as np

from numeric.tensor import ShapeError, Tensor, as_tensor
from wavelet.edge import EdgeNorm, edge_mask
from wavelet.haar import haar_dwt2

WaveletMode = Literal["edge", "interior", "ll_only"]
WAVELET_MODES = ("edge", "interior", "ll_only")


def hf_weights(n_gt: np.ndarray, mode: WaveletMode, normalization: EdgeNorm = "per_image") -> Optional[np.ndarray]:
    """Per-position weights for the HF term (None when the term is off)."""
    if mode == "ll_only":
        return None
    mask = edge_mask(n_gt, normalization)
    if mode == "edge":
        return mask
    if mode == "interior":
        return 1.0 - mask
    raise ValueError(f"unknown wavelet loss mode {mode!r}; expected one of {WAVELET_MODES}")


def wavelet_loss(
    n_pred: Union[Tensor, np.ndarray],
    n_gt: Union[Tensor, np.ndarray],
    mode: WaveletMode = "edge",
    normalization: EdgeNorm = "per_image",
) -> Tuple[Tensor, Tensor, Tensor]:
    """
    (low-pass, high-frequency, total) wavelet losses between a decoded prediction and ground truth.

    Both L1 terms are means over all positions; the HF mask acts as a
    constant weight broadcast over the nine detail channels.
    """
    pred = as_tensor(n_pred)
    gt = n_gt.data if isinstance(n_gt, Tensor) else np.asarray(n_gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    if mode not in WAVELET_MODES:
        raise ValueError(f"unknown wavelet loss mode {mode!r}; expected one of {WAVELET_MODES}")

    bands = haar_dwt2(pred - gt)
    loss_ll = bands.ll.abs().mean()

    weights = hf_weights(gt, mode, normalization)
    if weights is None:
        loss_hf = Tensor(0.0)
    else:
        loss_hf = (bands.hf * weights[None, :, :]).abs().mean()
    return loss_ll, loss_hf, loss_ll + loss_hf
