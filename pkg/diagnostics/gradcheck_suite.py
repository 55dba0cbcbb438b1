# diagnostics/gradcheck_suite.py

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from codec.latent import SpaceToDepthCodec
from numeric import functional as F
from numeric.gradcheck import GradCheckReport, check_parameters
from numeric.rng import make_rng
from numeric.tensor import Tensor, parameter
from predictor.attention import CrossAttention
from predictor.layers import ResBlock
from predictor.pipeline import NormalPredictor
from scenegen.primitives import random_scene_spec
from scenegen.render import render
from settings import ModelConfig
from training.losses import LossWeights, latent_losses, total_loss
from wavelet.haar import haar_dwt2, haar_idwt2, WaveletBands
from wavelet.loss import wavelet_loss

logger = logging.getLogger(__name__)

Built = Tuple[Callable[[], Tensor], List[Tensor]]

MINI_MODEL = ModelConfig(
    patch_size=8,
    semantic_dim=16,
    context_dim=8,
    base_width=8,
    levels=2,
    time_embed_dim=16,
    time_hidden_dim=16,
)
MINI_IMAGE = 24


@dataclass
class GradCase:
    name: str
    build: Callable[[np.random.Generator], Built]
    max_coords: Optional[int] = None


class SuiteReport(BaseModel):
    passed: bool
    tolerance: float
    instances: int
    results: List[GradCheckReport]

    @property
    def failures(self) -> List[GradCheckReport]:
        return [r for r in self.results if not r.passed]


def _param(rng: np.random.Generator, *shape: int, low: float = -1.0, high: float = 1.0) -> Tensor:
    return parameter(rng.uniform(low, high, size=shape))


def _away_from_zero(rng: np.random.Generator, *shape: int) -> Tensor:
    values = rng.uniform(0.2, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)
    return parameter(values)


def _unary(op: Callable[[Tensor], Tensor], nonzero: bool = False) -> Callable[[np.random.Generator], Built]:
    def build(rng):
        x = _away_from_zero(rng, 3, 4) if nonzero else _param(rng, 3, 4)
        weights = rng.normal(size=(3, 4))
        return (lambda: F.reduce_sum(op(x) * weights)), [x]
    return build


def _binary(op: Callable[[Tensor, Tensor], Tensor], shape_b=(3, 4)) -> Callable[[np.random.Generator], Built]:
    def build(rng):
        a, b = _param(rng, 3, 4), _param(rng, *shape_b)
        weights = rng.normal(size=(3, 4))
        return (lambda: F.reduce_sum(op(a, b) * weights)), [a, b]
    return build


def _matmul(rng):
    a, b = _param(rng, 3, 5), _param(rng, 5, 2)
    weights = rng.normal(size=(3, 2))
    return (lambda: F.reduce_sum(F.matmul(a, b) * weights)), [a, b]


def _softmax(rng):
    x = _param(rng, 4, 6, low=-2.0, high=2.0)
    weights = rng.normal(size=(4, 6))
    return (lambda: F.reduce_sum(F.softmax_rows(x) * weights)), [x]


def _shape_ops(rng):
    x = _param(rng, 2, 3, 4)
    y = _param(rng, 2, 3, 4)
    index = np.array([2, 0, 2])
    weights = rng.normal(size=(3, 4, 2))

    def loss():
        moved = F.permute(F.reshape(x, (2, 3, 4)), (1, 2, 0))
        joined = F.concat([x, y], axis=0)
        picked = F.take(joined, index)
        return F.reduce_sum(moved * weights) + F.reduce_mean(picked * picked)
    return loss, [x, y]


def _conv(stride: int):
    def build(rng):
        x = _param(rng, 2, 6, 6)
        k = _param(rng, 3, 2, 3, 3)
        out_hw = 6 // stride
        weights = rng.normal(size=(3, out_hw, out_hw))
        return (lambda: F.reduce_sum(F.conv2d(x, k, stride=stride) * weights)), [x, k]
    return build


def _upsample(rng):
    x = _param(rng, 2, 3, 3)
    weights = rng.normal(size=(2, 6, 6))
    return (lambda: F.reduce_sum(F.upsample_nearest2x(x) * weights)), [x]


def _groupnorm(rng):
    x = _param(rng, 4, 3, 3)
    gamma = _param(rng, 4, low=0.5, high=1.5)
    beta = _param(rng, 4)
    weights = rng.normal(size=(4, 3, 3))
    return (lambda: F.reduce_sum(F.groupnorm(x, 2, gamma, beta) * weights)), [x, gamma, beta]


def _haar(rng):
    x = _param(rng, 3, 4, 6)
    w_ll = rng.normal(size=(3, 2, 3))
    w_hf = rng.normal(size=(9, 2, 3))
    w_rec = rng.normal(size=(3, 4, 6))

    def loss():
        bands = haar_dwt2(x)
        rebuilt = haar_idwt2(WaveletBands(ll=bands.ll * 2.0, hf=bands.hf))
        return F.reduce_sum(bands.ll * w_ll) + F.reduce_sum(bands.hf * w_hf) + F.reduce_sum(rebuilt * w_rec)
    return loss, [x]


def _codec(rng):
    codec = SpaceToDepthCodec(2)
    x = _param(rng, 3, 4, 4)
    w_z = rng.normal(size=(12, 2, 2))

    def loss():
        z = codec.encode(x).values
        return F.reduce_sum(z * w_z) + F.reduce_sum(F.square(codec.decode(z)))
    return loss, [x]


def _attention(rng):
    attn = CrossAttention(4, 3, rng)
    h = _param(rng, 5, 4)
    context = _param(rng, 2, 3)
    weights = rng.normal(size=(5, 4))
    return (lambda: F.reduce_sum(attn(h, context) * weights)), [h, context] + attn.parameters()


def _resblock(rng):
    block = ResBlock(4, 8, 6, rng)
    x = _param(rng, 4, 4, 4)
    t_emb = _param(rng, 1, 6)
    weights = rng.normal(size=(8, 4, 4))
    return (lambda: F.reduce_sum(block(x, t_emb) * weights)), [x, t_emb] + block.parameters()


def _latent_losses(rng):
    zn_hat, zrgb_hat = _param(rng, 4, 2, 2), _param(rng, 4, 2, 2)
    zn, zrgb = rng.uniform(-1, 1, size=(4, 2, 2)), rng.uniform(-1, 1, size=(4, 2, 2))

    def loss():
        l_n, l_rgb = latent_losses(zn_hat, zn, zrgb_hat, zrgb)
        return l_n + l_rgb * 0.5
    return loss, [zn_hat, zrgb_hat]


def _wavelet(mode: str):
    def build(rng):
        gt = rng.normal(size=(3, 8, 8))
        gt /= np.linalg.norm(gt, axis=0, keepdims=True)
        pred = parameter(gt + rng.uniform(0.05, 0.3, size=gt.shape) * rng.choice([-1.0, 1.0], size=gt.shape))

        def loss():
            _, _, l_wv = wavelet_loss(pred, gt, mode=mode)
            return l_wv
        return loss, [pred]
    return build


def _total_loss(rng):
    seed = int(rng.integers(0, 2**31 - 1))
    model = NormalPredictor(MINI_MODEL.model_copy(update={"seed": seed % 1000}))
    sample = render(random_scene_spec(seed, MINI_IMAGE))
    weights = LossWeights()

    def loss():
        total, _ = total_loss([sample], model, weights, mode="edge")
        return total
    return loss, model.trainable_parameters()


def op_cases() -> List[GradCase]:
    return [
        GradCase("add", _binary(F.add)),
        GradCase("add_broadcast", _binary(F.add, shape_b=(4,))),
        GradCase("mul", _binary(F.mul)),
        GradCase("neg", _unary(F.neg)),
        GradCase("abs", _unary(F.absolute, nonzero=True)),
        GradCase("square", _unary(F.square)),
        GradCase("tanh", _unary(F.tanh)),
        GradCase("silu", _unary(F.silu)),
        GradCase("reduce_mean", _unary(lambda x: F.reduce_mean(x, axis=1, keepdims=True) * x)),
        GradCase("matmul", _matmul),
        GradCase("softmax_rows", _softmax),
        GradCase("shape_ops", _shape_ops),
        GradCase("conv2d", _conv(1)),
        GradCase("conv2d_stride2", _conv(2)),
        GradCase("upsample_nearest2x", _upsample),
        GradCase("groupnorm", _groupnorm),
        GradCase("haar", _haar),
        GradCase("codec", _codec),
        GradCase("cross_attention", _attention),
        GradCase("resblock", _resblock, max_coords=6),
        GradCase("latent_losses", _latent_losses),
        GradCase("wavelet_edge", _wavelet("edge")),
        GradCase("wavelet_interior", _wavelet("interior")),
        GradCase("wavelet_ll_only", _wavelet("ll_only")),
    ]


def model_cases() -> List[GradCase]:
    return [GradCase("total_loss", _total_loss, max_coords=2)]


def run_case(case: GradCase, instance: int, seed: int = 0, tol: float = 1e-4) -> GradCheckReport:
    rng = make_rng(seed, "gradcheck", case.name, instance)
    loss_fn, params = case.build(rng)
    return check_parameters(
        loss_fn, params, tol=tol, max_coords=case.max_coords, rng=rng, name=f"{case.name}[{instance}]",
    )


def run_suite(
    instances: int = 10,
    seed: int = 0,
    tol: float = 1e-4,
    include_model: bool = True,
    model_instances: Optional[int] = None,
    names: Optional[Sequence[str]] = None,
) -> SuiteReport:
    """Central-difference check of every differentiable op and of the composed loss."""
    cases = op_cases() + (model_cases() if include_model else [])
    if names:
        unknown = sorted(set(names) - {c.name for c in cases})
        if unknown:
            raise ValueError(f"unknown gradient checks: {unknown}")
        cases = [c for c in cases if c.name in names]

    model_names = {c.name for c in model_cases()}
    results: List[GradCheckReport] = []
    for case in cases:
        n = model_instances if (model_instances is not None and case.name in model_names) else instances
        for instance in range(n):
            results.append(run_case(case, instance, seed=seed, tol=tol))
        worst = max(r.max_rel_error for r in results[-n:]) if n else 0.0
        logger.info("gradcheck %-20s %d instances, worst rel. error %.2e", case.name, n, worst)

    return SuiteReport(passed=all(r.passed for r in results), tolerance=tol, instances=instances, results=results)
