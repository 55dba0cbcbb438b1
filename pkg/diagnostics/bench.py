# diagnostics/bench.py

import logging
import time
from typing import List, Optional

import numpy as np
from pydantic import BaseModel

from numeric.rng import make_rng
from numeric.tensor import Tape, backward, zero_grad
from predictor.pipeline import NormalPredictor
from scenegen.primitives import random_scene_spec
from scenegen.render import render
from scenegen.sample import SceneSample
from settings import RunConfig
from training.losses import loss_weights_from, total_loss

logger = logging.getLogger(__name__)


class BenchReport(BaseModel):
    """Local latency/throughput of the desk-scale predictor. Timings are null in deterministic mode."""
    image_size: int
    parameters: int
    runs: int
    forward_calls_per_inference: int
    latency_ms_mean: Optional[float] = None
    latency_ms_p50: Optional[float] = None
    latency_ms_p95: Optional[float] = None
    images_per_s: Optional[float] = None
    train_step_ms: Optional[float] = None


def _timed(fn, runs: int) -> List[float]:
    times = []
    for _ in range(runs):
        started = time.perf_counter()
        fn()
        times.append((time.perf_counter() - started) * 1000.0)
    return times


def training_step(model: NormalPredictor, batch: List[SceneSample], config: RunConfig) -> float:
    """Forward and backward pass of one optimizer step, without the update. Gradients start from zero."""
    params = model.trainable_parameters(freeze_predictor=config.train.freeze_predictor)
    zero_grad(params)
    with Tape():
        loss, report = total_loss(batch, model, loss_weights_from(config.train), config.train.loss_mode, config.train.edge_norm)
        backward(loss)
    return report.total


def run_bench(config: RunConfig, runs: int = 5, warmup: int = 1, train_steps: int = 2) -> BenchReport:
    """Time single-pass inference and one full training step on rendered scenes."""
    if runs < 1:
        raise ValueError(f"runs must be at least 1, got {runs}")
    size = config.data.image_size
    model = NormalPredictor(config.model)
    sample = render(random_scene_spec(config.seed, size))
    image = sample.rgb

    for _ in range(warmup):
        model.predict_normal(image)
    before = model.forward_calls
    model.predict_normal(image)
    calls = model.forward_calls - before

    latencies = np.array(_timed(lambda: model.predict_normal(image), runs))

    batch = [render(random_scene_spec(int(make_rng(config.seed, "bench").integers(0, 2**31 - 1)), size))]
    step_times = _timed(lambda: training_step(model, batch, config), max(train_steps, 1))
    report = BenchReport(
        image_size=size,
        parameters=sum(p.size for p in model.trainable_parameters()),
        runs=runs,
        forward_calls_per_inference=calls,
    )
    if not config.deterministic:
        report.latency_ms_mean = round(float(latencies.mean()), 3)
        report.latency_ms_p50 = round(float(np.percentile(latencies, 50)), 3)
        report.latency_ms_p95 = round(float(np.percentile(latencies, 95)), 3)
        report.images_per_s = round(1000.0 / float(latencies.mean()), 3)
        report.train_step_ms = round(float(np.mean(step_times)), 3)
    logger.info("bench: %d params, %s ms per image", report.parameters, report.latency_ms_mean)
    return report
