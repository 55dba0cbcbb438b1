# training/trainer.py

import hashlib
import json
import logging
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel
from tqdm import tqdm

from codec.autoencoder import ConvAutoencoderCodec
from evaluation.metrics import MetricsReport, aggregate_errors, angular_error_map
from ingestion.loader import load_split
from numeric.module import Module
from numeric.rng import make_rng
from numeric.tensor import NonFiniteError, Tape, backward
from predictor.pipeline import NormalPredictor
from scenegen.sample import SceneSample
from settings import RunConfig
from training.augment import augment_flip, material_swap
from training.losses import LossReport, loss_weights_from, total_loss
from training.optimizer import AdamW
from training.sampling import WeightedSource, sample_batch, validate_sources

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

IDENTITY_TOLERANCE = 1e-12
METRICS_LOG = "metrics.jsonl"
EVAL_LOG = "eval.jsonl"
FINAL_CHECKPOINT = "model.tnrm"


class TrainingDivergedError(RuntimeError):
    """The loss went non-finite; `step` is the 1-based step that produced it."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"training diverged at step {step}")


class TrainResult(BaseModel):
    out_dir: str
    steps: int
    checkpoint: str
    metrics_log: str
    eval_log: Optional[str] = None
    last_loss: Optional[LossReport] = None
    last_eval: Optional[MetricsReport] = None
    skipped_steps: int = 0
    codec_psnr: Optional[float] = None


# ----------------------------------------------------------------------
# data
# ----------------------------------------------------------------------
def build_sources(config: RunConfig) -> List[WeightedSource]:
    """One weighted source per `data.sources` entry; unlisted mixture weights default to 1."""
    data, mixture = config.data, config.train.mixture
    if not data.sources:
        raise ValueError("data.sources is empty; generate a dataset first and point data.sources.<name> at it")
    unknown = sorted(set(mixture) - set(data.sources))
    if unknown:
        raise ValueError(f"train.mixture names unknown sources: {unknown}")
    sources = [
        WeightedSource(name=name, items=load_split(path, data.train_split, source=name), weight=float(mixture.get(name, 1.0)))
        for name, path in data.sources.items()
    ]
    validate_sources(sources)
    return sources


def load_eval_samples(config: RunConfig) -> List[SceneSample]:
    if not config.data.sources:
        return []
    name, path = next(iter(config.data.sources.items()))
    if not (Path(path) / config.data.eval_split).is_dir():
        logger.warning("no %s split under %s; periodic evaluation disabled", config.data.eval_split, path)
        return []
    return load_split(path, config.data.eval_split, source=name, limit=config.train.eval_samples)


def assemble_batch(sources: Sequence[WeightedSource], config: RunConfig, step: int) -> List[SceneSample]:
    """Batch for one step; a pure function of (seed, step), whichever worker builds it."""
    train = config.train
    rng = make_rng(config.seed, "batch", step)
    batch = sample_batch(sources, train.batch_size, rng)
    return [augment_flip(material_swap(s, rng, train.material_swap_prob), rng, train.flip_prob) for s in batch]


def batch_stream(sources: Sequence[WeightedSource], config: RunConfig, steps: int) -> Iterator[List[SceneSample]]:
    """Batches for steps 1..steps in order, prefetched by a bounded pool when workers > 1."""
    workers = config.effective_workers
    if workers <= 1:
        for step in range(1, steps + 1):
            yield assemble_batch(sources, config, step)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = deque()
        next_step = 1
        for _ in range(steps):
            while next_step <= steps and len(pending) < 2 * workers:
                pending.append(pool.submit(assemble_batch, sources, config, next_step))
                next_step += 1
            yield pending.popleft().result()


# ----------------------------------------------------------------------
# frozen parts
# ----------------------------------------------------------------------
def frozen_fingerprint(model: NormalPredictor) -> str:
    """sha256 over the semantic encoder, the task embeddings and a trained codec."""
    digest = hashlib.sha256()
    digest.update(model.encoder.fingerprint().encode("utf-8"))
    digest.update(model.unet.task_embedding.s_n.tobytes())
    digest.update(model.unet.task_embedding.s_rgb.tobytes())
    if isinstance(model.codec, Module):
        for name, array in sorted(model.codec.state_dict().items()):
            digest.update(name.encode("utf-8"))
            digest.update(array.tobytes())
    return digest.hexdigest()


def fit_codec(model: NormalPredictor, sources: Sequence[WeightedSource], config: RunConfig) -> Optional[float]:
    """Fit and gate a trainable codec on the training maps; no-op for the lossless codec."""
    codec = model.codec
    if not isinstance(codec, ConvAutoencoderCodec):
        return None
    maps: List[np.ndarray] = []
    for source in sources:
        for sample in source.items:
            maps.extend([sample.rgb, sample.normal])
    codec.fit(maps, steps=config.model.codec_fit_steps, seed=config.seed)
    value = codec.verify(maps, min_psnr=config.model.codec_min_psnr)
    logger.info("codec passed the %.1f dB gate at %.2f dB", config.model.codec_min_psnr, value)
    return value


def evaluate_samples(model: NormalPredictor, samples: Sequence[SceneSample], mask_kind: str, thresholds) -> Optional[MetricsReport]:
    pooled = []
    for sample in samples:
        mask = sample.mask(mask_kind)
        if not mask.any():
            continue
        pred = model.predict_normal(sample.rgb)
        pooled.append(angular_error_map(pred, sample.normal, mask)[mask])
    if not pooled:
        return None
    return aggregate_errors(np.concatenate(pooled), thresholds)


# ----------------------------------------------------------------------
# loop
# ----------------------------------------------------------------------
def _write_line(handle, record: Dict) -> None:
    handle.write(json.dumps(record) + "\n")
    handle.flush()


def train(
    config: RunConfig,
    out_dir: Optional[PathLike] = None,
    model: Optional[NormalPredictor] = None,
    sources: Optional[Sequence[WeightedSource]] = None,
    eval_samples: Optional[Sequence[SceneSample]] = None,
    progress: bool = False,
) -> TrainResult:
    """
    Optimize the predictor on the configured sources.

    Every step runs both task branches, logs the loss terms as one JSON line
    and checks the weighted-sum identity. The held-out split is scored on the
    eval cadence, checkpoints are written on the checkpoint cadence and the
    final weights go to `model.tnrm`. A non-finite loss aborts with the step.
    """
    out = Path(out_dir or config.out)
    out.mkdir(parents=True, exist_ok=True)
    train_cfg = config.train
    sources = list(sources) if sources is not None else build_sources(config)
    if eval_samples is None:
        eval_samples = load_eval_samples(config) if train_cfg.eval_every else []
    model = model or NormalPredictor(config.model)

    codec_psnr = fit_codec(model, sources, config)
    weights = loss_weights_from(train_cfg)
    params = model.trainable_parameters(freeze_predictor=train_cfg.freeze_predictor)
    optimizer = AdamW(
        params,
        lr=train_cfg.lr,
        betas=tuple(train_cfg.betas),
        eps=train_cfg.eps,
        weight_decay=train_cfg.weight_decay,
        grad_norm_warn=train_cfg.grad_norm_warn,
    )
    frozen_before = frozen_fingerprint(model)
    logger.info(
        "training %d params for %d steps (batch %d, loss mode %s, %d sources)",
        sum(p.size for p in params), train_cfg.steps, train_cfg.batch_size, train_cfg.loss_mode, len(sources),
    )

    metrics_path = out / METRICS_LOG
    eval_path = out / EVAL_LOG if eval_samples else None
    last_loss: Optional[LossReport] = None
    last_eval: Optional[MetricsReport] = None

    with open(metrics_path, "w", encoding="utf-8") as metrics_log:
        eval_log = open(eval_path, "w", encoding="utf-8") if eval_path else None
        try:
            stream = batch_stream(sources, config, train_cfg.steps)
            for step in tqdm(range(1, train_cfg.steps + 1), desc="train", disable=not progress):
                batch = next(stream)
                started = time.perf_counter()
                optimizer.zero_grad()
                try:
                    with Tape():
                        loss, report = total_loss(batch, model, weights, train_cfg.loss_mode, train_cfg.edge_norm)
                        if not np.isfinite(report.total):
                            raise TrainingDivergedError(step, f"non-finite loss {report.total} at step {step}")
                        backward(loss)
                except NonFiniteError as exc:
                    raise TrainingDivergedError(step, f"non-finite value at step {step}: {exc}") from exc

                gap = report.identity_gap(weights)
                if gap > IDENTITY_TOLERANCE:
                    raise RuntimeError(f"loss terms do not sum to the total at step {step} (gap {gap:.3e})")
                optimizer.step()
                last_loss = report

                record = {"step": step, **report.model_dump()}
                record["grad_norm"] = optimizer.last_grad_norm
                record["skipped"] = optimizer.skipped_steps
                record["wall_ms"] = None if config.deterministic else round((time.perf_counter() - started) * 1000.0, 3)
                _write_line(metrics_log, record)

                if eval_log and train_cfg.eval_every and step % train_cfg.eval_every == 0:
                    last_eval = evaluate_samples(model, eval_samples, config.eval.mask_kind, config.eval.thresholds)
                    if last_eval is not None:
                        _write_line(eval_log, {"step": step, **last_eval.model_dump()})
                        logger.info("step %d: held-out %.2f° over %d pixels", step, last_eval.mean_deg, last_eval.n_pixels)

                if train_cfg.checkpoint_every and step % train_cfg.checkpoint_every == 0:
                    model.save(out / f"checkpoint_{step:06d}.tnrm")
        finally:
            if eval_log:
                eval_log.close()

    checkpoint = model.save(out / FINAL_CHECKPOINT)
    if frozen_fingerprint(model) != frozen_before:
        raise RuntimeError("frozen components changed during training")
    if optimizer.skipped_steps:
        logger.warning("%d optimizer steps were skipped on non-finite gradients", optimizer.skipped_steps)
    logger.info("checkpoint written to %s", checkpoint)

    return TrainResult(
        out_dir=str(out),
        steps=train_cfg.steps,
        checkpoint=str(checkpoint),
        metrics_log=str(metrics_path),
        eval_log=str(eval_path) if eval_path else None,
        last_loss=last_loss,
        last_eval=last_eval,
        skipped_steps=optimizer.skipped_steps,
        codec_psnr=codec_psnr,
    )
