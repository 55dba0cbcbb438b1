# main.py

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from config import APP_NAME, APP_VERSION, CHECKPOINT_FORMAT_VERSION, DATASET_LAYOUT_VERSION, LOG_LEVEL
from settings import ConfigError, ModelConfig, RunConfig, load_run_config, write_resolved_config

logger = logging.getLogger(APP_NAME)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


class CliParser(argparse.ArgumentParser):
    """Usage errors print the usage text and exit with the validation code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def version_text() -> str:
    return (
        f"{APP_NAME} {APP_VERSION} "
        f"(checkpoint format v{CHECKPOINT_FORMAT_VERSION}, dataset layout v{DATASET_LAYOUT_VERSION})"
    )


# --------------------------------------------------
# argument parsing
# --------------------------------------------------
def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="global seed (also seeds the model)")
    common.add_argument("--deterministic", action="store_true", default=None,
                        help="single-worker paths, no wall-clock fields, byte-identical outputs")
    common.add_argument("--workers", type=int, default=None, help="worker threads for rendering, prefetch and scoring")
    common.add_argument("--config", default=None, help="flat dotted-key JSON config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key, e.g. --set train.lr=1e-3")
    common.add_argument("--out", default=None, help="output directory")

    parser = CliParser(prog="main.py", description="Desk-scale transparent-object surface normal estimation.")
    parser.add_argument("--version", action="version", version=version_text())
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    gen = sub.add_parser("gen", parents=[common], help="render a procedural dataset")
    gen.add_argument("--count", type=int, default=None)
    gen.add_argument("--train-frac", type=float, default=None)
    gen.add_argument("--manifest", default=None, help="re-render the samples an existing manifest lists")

    train = sub.add_parser("train", parents=[common], help="train the predictor")
    train.add_argument("--data", default=None, help="dataset directory (registered as source 'scenegen')")
    train.add_argument("--steps", type=int, default=None)

    infer = sub.add_parser("infer", parents=[common], help="predict the normal map of one image")
    infer.add_argument("image")
    infer.add_argument("-o", "--output", required=True, help="normal map PNG to write")
    infer.add_argument("--checkpoint", default=None)

    evaluate = sub.add_parser("eval", parents=[common], help="score predictions against a dataset")
    evaluate.add_argument("dataset")
    source = evaluate.add_mutually_exclusive_group(required=True)
    source.add_argument("--predictions", default=None, help="directory of <sample_id>.png normal maps")
    source.add_argument("--checkpoint", default=None, help="predict with this checkpoint first")
    evaluate.add_argument("--split", default=None)
    evaluate.add_argument("--mask-kind", choices=["transparent", "fg"], default=None)
    evaluate.add_argument("--pdf", action="store_true", help="also write evaluation.pdf")

    rank = sub.add_parser("rank", parents=[common], help="average-rank a score table")
    rank.add_argument("table")
    rank.add_argument("--tie-policy", choices=["fractional", "min"], default=None)
    rank.add_argument("--pdf", action="store_true", help="also write a PDF ranking report")

    wavelet = sub.add_parser("wavelet", parents=[common], help="dump one-level Haar bands of an image")
    wavelet.add_argument("image")
    wavelet.add_argument("--normal", action="store_true", help="read the image as a normal map and dump its edge mask too")

    gradcheck = sub.add_parser("gradcheck", parents=[common], help="finite-difference check of every differentiable op")
    gradcheck.add_argument("--instances", type=int, default=10)
    gradcheck.add_argument("--tol", type=float, default=1e-4)
    gradcheck.add_argument("--ops-only", action="store_true", help="skip the composed-loss check")

    bench = sub.add_parser("bench", parents=[common], help="local latency and throughput report")
    bench.add_argument("--runs", type=int, default=5)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides: List[str] = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"model.seed={args.seed}")
    command_flags = {
        "count": "data.count",
        "train_frac": "data.train_frac",
        "steps": "train.steps",
        "mask_kind": "eval.mask_kind",
        "tie_policy": "eval.tie_policy",
    }
    for attr, key in command_flags.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append(f"{key}={json.dumps(value)}")
    if getattr(args, "data", None):
        overrides.append(f"data.sources.scenegen={args.data}")
    return load_run_config(
        args.config,
        overrides,
        seed=args.seed,
        deterministic=args.deterministic,
        workers=args.workers,
        out=args.out,
    )


@contextmanager
def checking_inputs():
    """Any ValueError raised inside is a rejected input and becomes a ConfigError."""
    try:
        yield
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def resolve_checkpoint(checkpoint: Optional[str], config: RunConfig, explicit_config: bool) -> Tuple[Optional[Path], ModelConfig]:
    """Checkpoint path and the model section to build it with; a sibling config.json wins unless --config was given."""
    if checkpoint is None:
        return None, config.model
    checkpoint = Path(checkpoint)
    if not checkpoint.exists():
        raise FileNotFoundError(f"checkpoint not found: {checkpoint}")
    sibling = checkpoint.parent / "config.json"
    if sibling.exists() and not explicit_config:
        return checkpoint, load_run_config(sibling).model
    return checkpoint, config.model


def load_predictor(model, checkpoint: Optional[Path]):
    if checkpoint is None:
        logger.warning("no checkpoint given; predicting with untrained weights")
        return model
    return model.load(checkpoint)


# --------------------------------------------------
# subcommands
# --------------------------------------------------
def cmd_gen(args, config: RunConfig) -> int:
    from scenegen.dataset import build_manifest, check_manifest, generate_from_manifest

    out = Path(config.out)
    data = config.data
    with checking_inputs():
        if args.manifest:
            manifest = check_manifest(args.manifest)
        else:
            manifest = build_manifest(
                count=data.count,
                train_frac=data.train_frac,
                base_seed=data.base_seed,
                image_size=data.image_size,
                max_objects=data.max_objects,
                transparent_prob=data.transparent_prob,
                ground_plane_prob=data.ground_plane_prob,
            )
    manifest = generate_from_manifest(manifest, out, workers=config.effective_workers)
    write_resolved_config(config, out)
    splits = manifest["splits"]
    print(f"✅ {len(manifest['samples'])} samples rendered into {out} (train {splits['train']}, test {splits['test']})")
    return EXIT_OK


def cmd_train(args, config: RunConfig) -> int:
    from training.trainer import build_sources, load_eval_samples, train

    out = Path(config.out)
    with checking_inputs():
        sources = build_sources(config)
        eval_samples = load_eval_samples(config) if config.train.eval_every else []
    write_resolved_config(config, out)
    result = train(config, out_dir=out, sources=sources, eval_samples=eval_samples, progress=not config.deterministic)
    print(f"✅ {result.steps} steps done, checkpoint saved to {result.checkpoint}")
    if result.last_loss is not None:
        print(f"   last loss {result.last_loss.total:.6f}")
    if result.last_eval is not None:
        print(f"   held-out mean angular error {result.last_eval.mean_deg:.2f}°")
    if result.skipped_steps:
        print(f"⚠️ {result.skipped_steps} optimizer steps skipped")
    return EXIT_OK


def cmd_infer(args, config: RunConfig) -> int:
    from ingestion.loader import read_image, write_normal_map
    from predictor.pipeline import NormalPredictor

    with checking_inputs():
        image = read_image(args.image)
        checkpoint, model_config = resolve_checkpoint(args.checkpoint, config, explicit_config=args.config is not None)
        model = NormalPredictor(model_config)
        model.check_image(image)
    if args.out:
        write_resolved_config(config, config.out)
    normals = load_predictor(model, checkpoint).predict_normal(image)
    path = write_normal_map(args.output, normals)
    print(f"✅ normal map written to {path}")
    return EXIT_OK


def write_predictions(model, dataset: str, split: Optional[str], out_dir: Path) -> Path:
    from ingestion.loader import list_samples, load_sample, write_normal_map

    for sample_dir in list_samples(dataset, split):
        sample = load_sample(sample_dir)
        write_normal_map(out_dir / f"{sample_dir.name}.png", model.predict_normal(sample.rgb))
    return out_dir


def write_error_maps(report, dataset: str, split: Optional[str], predictions: Path, out_dir: Path, config: RunConfig) -> int:
    from evaluation.error_maps import save_error_map
    from evaluation.harness import prediction_path
    from evaluation.metrics import angular_error_map
    from ingestion.loader import load_sample, read_normal_map, split_dir

    root = split_dir(dataset, split)
    for entry in report.per_sample:
        sample = load_sample(root / entry.sample_id)
        mask = sample.mask(report.mask_kind)
        errors = angular_error_map(read_normal_map(prediction_path(predictions, entry.sample_id)), sample.normal, mask)
        save_error_map(out_dir / f"{entry.sample_id}.png", errors, mask, config.eval.max_degrees)
    return len(report.per_sample)


def cmd_eval(args, config: RunConfig) -> int:
    from evaluation.harness import check_dataset, evaluate_dataset, write_report_json
    from predictor.pipeline import NormalPredictor

    out = Path(config.out)
    with checking_inputs():
        if args.checkpoint:
            check_dataset(args.dataset, args.split)
            checkpoint, model_config = resolve_checkpoint(args.checkpoint, config, explicit_config=args.config is not None)
            model = NormalPredictor(model_config)
        else:
            check_dataset(args.dataset, args.split, args.predictions)
    write_resolved_config(config, out)
    if args.checkpoint:
        predictions = write_predictions(load_predictor(model, checkpoint), args.dataset, args.split, out / "predictions")
        print(f"✅ predictions written to {predictions}")
    else:
        predictions = Path(args.predictions)

    report = evaluate_dataset(
        args.dataset,
        predictions,
        split=args.split,
        mask_kind=config.eval.mask_kind,
        workers=config.effective_workers,
        thresholds=config.eval.thresholds,
    )
    report_path = write_report_json(out / "report.json", report)
    n_maps = write_error_maps(report, args.dataset, args.split, predictions, out / "error_maps", config)

    print(f"\n📊 {report.n_samples} samples, {report.n_pixels} pixels ({report.mask_kind} mask)")
    print(f"   mean angular error {report.mean_deg:.3f}°")
    for key, value in report.acc.items():
        print(f"   < {key}°: {value:.2f}%")
    if report.skipped:
        print(f"⚠️ {len(report.skipped)} samples skipped (empty mask)")
    print(f"✅ report saved to {report_path}, {n_maps} error maps in {out / 'error_maps'}")

    if args.pdf:
        from utils.pdf_writer import write_evaluation_pdf

        pdf_path = write_evaluation_pdf(out / "evaluation.pdf", report, invariant=int(config.deterministic))
        print(f"✅ evaluation PDF saved to {pdf_path}")
    return EXIT_OK


def cmd_rank(args, config: RunConfig) -> int:
    from evaluation.ranking import generate_rank_report, read_rank_csv, write_ranked_csv

    out = Path(config.out)
    policy = config.eval.tie_policy
    with checking_inputs():
        table = read_rank_csv(args.table)
    stem = Path(args.table).stem
    print(generate_rank_report(table, policy))

    write_resolved_config(config, out)
    ranked = write_ranked_csv(out / f"{stem}_ranked.csv", table, policy)
    print(f"✅ ranked table saved to {ranked}")
    if args.pdf:
        from utils.ranking_pdf_writer import write_ranking_pdf

        pdf_path = write_ranking_pdf(
            out / f"{stem}_ranking.pdf", table, policy, source_name=Path(args.table).name,
            invariant=int(config.deterministic),
        )
        print(f"✅ ranking PDF saved to {pdf_path}")
    return EXIT_OK


def band_image(band: np.ndarray) -> np.ndarray:
    """c×h×w band → 8-bit h×w×3, min-max normalized over the whole band."""
    low, high = float(band.min()), float(band.max())
    scaled = (band - low) / (high - low) if high > low else np.zeros_like(band)
    if scaled.shape[0] == 1:
        scaled = np.repeat(scaled, 3, axis=0)
    return np.round(np.transpose(scaled[:3], (1, 2, 0)) * 255.0).astype(np.uint8)


def cmd_wavelet(args, config: RunConfig) -> int:
    from ingestion.loader import read_image, read_normal_map, write_png
    from wavelet.edge import edge_mask
    from wavelet.haar import haar_dwt2

    with checking_inputs():
        image = read_normal_map(args.image) if args.normal else read_image(args.image)
        bands = haar_dwt2(image)
    out = Path(config.out)
    write_resolved_config(config, out)
    stem = Path(args.image).stem
    for name in ("LL", "LH", "HL", "HH"):
        path = write_png(out / f"{stem}_{name}.png", band_image(bands.band(name)))
        print(f"✅ {name} band saved to {path}")
    if args.normal:
        mask = edge_mask(image)
        path = write_png(out / f"{stem}_edge_mask.png", np.round(mask * 255.0).astype(np.uint8))
        print(f"✅ edge mask saved to {path}")
    return EXIT_OK


def cmd_gradcheck(args, config: RunConfig) -> int:
    from diagnostics.gradcheck_suite import run_suite

    if args.instances < 1 or args.tol <= 0:
        raise ConfigError(f"--instances must be at least 1 and --tol positive, got {args.instances} and {args.tol}")
    report = run_suite(instances=args.instances, seed=config.seed, tol=args.tol, include_model=not args.ops_only)
    out = Path(config.out)
    write_resolved_config(config, out)
    (out / "gradcheck.json").write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    if report.passed:
        print(f"✅ {len(report.results)} gradient checks passed at tolerance {report.tolerance:g}")
        return EXIT_OK
    for failure in report.failures:
        print(f"❌ {failure.name}: relative error {failure.max_rel_error:.3e}")
    return EXIT_RUNTIME


def cmd_bench(args, config: RunConfig) -> int:
    from diagnostics.bench import run_bench

    if args.runs < 1:
        raise ConfigError(f"--runs must be at least 1, got {args.runs}")
    report = run_bench(config, runs=args.runs)
    out = Path(config.out)
    write_resolved_config(config, out)
    (out / "bench.json").write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    print(f"✅ {report.parameters} parameters, {report.forward_calls_per_inference} network evaluation(s) per image")
    if report.latency_ms_mean is not None:
        print(f"   {report.latency_ms_mean:.1f} ms per {report.image_size}×{report.image_size} image "
              f"({report.images_per_s:.2f} images/s), {report.train_step_ms:.1f} ms per training step")
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "infer": cmd_infer,
    "eval": cmd_eval,
    "rank": cmd_rank,
    "wavelet": cmd_wavelet,
    "gradcheck": cmd_gradcheck,
    "bench": cmd_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        with checking_inputs():
            config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        logger.exception("%s failed", args.command)
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
