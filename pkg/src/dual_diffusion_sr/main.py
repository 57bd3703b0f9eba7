"""Command-line surface: gen-data, train, infer and eval"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .degradation.dataset import MANIFEST_NAME, generate_dataset
from .errors import DataError, DDSRError, NumericalFailure, UsageError
from .graph import run_training
from .kernels.kernelgen import kernel_to_png
from .models.kernel_models import KernelParams
from .networks.bundle import CHECKPOINT_NAMES, ModelBundle
from .pipeline.common import configure_torch
from .pipeline.evaluation import KERNEL_DIR, RUN_INFO_NAME, evaluate
from .pipeline.inference import sample_seed, super_resolve
from .utils.config_loader import read_run_config
from .utils.file_ops import atomic_write_json
from .utils.image_io import list_images, read_png, to_signed, write_gray_png, write_png
from .utils.logging_setup import banner, configure_logging, fail, step, success
from .utils.report_builder import write_report
from .utils.tensor_container import write_container

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3
EXIT_INTERNAL = 4
EXIT_INTERRUPTED = 130


class CliParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting, so main() owns the exit code."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _parse_kernel_params(values: Optional[List[float]]) -> Optional[KernelParams]:
    if values is None:
        return None
    lambda1, lambda2, theta = values
    try:
        return KernelParams(lambda1=lambda1, lambda2=lambda2, theta=theta)
    except ValueError as e:
        raise UsageError(f"invalid --kernel-params {values}: {e}") from e


def cmd_gen_data(args) -> int:
    banner("Generating synthetic dataset")
    manifest = generate_dataset(
        args.corpus,
        args.out,
        s=args.scale,
        patch_size=args.patch,
        count=args.count,
        seed=args.seed,
        kernel_size=args.kernel_size,
        fixed_params=_parse_kernel_params(args.kernel_params),
        workers=args.workers,
    )
    if manifest.skipped:
        logger.warning(f"Skipped {manifest.skipped} corpus files: {', '.join(manifest.skipped_files)}")
    success(f"{len(manifest)} triplets -> {Path(args.out) / MANIFEST_NAME}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = read_run_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"train": config.train.model_copy(update={"seed": args.seed})})
    prerequisites = {phase: path for phase, path in (("encoder", args.encoder), ("kernel", args.kernel)) if path}

    banner(f"Training phase: {args.phase}")
    logger.info(f"Data: {args.data}")
    logger.info(f"Config hash: {config.config_hash()[:12]}")

    final_state = run_training(args.data, config, args.out, phases=args.phase, prerequisites=prerequisites)
    for phase, result in final_state["results"].items():
        how = "plateau" if result.stopped_early else "budget"
        success(f"{phase}: {result.steps} steps ({how}), final loss {result.losses[-1]:.4g}")
    for phase, path in final_state["checkpoints"].items():
        logger.info(f"  {phase} -> {path}")
    return EXIT_OK


def cmd_infer(args) -> int:
    bundle = ModelBundle.load(args.bundle)
    configure_torch(bundle.config)
    bundle.eval().to(bundle.config.train.device)

    inputs = list_images(args.lr)
    if not inputs:
        raise DataError(f"no images found in {args.lr}")
    single = Path(args.lr).is_file()
    out_dir = Path(args.out)

    banner(f"Super-resolving {len(inputs)} image(s), x{bundle.config.dataset.scale}")
    written = 0
    for index, path in enumerate(inputs):
        try:
            lr = read_png(path)
        except DataError as e:
            if single:
                raise
            logger.warning(f"Skipping {path.name}: {e}")
            continue

        step(index + 1, path.name)
        result = super_resolve(to_signed(lr), bundle, rng=sample_seed(args.seed, index), progress=args.verbose > 0)
        stem = path.stem
        write_png(out_dir / f"{stem}.png", result.sr, value_range="signed")
        kernel = result.prediction.kernel
        write_gray_png(out_dir / KERNEL_DIR / f"{stem}.png", kernel_to_png(kernel))
        write_container(
            out_dir / KERNEL_DIR / f"{stem}.tns",
            {"kernel": kernel.values, "v": result.prediction.v.numpy()},
            meta={"source": path.name, "seed": args.seed, "index": index},
        )
        written += 1

    atomic_write_json(
        out_dir / RUN_INFO_NAME,
        {"seed": args.seed, "train_seed": bundle.config.train.seed, "config_hash": bundle.config.config_hash()},
    )
    success(f"Wrote {written} SR image(s) to {out_dir}")
    return EXIT_OK


def cmd_eval(args) -> int:
    banner("Evaluating predictions")
    report = evaluate(args.pred, args.truth)
    json_path, table_path = write_report(report, args.report)
    logger.info(
        f"Mean PSNR over {len(report.rows)} samples: SR {report.psnr_sr.mean:.3f} dB, "
        f"bicubic {report.psnr_bicubic.mean:.3f} dB"
    )
    success(f"Report -> {json_path} and {table_path}")
    if report.missing:
        raise DataError(f"{len(report.missing)} prediction(s) missing: {', '.join(report.missing)}")
    return EXIT_OK


def build_parser() -> CliParser:
    parser = CliParser(
        prog="ddsr",
        description="Blind super-resolution with a kernel diffusion chain and a residual diffusion chain",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Synthesize 100 LR/HR/kernel triplets
  ddsr gen-data --corpus images/ --out data/train --count 100 --seed 0

  # Train all three phases
  ddsr train --phase all --data data/train/manifest.json --config data/default_config.yaml --out runs/a

  # Train only the reconstructor on top of earlier checkpoints
  ddsr train --phase recon --data data/train/manifest.json --out runs/a \\
      --encoder runs/a/encoder.ckpt --kernel runs/a/kernel.ckpt

  # Super-resolve and score
  ddsr infer --lr data/test/lr --bundle runs/a --out preds --seed 1
  ddsr eval --pred preds --truth data/test/manifest.json --report preds/report.json
        """,
    )
    common = CliParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="count", default=0, help="More output (-vv for debug)")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    gen = sub.add_parser("gen-data", parents=[common], help="Synthesize a blurred and decimated training set")
    gen.add_argument("--corpus", required=True, help="Directory of HR images")
    gen.add_argument("--out", required=True, help="Output directory (hr/, lr/, ker/, manifest.json)")
    gen.add_argument("--count", type=int, default=100, help="Number of patches (default: 100)")
    gen.add_argument("--patch", type=int, default=64, help="HR patch side (default: 64)")
    gen.add_argument("--scale", type=int, default=4, help="Downsampling factor (default: 4)")
    gen.add_argument("--seed", type=int, default=0, help="Dataset seed (default: 0)")
    gen.add_argument("--kernel-size", type=int, default=24, help="Kernel side (default: 24)")
    gen.add_argument(
        "--kernel-params",
        type=float,
        nargs=3,
        metavar=("LAMBDA1", "LAMBDA2", "THETA"),
        help="Use one fixed kernel for every patch instead of sampling",
    )
    gen.add_argument("--workers", type=int, default=1, help="Patch generation threads (default: 1)")
    gen.set_defaults(handler=cmd_gen_data)

    train = sub.add_parser("train", parents=[common], help="Train one phase or all three")
    train.add_argument("--phase", default="all", choices=["encoder", "kernel", "recon", "all"])
    train.add_argument("--data", required=True, help="Dataset manifest.json")
    train.add_argument("--config", default=None, help="Run config YAML (default: built-in defaults)")
    train.add_argument("--out", required=True, help=f"Output directory for {', '.join(CHECKPOINT_NAMES.values())}")
    train.add_argument("--encoder", default=None, help="Encoder checkpoint, required unless training it")
    train.add_argument("--kernel", default=None, help="Kernel predictor checkpoint, required for --phase recon")
    train.add_argument("--seed", type=int, default=None, help="Override train.seed from the config")
    train.set_defaults(handler=cmd_train)

    infer = sub.add_parser("infer", parents=[common], help="Super-resolve an LR image or a directory of them")
    infer.add_argument("--lr", required=True, help="LR image file or directory")
    infer.add_argument("--bundle", required=True, help="Directory holding the three checkpoints")
    infer.add_argument("--out", required=True, help="Output directory")
    infer.add_argument("--seed", type=int, default=0, help="Sampling seed (default: 0)")
    infer.set_defaults(handler=cmd_infer)

    ev = sub.add_parser("eval", parents=[common], help="Score predictions against a dataset manifest")
    ev.add_argument("--pred", required=True, help="Directory of <stem>.png predictions")
    ev.add_argument("--truth", required=True, help="Dataset manifest.json")
    ev.add_argument("--report", required=True, help="Report path (.json, a .txt table is written next to it)")
    ev.set_defaults(handler=cmd_eval)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        configure_logging(0)
        parser.print_usage(sys.stderr)
        fail(str(e))
        return EXIT_USAGE

    configure_logging(-1 if args.quiet else args.verbose)
    try:
        return args.handler(args)
    except UsageError as e:
        fail(f"Usage error: {e}")
        return EXIT_USAGE
    except DataError as e:
        fail(f"Data error: {e}")
        return EXIT_DATA
    except NumericalFailure as e:
        fail(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except OSError as e:
        fail(f"I/O error: {e}")
        return EXIT_DATA
    except DDSRError as e:
        fail(f"Error: {e}")
        return EXIT_DATA
    except KeyboardInterrupt:
        fail("Interrupted by user")
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.debug("Unhandled exception", exc_info=True)
        fail(f"Unexpected error: {type(e).__name__}: {e}")
        return EXIT_INTERNAL


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
