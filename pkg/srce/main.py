"""
Command-line entry point

    python -m srce.main generate | train | evaluate | sweep {snr|pilots|layers|mismatch} | report

Exit codes: 0 when every configured cell completed, 1 when a report is
incomplete, 2 on any toolkit error.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from srce.config import ExperimentConfig, Settings, get_settings, load_config
from srce.core.dataset import write_dataset
from srce.nn.checkpoint import load_checkpoint
from srce.services.dataset_service import dataset_path, generate_dataset
from srce.services.evaluation_service import BASELINES, emit_report, evaluate, load_report
from srce.services.sweep_service import SWEEP_KINDS, SweepService, mismatch_name
from srce.services.training_service import TrainingService
from srce.utils.exceptions import ConfigurationException, SrceException
from srce.utils.logger import configure_logger

EXIT_OK = 0
EXIT_INCOMPLETE = 1
EXIT_ERROR = 2


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment YAML (default: SRCE_CONFIG_PATH or config.yaml)")
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="Override one configuration value (repeatable)",
    )
    common.add_argument(
        "--paper-scale", "--full-scale", dest="full_scale", action="store_true",
        help="800 epochs, lr decay every 200",
    )
    common.add_argument("--output-dir", help="Output root (default: SRCE_OUTPUT_DIR or runs)")
    common.add_argument("--workers", type=int, help="Sweep conditions trained in parallel")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING, ERROR")
    common.add_argument("--json-logs", action="store_true", help="Emit JSON log records")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="srce",
        description="Super-resolution channel estimation experiments",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", parents=[common], help="Simulate and write datasets")
    generate.add_argument("--splits", nargs="+", default=["train", "val", "test"], choices=["train", "val", "test"])
    generate.add_argument("--replicate", type=int, default=0)

    commands.add_parser("train", parents=[common], help="Train the configured network")

    evaluate_cmd = commands.add_parser("evaluate", parents=[common], help="MSE of checkpoints and baselines")
    evaluate_cmd.add_argument("--checkpoint", action="append", default=[], metavar="PATH",
                              help="Checkpoint manifest or stem (repeatable)")
    evaluate_cmd.add_argument("--baselines", nargs="*", default=list(BASELINES), choices=list(BASELINES))
    evaluate_cmd.add_argument("--count", type=int, help="Test frames per SNR")
    evaluate_cmd.add_argument("--out", help="Report CSV path")
    evaluate_cmd.add_argument("--db", action="store_true", help="Add 10*log10(mse) column")

    sweep = commands.add_parser("sweep", parents=[common], help="Run an experiment sweep")
    sweep.add_argument("kind", choices=SWEEP_KINDS)
    sweep.add_argument("--values", nargs="+", type=float,
                       help="Pilot counts, mapping-layer counts or training SNRs")
    sweep.add_argument("--keep-going", action="store_true", help="Continue past failed conditions")

    report = commands.add_parser("report", parents=[common], help="Print a report as an estimator x SNR dB table")
    report.add_argument("input", help="Report CSV")
    return parser


def _configure(args: argparse.Namespace) -> tuple:
    updates = {}
    if args.output_dir:
        updates["output_dir"] = args.output_dir
    if args.workers:
        updates["workers"] = args.workers
    if args.log_level:
        updates["log_level"] = args.log_level
    if args.json_logs:
        updates["log_json"] = True
    try:
        settings = get_settings()
        if updates:
            settings = Settings(**{**settings.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigurationException(f"Invalid settings: {e.errors()[0]['msg']}", details={"updates": updates})

    logger = configure_logger(settings.log_level, settings.log_dir, settings.log_json)
    config = load_config(args.config or settings.config_path, args.overrides, args.full_scale)
    return settings, config, logger


def _cmd_generate(args, settings: Settings, config: ExperimentConfig, logger) -> int:
    sizes = {"train": config.dataset.train, "val": config.dataset.val, "test": config.dataset.test}
    for split in args.splits:
        dataset = generate_dataset(config, split, sizes[split], seed=args.replicate)
        path = write_dataset(dataset, dataset_path(settings.output_dir, config, split))
        logger.info(f"Wrote {split} dataset ({dataset.count} frames) to {path}")
    return EXIT_OK


def _cmd_train(args, settings: Settings, config: ExperimentConfig, logger) -> int:
    result = TrainingService(config, settings.output_dir).train()
    best = result.best.metadata
    logger.info(
        f"Trained {config.condition_name()}: best epoch {best['best_epoch']}, "
        f"val loss {best['best_val_loss']}"
    )
    for role, path in result.paths.items():
        logger.info(f"{role} checkpoint: {path}")
    return EXIT_OK


def _cmd_evaluate(args, settings: Settings, config: ExperimentConfig, logger) -> int:
    checkpoints = {}
    for path in args.checkpoint:
        checkpoint = load_checkpoint(path)
        name = checkpoint.metadata.get("estimator") or Path(path).stem
        if name in checkpoints and "train_snr_db" in checkpoint.metadata:
            name = mismatch_name(name, checkpoint.metadata["train_snr_db"])
        checkpoints[name] = checkpoint
    report = evaluate(config, checkpoints, baselines=args.baselines, count=args.count)
    out = Path(args.out) if args.out else Path(settings.output_dir) / "reports" / f"evaluate_{config.condition_name()}.csv"
    emit_report(report, out, db_columns=args.db)
    logger.info(f"Report written to {out}")
    return EXIT_OK if report.complete else EXIT_INCOMPLETE


def _cmd_sweep(args, settings: Settings, config: ExperimentConfig, logger) -> int:
    service = SweepService(config, settings.output_dir, workers=settings.workers, keep_going=args.keep_going)
    values = args.values
    if values is not None and args.kind in ("pilots", "layers"):
        values = [int(v) for v in values]
    report = service.run(args.kind, values)
    logger.info(f"Sweep {args.kind}: {len(report)} cells, report at {service.report_path(args.kind)}")
    return EXIT_OK if report.complete else EXIT_INCOMPLETE


def _cmd_report(args, settings: Settings, config: ExperimentConfig, logger) -> int:
    report = load_report(args.input)
    if len(report):
        print(report.pivot_db().to_string(float_format=lambda v: f"{v:8.2f}"))
    else:
        logger.info(f"{args.input} has no rows")
    missing = report.missing()
    if missing:
        logger.warning(f"{len(missing)} expected cells are missing")
        return EXIT_INCOMPLETE
    return EXIT_OK


COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logger = None
    try:
        settings, config, logger = _configure(args)
        return COMMANDS[args.command](args, settings, config, logger)
    except SrceException as e:
        if logger is None:
            logger = configure_logger()
        logger.log_error(f"{type(e).__name__}: {e.message}", details=e.details)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
