"""
Sweep Service - the SNR, pilot-count, depth and SNR-mismatch experiments.

Each sweep trains one model per condition, evaluates every model over the
test grid and gathers all cells into one MseReport. Conditions are
independent and may run in a process pool; results do not depend on the
worker count. Completed cells are flushed to disk before an error is
re-raised.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

from srce.config import ExperimentConfig
from srce.nn.checkpoint import Checkpoint
from srce.services.evaluation_service import BASELINES, MseReport, emit_report, evaluate
from srce.services.training_service import TrainingService
from srce.utils.exceptions import ConfigurationException, SrceException
from srce.utils.logger import get_logger

SWEEP_KINDS = ("snr", "pilots", "layers", "mismatch")


@dataclass(frozen=True)
class Condition:
    """
    One model to train.

    Attributes:
        key: Unique identifier within a sweep
        estimator: Name of the model's report rows
        config: Configuration the model is trained and tested with
    """

    key: str
    estimator: str
    config: ExperimentConfig


def mismatch_name(estimator: str, train_snr_db: float) -> str:
    """Report name of a model trained at one SNR and tested across the grid."""
    snr = "inf" if math.isinf(train_snr_db) else f"{train_snr_db:g}"
    return f"{estimator}[train={snr}dB]"


def _train_condition(condition: Condition, output_dir: Optional[str]) -> Checkpoint:
    return TrainingService(condition.config, output_dir).train().best


class SweepService:
    """
    Orchestrates dataset generation, training and evaluation for a sweep.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        output_dir: Optional[Union[str, Path]] = None,
        workers: int = 1,
        keep_going: bool = False,
    ):
        """
        Initialize sweep service.

        Args:
            config: Base experiment configuration
            output_dir: Root for datasets, checkpoints and reports
            workers: Conditions trained in parallel
            keep_going: Log failed conditions and continue instead of aborting
        """
        if workers < 1:
            raise ConfigurationException(f"workers must be positive, got {workers}")
        self.config = config
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.workers = workers
        self.keep_going = keep_going
        self.logger = logging.getLogger(f"{__name__}.SweepService")
        self.experiment_logger = get_logger()

    def report_path(self, kind: str) -> Optional[Path]:
        if self.output_dir is None:
            return None
        return self.output_dir / "reports" / f"sweep_{kind}.csv"

    def _flush(self, report: MseReport, kind: str) -> None:
        path = self.report_path(kind)
        if path is not None:
            emit_report(report, path, db_columns=True)
            self.logger.info(f"Report with {len(report)} cells written to {path}")

    def _train_all(self, conditions: Sequence[Condition]) -> Dict[str, Optional[Checkpoint]]:
        """Train every condition; failed ones map to None when keep_going is set."""
        output_dir = str(self.output_dir) if self.output_dir is not None else None
        results: Dict[str, Optional[Checkpoint]] = {}

        if self.workers > 1 and len(conditions) > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                futures = [(c, pool.submit(_train_condition, c, output_dir)) for c in conditions]
                for condition, future in futures:
                    results[condition.key] = self._collect(condition, future.result)
        else:
            for condition in conditions:
                results[condition.key] = self._collect(
                    condition, lambda c=condition: _train_condition(c, output_dir)
                )
        return results

    def _collect(self, condition: Condition, produce) -> Optional[Checkpoint]:
        self.experiment_logger.log_condition(condition.key, "training")
        try:
            return produce()
        except SrceException as e:
            if not self.keep_going:
                raise
            self.experiment_logger.log_error(
                f"Condition {condition.key} failed: {e.message}", e, condition=condition.key
            )
            return None

    def _run(
        self,
        kind: str,
        conditions: Sequence[Condition],
        evaluations: Sequence[tuple],
        report: MseReport,
    ) -> MseReport:
        """
        Train `conditions`, then run each (test config, condition keys, baselines) evaluation.
        """
        by_key = {c.key: c for c in conditions}
        try:
            checkpoints = self._train_all(conditions)
            for config, keys, baselines in evaluations:
                estimators = [by_key[key].estimator for key in keys]
                report.expect(
                    (name, float(snr), config.pilots, config.modulation.value)
                    for name in list(baselines) + estimators for snr in config.test_snr_grid
                )
                trained = {
                    by_key[key].estimator: checkpoints[key]
                    for key in keys if checkpoints.get(key) is not None
                }
                report.merge(evaluate(config, trained, baselines=baselines))
                self._flush(report, kind)
        except Exception:
            self._flush(report, kind)
            raise

        missing = report.missing()
        if missing:
            self.experiment_logger.warning(f"Sweep {kind} finished with {len(missing)} missing cells")
        self._flush(report, kind)
        return report

    def _base_report(self, kind: str, **extra) -> MseReport:
        return MseReport(metadata={
            "sweep": kind,
            "modulation": self.config.modulation.value,
            "seeds": self.config.seeds.model_dump(),
            "test_frames": self.config.dataset.test,
            **extra,
        })

    @staticmethod
    def _condition(config: ExperimentConfig, estimator: Optional[str] = None, key: Optional[str] = None) -> Condition:
        estimator = estimator or config.architecture_spec.estimator_name
        return Condition(key or estimator, estimator, config)

    def sweep_snr(self) -> MseReport:
        """Configured FSRCNN-x plus an SRCNN comparator against all baselines."""
        config = self.config
        conditions = [
            self._condition(config.updated({"architecture.kind": "FSRCNN"})),
            self._condition(config.updated({"architecture.kind": "SRCNN"})),
        ]
        evaluations = [(config, [c.key for c in conditions], BASELINES)]
        return self._run("snr", conditions, evaluations, self._base_report("snr"))

    def sweep_pilots(self, pilot_counts: Sequence[int]) -> MseReport:
        """FSRCNN-x and SRCNN per pilot count, each with its own baselines."""
        if not pilot_counts:
            raise ConfigurationException("Pilot list must not be empty")
        conditions, evaluations = [], []
        for pilots in pilot_counts:
            keys = []
            for kind in ("FSRCNN", "SRCNN"):
                config = self.config.updated({"pilots": int(pilots), "architecture.kind": kind})
                condition = self._condition(config, key=f"{config.architecture_spec.estimator_name}_p{pilots}")
                conditions.append(condition)
                keys.append(condition.key)
            evaluations.append((self.config.updated({"pilots": int(pilots)}), keys, BASELINES))
        report = self._base_report("pilots", pilot_counts=[int(p) for p in pilot_counts])
        return self._run("pilots", conditions, evaluations, report)

    def sweep_layers(self, mapping_layers: Sequence[int]) -> MseReport:
        """FSRCNN-x for each x, plus SRCNN, LS and LMMSE references."""
        if not mapping_layers:
            raise ConfigurationException("Layer list must not be empty")
        conditions = [
            self._condition(self.config.updated({
                "architecture.kind": "FSRCNN",
                "architecture.mapping_layers": int(x),
            }))
            for x in mapping_layers
        ]
        conditions.append(self._condition(self.config.updated({"architecture.kind": "SRCNN"})))
        evaluations = [(self.config, [c.key for c in conditions], ("LS", "LMMSE"))]
        report = self._base_report("layers", mapping_layers=[int(x) for x in mapping_layers])
        return self._run("layers", conditions, evaluations, report)

    def sweep_mismatch(self, train_snrs: Sequence[float]) -> MseReport:
        """One model per training SNR, each tested over the whole grid."""
        if not train_snrs:
            raise ConfigurationException("Training SNR list must not be empty")
        conditions = []
        for snr in train_snrs:
            config = self.config.updated({"train_snr_db": float(snr)})
            conditions.append(self._condition(config, mismatch_name(config.architecture_spec.estimator_name, snr)))
        evaluations = [(self.config, [c.key for c in conditions], ("LS", "LMMSE"))]
        report = self._base_report("mismatch", train_snrs=[float(s) for s in train_snrs])
        return self._run("mismatch", conditions, evaluations, report)

    def run(self, kind: str, values: Optional[Sequence] = None) -> MseReport:
        """Dispatch a sweep by name."""
        if kind == "snr":
            return self.sweep_snr()
        if kind == "pilots":
            return self.sweep_pilots(values or [8, 16])
        if kind == "layers":
            return self.sweep_layers(values or [2, 4, 6])
        if kind == "mismatch":
            return self.sweep_mismatch(values or [5.0, 10.0, 15.0, 20.0, 25.0])
        raise ConfigurationException(f"Unknown sweep: {kind}", details={"valid": list(SWEEP_KINDS)})


def sweep_snr(config: ExperimentConfig, **kwargs) -> MseReport:
    return SweepService(config, **kwargs).sweep_snr()


def sweep_pilots(config: ExperimentConfig, pilot_counts: Sequence[int], **kwargs) -> MseReport:
    return SweepService(config, **kwargs).sweep_pilots(pilot_counts)


def sweep_layers(config: ExperimentConfig, mapping_layers: Sequence[int], **kwargs) -> MseReport:
    return SweepService(config, **kwargs).sweep_layers(mapping_layers)


def sweep_mismatch(config: ExperimentConfig, train_snrs: Sequence[float], **kwargs) -> MseReport:
    return SweepService(config, **kwargs).sweep_mismatch(train_snrs)
