"""
Evaluation Service - MSE of the SR networks and the LS/LMMSE/MMSE baselines.

Test frames are regenerated per SNR from the test seed stream, so every
estimator and every SNR sees the same channels, bits and noise shape.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from sortedcontainers import SortedDict

from srce.config import ExperimentConfig
from srce.core.channel import ChannelMatrix
from srce.core.constellation import Constellation
from srce.core.estimators import (
    beta_constant,
    estimate_lmmse_full,
    estimate_ls_full,
    estimate_mmse_full,
)
from srce.core.sr_models import refine_batch
from srce.nn.checkpoint import Checkpoint
from srce.services.dataset_service import autocorrelation_for, simulate_frame
from srce.utils.exceptions import ConfigurationException, ReportException, StorageException
from srce.utils.logger import get_logger
from srce.utils.validators import validate_same_shape

REPORT_COLUMNS = ["estimator", "snr_db", "pilots", "modulation", "mse", "samples"]
BASELINES = ("LS", "LMMSE", "MMSE")

# Frames refined per network forward pass
_REFINE_CHUNK = 50

CellKey = Tuple[str, float, int, str]


@dataclass(frozen=True)
class ReportRow:
    """One evaluated cell of an MSE report."""

    estimator: str
    snr_db: float
    pilots: int
    modulation: str
    mse: float
    samples: int

    @property
    def key(self) -> CellKey:
        return (self.estimator, self.snr_db, self.pilots, self.modulation)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimator": self.estimator,
            "snr_db": self.snr_db,
            "pilots": self.pilots,
            "modulation": self.modulation,
            "mse": self.mse,
            "samples": self.samples,
        }


class MseReport:
    """
    MSE table keyed by (estimator, snr_db, pilots, modulation).

    Rows stay sorted by key; each cell can be filled exactly once.
    """

    def __init__(self, metadata: Optional[Dict[str, Any]] = None):
        self._rows: SortedDict = SortedDict()
        self.metadata: Dict[str, Any] = dict(metadata or {})
        self.expected: set = set()

    def __len__(self) -> int:
        return len(self._rows)

    def add(self, row: ReportRow) -> None:
        """
        Add one cell.

        Raises:
            ReportException: If the cell exists or the MSE is invalid
        """
        if not math.isfinite(row.mse) or row.mse < 0:
            raise ReportException(f"Invalid MSE {row.mse} for {row.estimator}", details=row.to_dict())
        if row.key in self._rows:
            raise ReportException(
                f"Duplicate report cell {row.key}",
                details={"cell": list(row.key)}
            )
        self._rows[row.key] = row

    def merge(self, other: "MseReport") -> None:
        for row in other.rows():
            self.add(row)
        self.expected |= other.expected

    def expect(self, cells: Iterable[CellKey]) -> None:
        """Declare cells the finished report must contain."""
        self.expected.update(cells)

    def missing(self) -> List[CellKey]:
        return sorted(self.expected - set(self._rows))

    @property
    def complete(self) -> bool:
        return not self.missing()

    def rows(self) -> List[ReportRow]:
        return list(self._rows.values())

    def get(self, estimator: str, snr_db: float, pilots: int, modulation: str) -> ReportRow:
        try:
            return self._rows[(estimator, float(snr_db), int(pilots), modulation)]
        except KeyError:
            raise ReportException(
                f"No cell for {estimator} @ {snr_db} dB",
                details={"estimator": estimator, "snr_db": snr_db}
            )

    def mse(self, estimator: str, snr_db: float, pilots: int = None, modulation: str = None) -> float:
        """MSE of a cell; pilots/modulation may be omitted when unambiguous."""
        matches = [
            row for row in self._rows.values()
            if row.estimator == estimator and row.snr_db == float(snr_db)
            and (pilots is None or row.pilots == pilots)
            and (modulation is None or row.modulation == modulation)
        ]
        if len(matches) != 1:
            raise ReportException(
                f"{len(matches)} cells match {estimator} @ {snr_db} dB",
                details={"estimator": estimator, "snr_db": snr_db}
            )
        return matches[0].mse

    def estimators(self) -> List[str]:
        return sorted({row.estimator for row in self._rows.values()})

    def to_frame(self, db_columns: bool = False) -> pd.DataFrame:
        frame = pd.DataFrame([row.to_dict() for row in self._rows.values()], columns=REPORT_COLUMNS)
        if db_columns:
            frame["mse_db"] = 10.0 * np.log10(frame["mse"].astype(float))
        return frame

    def pivot_db(self) -> pd.DataFrame:
        """Estimator x SNR table of 10*log10(MSE), one column block per pilots/modulation."""
        frame = self.to_frame(db_columns=True)
        return frame.pivot_table(
            index=["estimator", "pilots", "modulation"],
            columns="snr_db",
            values="mse_db",
            aggfunc="first",
        )


def frame_mse(estimate: Union[ChannelMatrix, np.ndarray], truth: Union[ChannelMatrix, np.ndarray]) -> float:
    """||H_hat - H||^2 / (N * M)."""
    est = estimate.data if isinstance(estimate, ChannelMatrix) else np.asarray(estimate)
    ref = truth.data if isinstance(truth, ChannelMatrix) else np.asarray(truth)
    validate_same_shape(est, ref, "estimate", "truth")
    return float(np.mean(np.abs(est - ref) ** 2))


class EvaluationService:
    """
    Scores trained networks and analytic baselines on simulated test frames.
    """

    def __init__(self, config: ExperimentConfig, replicate: int = 0):
        """
        Initialize evaluation service.

        Args:
            config: Experiment configuration (channel, pilots, modulation, test sizes)
            replicate: Seed replicate of the test stream
        """
        self.config = config
        self.replicate = replicate
        self.logger = logging.getLogger(f"{__name__}.EvaluationService")
        self.experiment_logger = get_logger()

    def _check_checkpoint(self, name: str, checkpoint: Checkpoint) -> None:
        meta = checkpoint.metadata
        expected = (self.config.channel.num_subcarriers, self.config.channel.symbols_per_frame)
        actual = (meta.get("num_subcarriers", expected[0]), meta.get("num_symbols", expected[1]))
        if tuple(actual) != expected:
            raise ConfigurationException(
                f"Checkpoint {name} was trained on {actual[0]}x{actual[1]} frames, test set is {expected[0]}x{expected[1]}",
                details={"estimator": name, "checkpoint": list(actual), "test": list(expected)}
            )
        if meta.get("pilots", self.config.pilots) != self.config.pilots:
            raise ConfigurationException(
                f"Checkpoint {name} was trained with {meta['pilots']} pilots, test set uses {self.config.pilots}",
                details={"estimator": name}
            )

    def evaluate(
        self,
        checkpoints: Optional[Dict[str, Checkpoint]] = None,
        baselines: Sequence[str] = BASELINES,
        snr_grid: Optional[Sequence[float]] = None,
        count: Optional[int] = None,
    ) -> MseReport:
        """
        MSE per estimator and SNR over the test frames.

        Args:
            checkpoints: Networks by report name
            baselines: Subset of LS, LMMSE, MMSE
            snr_grid: Test SNRs (defaults to config.test_snr_grid)
            count: Test frames per SNR (defaults to config.dataset.test)

        Raises:
            ConfigurationException: If a checkpoint does not fit the test frames
        """
        config = self.config
        checkpoints = dict(checkpoints or {})
        snr_grid = list(config.test_snr_grid if snr_grid is None else snr_grid)
        count = config.dataset.test if count is None else count
        unknown = set(baselines) - set(BASELINES)
        if unknown:
            raise ConfigurationException(f"Unknown baselines: {sorted(unknown)}", details={"valid": list(BASELINES)})
        for name, checkpoint in checkpoints.items():
            self._check_checkpoint(name, checkpoint)

        pilots, modulation = config.pilots, config.modulation.value
        report = MseReport(metadata={
            "pilots": pilots,
            "modulation": modulation,
            "test_frames": count,
            "replicate": self.replicate,
            "seeds": config.seeds.model_dump(),
            "interpolation": config.interpolation.value,
        })
        names = list(baselines) + list(checkpoints)
        report.expect((name, float(snr), pilots, modulation) for name in names for snr in snr_grid)
        if count == 0:
            return report

        autocorrelation = autocorrelation_for(config, self.replicate) if {"LMMSE", "MMSE"} & set(baselines) else None
        beta = beta_constant(Constellation.from_kind(config.modulation))

        for snr_db in snr_grid:
            totals = {name: 0.0 for name in names}
            truths, ls_estimates = [], []
            for index in range(count):
                channel, frame = simulate_frame(config, "test", index, snr_db, self.replicate)
                ls = estimate_ls_full(frame, config.interpolation)
                if "LS" in baselines:
                    totals["LS"] += frame_mse(ls, channel)
                if "LMMSE" in baselines:
                    est = estimate_lmmse_full(frame, autocorrelation, beta, config.interpolation)
                    totals["LMMSE"] += frame_mse(est, channel)
                if "MMSE" in baselines:
                    est = estimate_mmse_full(frame, autocorrelation, config.interpolation)
                    totals["MMSE"] += frame_mse(est, channel)
                truths.append(channel.data)
                ls_estimates.append(ls.data)

            if checkpoints:
                truths = np.stack(truths)
                ls_estimates = np.stack(ls_estimates)
                for name, checkpoint in checkpoints.items():
                    for start in range(0, count, _REFINE_CHUNK):
                        refined = refine_batch(
                            checkpoint.model, ls_estimates[start:start + _REFINE_CHUNK], checkpoint.normalization
                        )
                        errors = np.abs(refined - truths[start:start + _REFINE_CHUNK]) ** 2
                        totals[name] += float(np.sum(np.mean(errors, axis=(1, 2))))

            for name in names:
                mse = totals[name] / count
                report.add(ReportRow(name, float(snr_db), pilots, modulation, mse, count))
                self.experiment_logger.log_evaluation(name, snr_db, mse, count)

        return report


def evaluate(
    config: ExperimentConfig,
    checkpoints: Optional[Dict[str, Checkpoint]] = None,
    baselines: Sequence[str] = BASELINES,
    snr_grid: Optional[Sequence[float]] = None,
    count: Optional[int] = None,
    replicate: int = 0,
) -> MseReport:
    """Evaluate networks and baselines; see EvaluationService.evaluate."""
    return EvaluationService(config, replicate).evaluate(checkpoints, baselines, snr_grid, count)


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".yaml")


def emit_report(report: MseReport, path: Union[str, Path], db_columns: bool = False) -> Path:
    """
    Write the report as CSV plus a YAML metadata sidecar.

    Raises:
        StorageException: If a file cannot be written
    """
    path = Path(path)
    metadata = {
        **report.metadata,
        "columns": REPORT_COLUMNS + (["mse_db"] if db_columns else []),
        "rows": len(report),
        "complete": report.complete,
        "expected_cells": [list(cell) for cell in sorted(report.expected)],
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        report.to_frame(db_columns=db_columns).to_csv(path, index=False, float_format="%.17g")
        with open(sidecar_path(path), "w", encoding="utf-8") as handle:
            yaml.safe_dump(metadata, handle, sort_keys=True)
    except OSError as e:
        raise StorageException(f"Failed to write report: {e}", path=path)
    return path


def load_report(path: Union[str, Path]) -> MseReport:
    """
    Read a report written by emit_report.

    Raises:
        StorageException: If the CSV cannot be read
        ReportException: If columns are missing or cells repeat
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.EmptyDataError) as e:
        raise StorageException(f"Failed to read report: {e}", path=path)
    missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
    if missing:
        raise ReportException(f"Report is missing columns {missing}", details={"path": str(path)})

    metadata: Dict[str, Any] = {}
    sidecar = sidecar_path(path)
    if sidecar.exists():
        with open(sidecar, "r", encoding="utf-8") as handle:
            metadata = yaml.safe_load(handle) or {}

    report = MseReport(metadata={
        k: v for k, v in metadata.items() if k not in ("columns", "rows", "complete", "expected_cells")
    })
    for record in frame.to_dict(orient="records"):
        report.add(ReportRow(
            estimator=str(record["estimator"]),
            snr_db=float(record["snr_db"]),
            pilots=int(record["pilots"]),
            modulation=str(record["modulation"]),
            mse=float(record["mse"]),
            samples=int(record["samples"]),
        ))
    report.expect(
        (str(e), float(s), int(p), str(m)) for e, s, p, m in metadata.get("expected_cells", [])
    )
    return report
