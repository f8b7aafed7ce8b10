"""
Training Service - mini-batch Adam training of the SR networks.

Inputs are z-scored LS planes; predictions are mapped back to channel units
before the MSE against the true planes, so every reported loss is in
physical units. The best-validation model is kept alongside the final one.
"""

import copy
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import psutil

from srce.config import ExperimentConfig
from srce.core.dataset import DatasetFile, NormalizationStats, fit_normalization
from srce.core.sr_models import build_model
from srce.nn.checkpoint import Checkpoint, save_checkpoint
from srce.nn.layers import mse_loss
from srce.nn.model import Model, apply_gradients, model_backward, model_forward
from srce.services.dataset_service import load_or_generate
from srce.utils.exceptions import ConfigurationException, TrainingDivergedException
from srce.utils.logger import get_logger
from srce.utils.seeding import make_rng

# Frames per forward pass when scoring a whole dataset
_EVAL_CHUNK = 50


@dataclass
class TrainingResult:
    """
    Outcome of one training run.

    Attributes:
        best: Checkpoint with the lowest validation loss
        final: Checkpoint after the last epoch
        history: One row per epoch (epoch, lr, train_loss, val_loss)
        initial_train_loss: Training-set loss of the freshly initialized model
        paths: Written checkpoint manifests by role
    """

    best: Checkpoint
    final: Checkpoint
    history: List[Dict[str, Any]] = field(default_factory=list)
    initial_train_loss: float = float("nan")
    paths: Dict[str, Path] = field(default_factory=dict)


def network_arrays(dataset: DatasetFile, norm: NormalizationStats, channels: int):
    """
    Normalized network inputs and raw targets, frame-major.

    Single-channel models see each frame as two consecutive planes; two-channel
    models see one (2, N, M) image per frame.
    """
    n, m = dataset.num_subcarriers, dataset.num_symbols
    if channels == 2:
        return norm.apply(dataset.inputs), dataset.targets
    return (
        norm.apply(dataset.inputs.reshape(-1, 1, n, m)),
        dataset.targets.reshape(-1, 1, n, m),
    )


def _frame_rows(frames: np.ndarray, channels: int) -> np.ndarray:
    if channels == 2:
        return frames
    return np.stack([2 * frames, 2 * frames + 1], axis=1).ravel()


def dataset_loss(model: Model, dataset: DatasetFile, norm: NormalizationStats, channels: int = 1) -> float:
    """Mean per-sample squared error of the model over a dataset, channel units."""
    inputs, targets = network_arrays(dataset, norm, channels)
    if len(inputs) == 0:
        return float("nan")
    total = 0.0
    rows_per_chunk = _EVAL_CHUNK * (1 if channels == 2 else 2)
    for start in range(0, len(inputs), rows_per_chunk):
        out, _ = model_forward(model, inputs[start:start + rows_per_chunk])
        loss, _ = mse_loss(norm.invert(out), targets[start:start + rows_per_chunk])
        total += loss * len(out)
    return total / len(inputs)


def _memory_mb() -> float:
    return psutil.Process().memory_info().rss / (1024 * 1024)


class TrainingService:
    """
    Trains one model for one experiment condition.
    """

    def __init__(self, config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None):
        """
        Initialize training service.

        Args:
            config: Experiment configuration of the condition
            output_dir: Root for cached datasets and checkpoints (None keeps everything in memory)
        """
        self.config = config
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.logger = logging.getLogger(f"{__name__}.TrainingService")
        self.experiment_logger = get_logger()

    @property
    def condition(self) -> str:
        return self.config.condition_name()

    def checkpoint_stem(self, role: str) -> Optional[Path]:
        if self.output_dir is None:
            return None
        return self.output_dir / "checkpoints" / self.condition / role

    def _checkpoint(self, model: Model, norm: NormalizationStats, metadata: Dict[str, Any]) -> Checkpoint:
        config = self.config
        return Checkpoint(
            model=model,
            normalization=norm,
            architecture=config.architecture_spec.to_dict(),
            seeds=config.seeds.model_dump(),
            metadata=metadata,
        )

    def _metadata(self, model: Model, history, initial_loss, best_epoch, best_val) -> Dict[str, Any]:
        config = self.config
        return {
            "condition": self.condition,
            "estimator": config.architecture_spec.estimator_name,
            "train_snr_db": float(config.train_snr_db),
            "pilots": config.pilots,
            "modulation": config.modulation.value,
            "interpolation": config.interpolation.value,
            "input_mode": config.input_mode,
            "num_subcarriers": config.channel.num_subcarriers,
            "num_symbols": config.channel.symbols_per_frame,
            "schedule": config.schedule.model_dump(),
            "num_parameters": model.num_parameters,
            "layer_table": model.layer_table(),
            "initial_train_loss": float(initial_loss),
            "best_epoch": best_epoch,
            "best_val_loss": None if best_val is None else float(best_val),
            "history": history,
        }

    def train(
        self,
        train_set: Optional[DatasetFile] = None,
        val_set: Optional[DatasetFile] = None,
    ) -> TrainingResult:
        """
        Train the configured architecture.

        Args:
            train_set: Training pairs (generated on demand when None)
            val_set: Validation pairs (generated on demand when None)

        Returns:
            TrainingResult with best and final checkpoints

        Raises:
            ConfigurationException: If the datasets do not match the configuration
            TrainingDivergedException: If a batch loss is not finite
        """
        config = self.config
        schedule = config.schedule
        channels = config.channels

        if train_set is None:
            train_set = load_or_generate(config, "train", config.dataset.train, self.output_dir)
        if val_set is None:
            val_set = load_or_generate(config, "val", config.dataset.val, self.output_dir)
        expected = (config.channel.num_subcarriers, config.channel.symbols_per_frame)
        for name, dataset in (("train", train_set), ("val", val_set)):
            if (dataset.num_subcarriers, dataset.num_symbols) != expected:
                raise ConfigurationException(
                    f"{name} dataset is {dataset.num_subcarriers}x{dataset.num_symbols}, "
                    f"configuration expects {expected[0]}x{expected[1]}",
                    details={"split": name}
                )

        norm = fit_normalization(train_set)
        model = build_model(config.architecture_spec, config.seeds.init)
        self.experiment_logger.log_condition(
            self.condition,
            f"Built {config.architecture_spec.estimator_name} with {model.num_parameters} parameters"
        )
        for row in model.layer_table():
            self.logger.debug(f"{self.condition}: {row}")

        inputs, targets = network_arrays(train_set, norm, channels)
        initial_loss = dataset_loss(model, train_set, norm, channels)
        history: List[Dict[str, Any]] = []
        best_val: Optional[float] = None
        best_epoch: Optional[int] = None
        best_layers = copy.deepcopy(model.layers)

        for epoch in range(schedule.epochs):
            started = time.perf_counter()
            lr = schedule.learning_rate(epoch)
            order = make_rng(config.seeds.shuffle, epoch).permutation(train_set.count)
            running, seen = 0.0, 0

            for batch, start in enumerate(range(0, train_set.count, schedule.batch_size)):
                rows = _frame_rows(order[start:start + schedule.batch_size], channels)
                out, cache = model_forward(model, inputs[rows])
                loss, grad_pred = mse_loss(norm.invert(out), targets[rows])
                if not np.isfinite(loss):
                    raise TrainingDivergedException(
                        f"Training loss became non-finite at epoch {epoch}, batch {batch}",
                        details={"epoch": epoch, "batch": batch, "condition": self.condition}
                    )
                grads = model_backward(model, cache, grad_pred * norm.std)
                apply_gradients(model, grads, lr)
                running += loss * len(rows)
                seen += len(rows)

            train_loss = running / seen if seen else float("nan")
            val_loss = None
            last = epoch == schedule.epochs - 1
            if val_set.count and (epoch % schedule.validate_every == 0 or last):
                val_loss = dataset_loss(model, val_set, norm, channels)
                if best_val is None or val_loss < best_val:
                    best_val, best_epoch = val_loss, epoch
                    best_layers = copy.deepcopy(model.layers)

            elapsed = time.perf_counter() - started
            history.append({
                "epoch": epoch,
                "lr": float(lr),
                "train_loss": float(train_loss),
                "val_loss": None if val_loss is None else float(val_loss),
            })
            self.experiment_logger.log_epoch(
                epoch, train_loss, val_loss, lr,
                elapsed_s=elapsed, memory_mb=_memory_mb(), condition=self.condition,
            )

        if best_epoch is None:
            best_layers = copy.deepcopy(model.layers)
            best_epoch = schedule.epochs - 1

        metadata = self._metadata(model, history, initial_loss, best_epoch, best_val)
        final = self._checkpoint(Model(copy.deepcopy(model.layers)), norm, {**metadata, "role": "final"})
        best = self._checkpoint(Model(best_layers), norm, {**metadata, "role": "best"})

        paths = {}
        if self.output_dir is not None:
            for role, checkpoint in (("best", best), ("final", final)):
                paths[role] = save_checkpoint(checkpoint, self.checkpoint_stem(role))
            self.experiment_logger.log_condition(self.condition, f"Checkpoints written to {paths['best'].parent}")

        return TrainingResult(best=best, final=final, history=history, initial_train_loss=initial_loss, paths=paths)


def train(config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None, **datasets) -> TrainingResult:
    """Train one condition; see TrainingService.train."""
    return TrainingService(config, output_dir).train(**datasets)
