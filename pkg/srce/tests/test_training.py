"""
Tests for the training service
"""

import numpy as np
import pytest

from srce.nn.checkpoint import load_checkpoint
from srce.services import training_service
from srce.services.dataset_service import dataset_path, generate_dataset
from srce.services.training_service import TrainingService, dataset_loss, network_arrays, train
from srce.tests.conftest import small_config
from srce.utils.exceptions import ConfigurationException, TrainingDivergedException


@pytest.mark.integration
class TestTraining:
    """End-to-end training of a small condition."""

    def test_history_and_schedule(self, tiny_config):
        result = train(tiny_config)
        assert [row["epoch"] for row in result.history] == [0, 1]
        assert result.history[0]["lr"] == pytest.approx(1e-3)
        assert result.history[1]["lr"] == pytest.approx(2e-4)
        assert all(np.isfinite(row["train_loss"]) for row in result.history)
        assert result.best.metadata["role"] == "best"
        assert result.final.metadata["role"] == "final"
        assert result.best.metadata["best_epoch"] in (0, 1)
        assert result.best.metadata["num_parameters"] == result.best.model.num_parameters

    def test_one_step_on_one_sample_reduces_loss(self):
        """A single Adam step on a single frame lowers that frame's loss."""
        config = small_config(**{
            "dataset.train": 1,
            "dataset.val": 1,
            "schedule.epochs": 1,
            "schedule.batch_size": 1,
            "schedule.initial_lr": 1e-4,
        })
        train_set = generate_dataset(config, "train", 1)
        result = TrainingService(config).train(train_set, generate_dataset(config, "val", 1))
        after = dataset_loss(result.final.model, train_set, result.final.normalization)
        assert after < result.initial_train_loss

    def test_training_is_deterministic(self, tiny_config):
        a = train(tiny_config)
        b = train(tiny_config)
        for x, y in zip(a.final.model.parameters().values(), b.final.model.parameters().values()):
            np.testing.assert_array_equal(x, y)
        assert a.history == b.history

    def test_checkpoints_written(self, tiny_config, tmp_path):
        result = train(tiny_config, tmp_path)
        assert set(result.paths) == {"best", "final"}
        best = load_checkpoint(result.paths["best"])
        assert best.metadata["condition"] == "FSRCE-1_QPSK_p4_train20dB"
        assert result.paths["best"].parent == tmp_path / "checkpoints" / "FSRCE-1_QPSK_p4_train20dB"
        assert dataset_path(tmp_path, tiny_config, "train").exists()

    def test_best_checkpoint_is_lowest_validation_loss(self, tiny_config):
        """The best checkpoint never scores worse on validation than the final epoch."""
        config = tiny_config.updated({"schedule.epochs": 4, "schedule.validate_every": 1})
        train_set = generate_dataset(config, "train", config.dataset.train)
        val_set = generate_dataset(config, "val", config.dataset.val)
        result = TrainingService(config).train(train_set, val_set)
        val_losses = [row["val_loss"] for row in result.history]
        best_val = result.best.metadata["best_val_loss"]
        assert best_val == min(val_losses)
        assert best_val <= val_losses[-1]
        assert result.best.metadata["best_epoch"] == val_losses.index(best_val)
        rescored = dataset_loss(result.best.model, val_set, result.best.normalization)
        assert rescored == pytest.approx(best_val, rel=1e-9)

    def test_two_channel_training(self):
        config = small_config(input_mode="two_channel", **{"architecture.kind": "SRCNN"})
        result = train(config)
        assert result.final.model.in_channels == 2
        assert np.isfinite(result.history[-1]["train_loss"])

    def test_divergence_is_reported(self, tiny_config, monkeypatch):
        def nan_loss(pred, target):
            return float("nan"), np.zeros_like(pred)

        monkeypatch.setattr(training_service, "mse_loss", nan_loss)
        with pytest.raises(TrainingDivergedException) as excinfo:
            train(tiny_config)
        assert excinfo.value.details["epoch"] == 0
        assert excinfo.value.details["batch"] == 0

    def test_dimension_mismatch(self, tiny_config):
        other = small_config(**{"channel.symbols_per_frame": 12})
        with pytest.raises(ConfigurationException):
            TrainingService(tiny_config).train(generate_dataset(other, "train", 2), generate_dataset(tiny_config, "val", 2))

    def test_empty_validation_set(self, tiny_config):
        """Without validation frames the final model is the best one."""
        config = tiny_config.updated({"dataset.val": 0})
        result = train(config)
        assert result.best.metadata["best_val_loss"] is None
        assert result.best.metadata["best_epoch"] == 1


class TestNetworkArrays:
    """Input layout for the two model families."""

    def test_single_channel_layout(self, tiny_config):
        dataset = generate_dataset(tiny_config, "train", 3)
        norm = training_service.fit_normalization(dataset)
        inputs, targets = network_arrays(dataset, norm, channels=1)
        assert inputs.shape == (6, 1, 16, 10)
        np.testing.assert_array_equal(targets[3, 0], dataset.targets[1, 1])

    def test_two_channel_layout(self, tiny_config):
        dataset = generate_dataset(tiny_config, "train", 3)
        norm = training_service.fit_normalization(dataset)
        inputs, _ = network_arrays(dataset, norm, channels=2)
        assert inputs.shape == (3, 2, 16, 10)
