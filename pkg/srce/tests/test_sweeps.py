"""
Tests for the experiment sweeps
"""

import numpy as np
import pytest

from srce.services import sweep_service
from srce.services.evaluation_service import load_report
from srce.services.sweep_service import SweepService, mismatch_name, sweep_layers, sweep_mismatch, sweep_pilots, sweep_snr
from srce.tests.conftest import small_config
from srce.utils.exceptions import ConfigurationException, TrainingDivergedException


@pytest.fixture
def sweep_config():
    return small_config(**{"schedule.epochs": 1, "dataset.test": 10})


class TestMismatchName:
    def test_names(self):
        assert mismatch_name("FSRCE-4", 5.0) == "FSRCE-4[train=5dB]"
        assert mismatch_name("FSRCE-4", float("inf")) == "FSRCE-4[train=infdB]"


@pytest.mark.integration
@pytest.mark.slow
class TestSweeps:
    """Each sweep produces a complete, keyed report."""

    def test_snr_sweep(self, sweep_config, tmp_path):
        report = sweep_snr(sweep_config, output_dir=tmp_path)
        assert report.complete
        assert report.estimators() == ["FSRCE-1", "LMMSE", "LS", "MMSE", "SRCE"]
        assert len(report) == 5 * 2
        loaded = load_report(tmp_path / "reports" / "sweep_snr.csv")
        assert len(loaded) == len(report)
        assert loaded.complete

    def test_pilot_sweep(self, sweep_config):
        report = sweep_pilots(sweep_config, [4, 8])
        assert report.complete
        assert len(report) == 5 * 2 * 2
        for pilots in (4, 8):
            for estimator in ("LS", "LMMSE", "MMSE", "FSRCE-1", "SRCE"):
                assert np.isfinite(report.mse(estimator, 20.0, pilots=pilots))

    def test_layer_sweep(self, sweep_config):
        report = sweep_layers(sweep_config, [1, 2])
        assert report.estimators() == ["FSRCE-1", "FSRCE-2", "LMMSE", "LS", "SRCE"]
        assert report.complete

    def test_mismatch_sweep(self, sweep_config):
        report = sweep_mismatch(sweep_config, [5.0, 20.0])
        assert set(report.estimators()) == {"FSRCE-1[train=5dB]", "FSRCE-1[train=20dB]", "LS", "LMMSE"}
        assert report.complete

    def test_parallel_matches_serial(self, sweep_config, tmp_path):
        """The worker count does not change any cell."""
        serial = SweepService(sweep_config, tmp_path / "serial", workers=1).sweep_layers([1, 2])
        parallel = SweepService(sweep_config, tmp_path / "parallel", workers=2).sweep_layers([1, 2])
        assert [(r.key, r.mse) for r in serial.rows()] == [(r.key, r.mse) for r in parallel.rows()]

    def test_keep_going_reports_missing_cells(self, sweep_config, tmp_path, monkeypatch):
        real = sweep_service._train_condition

        def flaky(condition, output_dir):
            if condition.estimator == "FSRCE-2":
                raise TrainingDivergedException("diverged", details={"condition": condition.key})
            return real(condition, output_dir)

        monkeypatch.setattr(sweep_service, "_train_condition", flaky)
        report = SweepService(sweep_config, tmp_path, keep_going=True).sweep_layers([1, 2])
        assert not report.complete
        assert {cell[0] for cell in report.missing()} == {"FSRCE-2"}
        assert load_report(tmp_path / "reports" / "sweep_layers.csv").missing()

    def test_failure_aborts_and_flushes(self, sweep_config, tmp_path, monkeypatch):
        def broken(condition, output_dir):
            raise TrainingDivergedException("diverged")

        monkeypatch.setattr(sweep_service, "_train_condition", broken)
        with pytest.raises(TrainingDivergedException):
            SweepService(sweep_config, tmp_path).sweep_layers([1])
        assert (tmp_path / "reports" / "sweep_layers.csv").exists()


class TestSweepArguments:
    """Argument validation."""

    def test_empty_lists(self, sweep_config):
        service = SweepService(sweep_config)
        with pytest.raises(ConfigurationException):
            service.sweep_pilots([])
        with pytest.raises(ConfigurationException):
            service.sweep_layers([])
        with pytest.raises(ConfigurationException):
            service.sweep_mismatch([])

    def test_unknown_kind(self, sweep_config):
        with pytest.raises(ConfigurationException):
            SweepService(sweep_config).run("doppler")

    def test_invalid_pilot_count(self, sweep_config):
        with pytest.raises(ConfigurationException):
            SweepService(sweep_config).sweep_pilots([3])

    def test_workers_must_be_positive(self, sweep_config):
        with pytest.raises(ConfigurationException):
            SweepService(sweep_config, workers=0)
