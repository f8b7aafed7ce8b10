"""
Shared fixtures and the finite-difference gradient oracle.
"""

from typing import Callable, Iterable, Optional, Tuple

import numpy as np
import pytest

from srce.config import ExperimentConfig, build_config

FD_STEP = 1e-5


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b|| / max(||a||, ||b||); 0 when both vanish."""
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale < 1e-14:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)


def numerical_gradient(
    fn: Callable[[], float],
    array: np.ndarray,
    indices: Optional[Iterable[Tuple[int, ...]]] = None,
    step: float = FD_STEP,
) -> np.ndarray:
    """
    Central differences of fn() w.r.t. entries of `array`, perturbed in place.

    Returns a full-shape array when indices is None, else one value per index.
    """
    if indices is None:
        indices = list(np.ndindex(array.shape))
        out = np.zeros(array.shape)
        full = True
    else:
        indices = list(indices)
        out = np.zeros(len(indices))
        full = False
    for k, index in enumerate(indices):
        original = array[index]
        array[index] = original + step
        plus = fn()
        array[index] = original - step
        minus = fn()
        array[index] = original
        value = (plus - minus) / (2.0 * step)
        if full:
            out[index] = value
        else:
            out[k] = value
    return out


def small_config(**changes) -> ExperimentConfig:
    """A 16 x 10 grid condition small enough to train in seconds."""
    data = {
        "channel": {
            "num_subcarriers": 16,
            "symbols_per_frame": 10,
            "num_taps": 4,
            "cyclic_prefix": 4,
        },
        "pilots": 4,
        "modulation": "QPSK",
        "train_snr_db": 20.0,
        "test_snr_grid": [0.0, 20.0],
        "architecture": {"kind": "FSRCNN", "mapping_layers": 1},
        "schedule": {"batch_size": 10, "epochs": 2, "decay_every": 1},
        "dataset": {"train": 20, "val": 10, "test": 20, "autocorrelation_channels": 200},
    }
    config = build_config(data)
    return config.updated(changes) if changes else config


@pytest.fixture
def rng():
    """Deterministic generator for test data."""
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_config() -> ExperimentConfig:
    return small_config()
