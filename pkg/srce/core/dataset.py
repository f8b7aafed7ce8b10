"""
Dataset processing: complex channel matrices as real-valued image planes

A complex N x M matrix is split into a real plane and an imaginary plane,
which the SR network treats as single-channel images. This module also
holds the z-score normalization and the portable binary dataset format.
"""

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, Tuple, Union

import numpy as np
import yaml

from .channel import ChannelMatrix
from ..utils.exceptions import (
    ConfigurationException,
    DatasetFormatException,
    InputValidationException,
    StorageException,
)
from ..utils.validators import validate_finite, validate_same_shape

DATASET_MAGIC = b"SRCEDSET"
DATASET_VERSION = 1
_PREAMBLE = struct.Struct("<8sII")  # magic, version, header length
_FLOAT = np.dtype("<f8")


@dataclass(frozen=True)
class PlanePair:
    """
    Real and imaginary planes of one channel matrix.

    Attributes:
        real_plane: Real N x M matrix
        imag_plane: Real N x M matrix
    """

    real_plane: np.ndarray = field(repr=False)
    imag_plane: np.ndarray = field(repr=False)

    def __post_init__(self):
        validate_same_shape(self.real_plane, self.imag_plane, "real_plane", "imag_plane")
        validate_finite(self.real_plane, "real_plane")
        validate_finite(self.imag_plane, "imag_plane")

    def stacked(self) -> np.ndarray:
        """Planes as a (2, N, M) array."""
        return np.stack([self.real_plane, self.imag_plane])


def complex_to_planes(channel: Union[ChannelMatrix, np.ndarray]) -> PlanePair:
    """Split a complex matrix into its real and imaginary planes."""
    data = channel.data if isinstance(channel, ChannelMatrix) else np.asarray(channel)
    return PlanePair(real_plane=np.ascontiguousarray(data.real), imag_plane=np.ascontiguousarray(data.imag))


def planes_to_complex(planes: PlanePair) -> ChannelMatrix:
    """Merge two planes back into a complex matrix."""
    data = np.empty(planes.real_plane.shape, dtype=complex)
    data.real = planes.real_plane
    data.imag = planes.imag_plane
    return ChannelMatrix(data)


@dataclass(frozen=True)
class NormalizationStats:
    """
    Pooled z-score statistics of the training input planes.

    Attributes:
        mean: Mean over every input-plane entry, real and imaginary pooled
        std: Standard deviation over the same entries
    """

    mean: float
    std: float

    def __post_init__(self):
        if not np.isfinite(self.mean) or not np.isfinite(self.std) or self.std <= 0:
            raise ConfigurationException(
                "Normalization requires finite mean and positive std",
                details={"mean": self.mean, "std": self.std}
            )

    def apply(self, planes: np.ndarray) -> np.ndarray:
        return (planes - self.mean) / self.std

    def invert(self, planes: np.ndarray) -> np.ndarray:
        return planes * self.std + self.mean

    def to_dict(self) -> Dict[str, float]:
        return {"mean": float(self.mean), "std": float(self.std)}


@dataclass
class DatasetFile:
    """
    In-memory dataset of (LS estimate, ground truth) plane pairs.

    Attributes:
        num_subcarriers: N
        num_symbols: M
        metadata: Condition metadata (SNR, pilots, modulation, seeds, split)
        inputs: (count, 2, N, M) planes of the coarse LS estimates
        targets: (count, 2, N, M) planes of the true channels
    """

    num_subcarriers: int
    num_symbols: int
    metadata: Dict[str, Any]
    inputs: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = (len(self.inputs), 2, self.num_subcarriers, self.num_symbols)
        if self.inputs.shape != expected or self.targets.shape != expected:
            raise DatasetFormatException(
                "Dataset arrays do not match the header dimensions",
                details={
                    "inputs": list(self.inputs.shape),
                    "targets": list(self.targets.shape),
                    "expected": list(expected),
                }
            )

    @property
    def count(self) -> int:
        return int(len(self.inputs))

    def header(self) -> Dict[str, Any]:
        return {
            "version": DATASET_VERSION,
            "num_subcarriers": self.num_subcarriers,
            "num_symbols": self.num_symbols,
            "count": self.count,
            "metadata": self.metadata,
        }

    def samples(self) -> Iterator[Tuple[PlanePair, PlanePair]]:
        """Iterate (input, target) plane pairs."""
        for x, y in zip(self.inputs, self.targets):
            yield PlanePair(x[0], x[1]), PlanePair(y[0], y[1])


def fit_normalization(train: DatasetFile) -> NormalizationStats:
    """
    Pooled mean and std of every training input-plane entry.

    Raises:
        ConfigurationException: If the dataset is empty or has zero variance
    """
    if train.count == 0:
        raise ConfigurationException("Cannot fit normalization on an empty dataset")
    mean = float(np.mean(train.inputs))
    std = float(np.std(train.inputs))
    if std == 0.0:
        raise ConfigurationException(
            "Training inputs have zero variance",
            details={"mean": mean}
        )
    return NormalizationStats(mean=mean, std=std)


def _header_bytes(dataset: DatasetFile) -> bytes:
    return json.dumps(dataset.header(), sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_dataset(dataset: DatasetFile, path: Union[str, Path]) -> Path:
    """
    Write the binary dataset and its human-readable YAML sidecar.

    Layout: magic, version (u32), header length (u32), JSON header, then per
    sample the input planes (real, imag) and target planes (real, imag) as
    little-endian float64.

    Raises:
        StorageException: If the file cannot be written
    """
    path = Path(path)
    header = _header_bytes(dataset)
    payload = np.concatenate(
        [dataset.inputs, dataset.targets], axis=1
    ).astype(_FLOAT, copy=False).tobytes()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        # concurrent writers of one path leave a complete file
        staging = path.with_name(f"{path.name}.{os.getpid()}.tmp")
        with open(staging, "wb") as handle:
            handle.write(_PREAMBLE.pack(DATASET_MAGIC, DATASET_VERSION, len(header)))
            handle.write(header)
            handle.write(payload)
        os.replace(staging, path)
        with open(sidecar_path(path), "w", encoding="utf-8") as handle:
            yaml.safe_dump(dataset.header(), handle, sort_keys=True)
    except OSError as e:
        raise StorageException(f"Failed to write dataset: {e}", path=path)
    return path


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".yaml")


def read_dataset(path: Union[str, Path]) -> DatasetFile:
    """
    Read a dataset written by write_dataset.

    Raises:
        StorageException: If the file cannot be read
        DatasetFormatException: On bad magic, version, header or payload length
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise StorageException(f"Failed to read dataset: {e}", path=path)

    if len(raw) < _PREAMBLE.size:
        raise DatasetFormatException("Dataset file is truncated", details={"path": str(path)})
    magic, version, header_len = _PREAMBLE.unpack_from(raw)
    if magic != DATASET_MAGIC:
        raise DatasetFormatException("Not a dataset file", details={"path": str(path)})
    if version != DATASET_VERSION:
        raise DatasetFormatException(
            f"Unsupported dataset version {version}",
            details={"path": str(path), "version": version}
        )
    start = _PREAMBLE.size
    try:
        header = json.loads(raw[start:start + header_len].decode("utf-8"))
        n, m, count = (int(header[key]) for key in ("num_subcarriers", "num_symbols", "count"))
        metadata = header["metadata"]
    except (ValueError, KeyError, TypeError) as e:
        raise DatasetFormatException(f"Malformed dataset header: {e!r}", details={"path": str(path)})
    if min(n, m) < 1 or count < 0 or not isinstance(metadata, dict):
        raise DatasetFormatException(
            "Dataset header is inconsistent",
            details={"path": str(path), "num_subcarriers": n, "num_symbols": m, "count": count}
        )

    payload = raw[start + header_len:]
    expected = count * 4 * n * m * _FLOAT.itemsize
    if len(payload) != expected:
        raise DatasetFormatException(
            "Payload length does not match the header",
            details={"path": str(path), "payload": len(payload), "expected": expected}
        )
    blocks = np.frombuffer(payload, dtype=_FLOAT).reshape(count, 4, n, m).astype(np.float64)
    return DatasetFile(
        num_subcarriers=n,
        num_symbols=m,
        metadata=metadata,
        inputs=np.ascontiguousarray(blocks[:, :2]),
        targets=np.ascontiguousarray(blocks[:, 2:]),
    )


def empty_dataset(num_subcarriers: int, num_symbols: int, metadata: Dict[str, Any]) -> DatasetFile:
    shape = (0, 2, num_subcarriers, num_symbols)
    return DatasetFile(num_subcarriers, num_symbols, metadata, np.empty(shape), np.empty(shape))


def stack_pairs(pairs, num_subcarriers: int, num_symbols: int, metadata: Dict[str, Any]) -> DatasetFile:
    """Build a DatasetFile from (input PlanePair, target PlanePair) tuples."""
    pairs = list(pairs)
    if not pairs:
        return empty_dataset(num_subcarriers, num_symbols, metadata)
    inputs = np.stack([x.stacked() for x, _ in pairs])
    targets = np.stack([y.stacked() for _, y in pairs])
    if inputs.shape[2:] != (num_subcarriers, num_symbols):
        raise InputValidationException(
            "Plane dimensions differ from the dataset dimensions",
            details={"planes": list(inputs.shape[2:]), "expected": [num_subcarriers, num_symbols]}
        )
    return DatasetFile(num_subcarriers, num_symbols, metadata, inputs, targets)
