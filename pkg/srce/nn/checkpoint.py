"""
Checkpoint persistence

A checkpoint is a YAML manifest (layer table, parameter shapes and offsets,
architecture, normalization statistics, seeds, training metadata) next to a
binary blob holding every parameter as little-endian float64 in manifest
order. Saving is deterministic, so save -> load -> save reproduces both
files byte for byte.
"""

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np
import yaml

from .layers import ConvLayer, ReLU
from .model import Model
from ..core.dataset import NormalizationStats
from ..utils.exceptions import DatasetFormatException, StorageException

CHECKPOINT_FORMAT = "srce-checkpoint"
CHECKPOINT_VERSION = 1
_FLOAT = np.dtype("<f8")


@dataclass
class Checkpoint:
    """
    A trained model with everything needed to run and reproduce it.

    Attributes:
        model: Layer stack with trained parameters
        normalization: Input normalization fitted on the training set
        architecture: Serialized ArchitectureSpec
        seeds: Seeds used to build and train the model
        metadata: Training condition, history and bookkeeping
    """

    model: Model
    normalization: NormalizationStats
    architecture: Dict[str, Any] = field(default_factory=dict)
    seeds: Dict[str, int] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)


def checkpoint_paths(path: Union[str, Path]) -> Tuple[Path, Path]:
    """(manifest, blob) paths for a checkpoint stem."""
    path = Path(path)
    if path.suffix in (".yaml", ".bin"):
        path = path.with_suffix("")
    return path.with_name(path.name + ".yaml"), path.with_name(path.name + ".bin")


def _manifest(checkpoint: Checkpoint, blob_name: str, blob: bytes) -> Dict[str, Any]:
    parameters = []
    offset = 0
    for name, array in checkpoint.model.parameters().items():
        parameters.append({
            "name": name,
            "shape": [int(d) for d in array.shape],
            "offset": offset,
            "count": int(array.size),
        })
        offset += int(array.size)

    layers = []
    for layer in checkpoint.model.layers:
        if isinstance(layer, ReLU):
            layers.append({"name": layer.name, "type": "relu"})
        else:
            layers.append({"name": layer.name, "type": "deconv" if layer.transposed else "conv"})

    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "blob": blob_name,
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
        "dtype": _FLOAT.str,
        "num_parameters": checkpoint.model.num_parameters,
        "architecture": checkpoint.architecture,
        "layers": layers,
        "parameters": parameters,
        "normalization": checkpoint.normalization.to_dict(),
        "seeds": {k: int(v) for k, v in checkpoint.seeds.items()},
        "metadata": checkpoint.metadata,
    }


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    """
    Write manifest and blob.

    Args:
        checkpoint: Checkpoint to write
        path: Stem path; ".yaml" and ".bin" are appended

    Returns:
        Manifest path

    Raises:
        StorageException: If either file cannot be written
    """
    manifest_path, blob_path = checkpoint_paths(path)
    arrays = list(checkpoint.model.parameters().values())
    blob = b"".join(np.ascontiguousarray(a, dtype=_FLOAT).tobytes() for a in arrays)
    manifest = _manifest(checkpoint, blob_path.name, blob)
    try:
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        blob_path.write_bytes(blob)
        with open(manifest_path, "w", encoding="utf-8") as handle:
            yaml.safe_dump(manifest, handle, sort_keys=False, default_flow_style=None)
    except OSError as e:
        raise StorageException(f"Failed to write checkpoint: {e}", path=manifest_path)
    return manifest_path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read a checkpoint written by save_checkpoint.

    Raises:
        StorageException: If a file cannot be read
        DatasetFormatException: If the manifest is malformed or disagrees with the blob
    """
    manifest_path, blob_path = checkpoint_paths(path)
    try:
        with open(manifest_path, "r", encoding="utf-8") as handle:
            manifest = yaml.safe_load(handle)
    except OSError as e:
        raise StorageException(f"Failed to read checkpoint: {e}", path=manifest_path)
    except yaml.YAMLError as e:
        raise DatasetFormatException(f"Malformed checkpoint manifest: {e}", details={"path": str(manifest_path)})
    if not isinstance(manifest, dict):
        raise DatasetFormatException(
            "Checkpoint manifest is not a mapping",
            details={"path": str(manifest_path), "type": type(manifest).__name__}
        )

    if manifest.get("format") != CHECKPOINT_FORMAT or manifest.get("version") != CHECKPOINT_VERSION:
        raise DatasetFormatException(
            "Unsupported checkpoint format",
            details={"path": str(manifest_path), "format": manifest.get("format"), "version": manifest.get("version")}
        )
    try:
        blob = (manifest_path.parent / str(manifest.get("blob", blob_path.name))).read_bytes()
    except OSError as e:
        raise StorageException(f"Failed to read checkpoint: {e}", path=blob_path)
    if hashlib.sha256(blob).hexdigest() != manifest.get("blob_sha256"):
        raise DatasetFormatException("Checkpoint blob checksum mismatch", details={"path": str(blob_path)})

    try:
        return _checkpoint_from(manifest, np.frombuffer(blob, dtype=_FLOAT), manifest_path)
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetFormatException(
            f"Malformed checkpoint manifest: {e!r}",
            details={"path": str(manifest_path)}
        )


def _checkpoint_from(manifest: Dict[str, Any], values: np.ndarray, manifest_path: Path) -> Checkpoint:
    expected = sum(p["count"] for p in manifest["parameters"])
    if values.size != expected:
        raise DatasetFormatException(
            "Checkpoint blob length does not match the manifest",
            details={"path": str(manifest_path), "values": int(values.size), "expected": expected}
        )

    arrays = {
        p["name"]: values[p["offset"]:p["offset"] + p["count"]].reshape(p["shape"]).astype(np.float64)
        for p in manifest["parameters"]
    }
    layers = []
    for row in manifest["layers"]:
        if row["type"] == "relu":
            layers.append(ReLU(name=row["name"]))
            continue
        kernel_key, bias_key = f"{row['name']}.kernel", f"{row['name']}.bias"
        if kernel_key not in arrays or bias_key not in arrays:
            raise DatasetFormatException(
                f"Parameters of layer {row['name']} are missing",
                details={"path": str(manifest_path)}
            )
        layers.append(ConvLayer(
            arrays[kernel_key], arrays[bias_key], transposed=row["type"] == "deconv", name=row["name"]
        ))

    return Checkpoint(
        model=Model(layers),
        normalization=NormalizationStats(**manifest["normalization"]),
        architecture=manifest.get("architecture") or {},
        seeds=manifest.get("seeds") or {},
        metadata=manifest.get("metadata") or {},
    )
