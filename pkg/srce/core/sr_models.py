"""
Super-resolution network architectures

SRCNN and FSRCNN-x assembled from nn layers. Both map an N x M estimate to
an N x M refinement: interpolation already restored full resolution, so the
FSRCNN head is a stride-1 transposed convolution.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Union

import numpy as np

from .channel import ChannelMatrix
from .dataset import NormalizationStats
from ..nn.layers import ConvLayer, ReLU, he_init
from ..nn.model import Model, model_forward
from ..utils.exceptions import ConfigurationException, InputValidationException
from ..utils.seeding import derive_seed
from ..utils.validators import validate_finite

FSRCNN_FEATURES = 56
FSRCNN_SHRINK = 12
SRCNN_FEATURES = (64, 32)


class ArchitectureKind(Enum):
    """Network family enumeration."""
    SRCNN = "SRCNN"
    FSRCNN = "FSRCNN"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LayerSpec:
    """One row of an architecture table."""

    name: str
    kernel_size: int
    out_channels: int
    activation: bool
    transposed: bool = False


@dataclass(frozen=True)
class ArchitectureSpec:
    """
    Network architecture description.

    Attributes:
        kind: SRCNN or FSRCNN
        mapping_layers: Number of 3x3 mapping layers x (FSRCNN only)
        channels: Image channels in and out (1 for independent planes, 2 for real+imag)
    """

    kind: ArchitectureKind = ArchitectureKind.FSRCNN
    mapping_layers: int = 4
    channels: int = 1

    def __post_init__(self):
        if isinstance(self.kind, str):
            try:
                object.__setattr__(self, "kind", ArchitectureKind(self.kind.upper()))
            except ValueError:
                raise ConfigurationException(
                    f"Unknown architecture: {self.kind}",
                    details={"valid": [k.value for k in ArchitectureKind]}
                )
        if self.kind is ArchitectureKind.FSRCNN and (
            not isinstance(self.mapping_layers, int) or self.mapping_layers < 1
        ):
            raise ConfigurationException(
                f"FSRCNN needs at least one mapping layer, got {self.mapping_layers}",
                details={"mapping_layers": self.mapping_layers}
            )
        if self.channels not in (1, 2):
            raise ConfigurationException(
                f"channels must be 1 or 2, got {self.channels}",
                details={"channels": self.channels}
            )

    @property
    def estimator_name(self) -> str:
        """Name used in MSE reports (FSRCE-x, SRCE)."""
        if self.kind is ArchitectureKind.SRCNN:
            return "SRCE"
        return f"FSRCE-{self.mapping_layers}"

    @property
    def layer_table(self) -> List[LayerSpec]:
        if self.kind is ArchitectureKind.SRCNN:
            return [
                LayerSpec("patch", 9, SRCNN_FEATURES[0], activation=True),
                LayerSpec("nonlinear", 1, SRCNN_FEATURES[1], activation=True),
                LayerSpec("reconstruct", 5, self.channels, activation=False),
            ]
        table = [
            LayerSpec("feature", 5, FSRCNN_FEATURES, activation=True),
            LayerSpec("shrink", 1, FSRCNN_SHRINK, activation=True),
        ]
        table += [
            LayerSpec(f"map{i + 1}", 3, FSRCNN_SHRINK, activation=True)
            for i in range(self.mapping_layers)
        ]
        table += [
            LayerSpec("expand", 1, FSRCNN_FEATURES, activation=True),
            LayerSpec("deconv", 9, self.channels, activation=False, transposed=True),
        ]
        return table

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "mapping_layers": self.mapping_layers,
            "channels": self.channels,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ArchitectureSpec":
        return cls(
            kind=data.get("kind", ArchitectureKind.FSRCNN.value),
            mapping_layers=int(data.get("mapping_layers", 4)),
            channels=int(data.get("channels", 1)),
        )


def parameter_count(spec: ArchitectureSpec) -> int:
    """Kernel and bias entries implied by the layer table."""
    total = 0
    in_channels = spec.channels
    for row in spec.layer_table:
        total += row.kernel_size * row.kernel_size * in_channels * row.out_channels + row.out_channels
        in_channels = row.out_channels
    return total


def build_model(spec: ArchitectureSpec, seed: int) -> Model:
    """
    He-initialized model following the layer table; deterministic per seed.

    Raises:
        ConfigurationException: If the architecture is invalid
    """
    layers = []
    in_channels = spec.channels
    for index, row in enumerate(spec.layer_table):
        layer = ConvLayer.zeros(
            in_channels, row.out_channels, row.kernel_size,
            transposed=row.transposed, name=row.name,
        )
        layers.append(he_init(layer, derive_seed(seed, index)))
        if row.activation:
            layers.append(ReLU(name=f"{row.name}_relu"))
        in_channels = row.out_channels
    return Model(layers)


def _check_plane_size(model: Model, shape) -> None:
    largest = max((max(layer.kernel_size) for layer in model.conv_layers), default=1)
    if min(shape) < largest:
        raise InputValidationException(
            f"Plane {tuple(shape)} is smaller than the {largest}x{largest} kernel",
            details={"shape": list(shape), "kernel": largest}
        )


def infer(model: Model, plane: np.ndarray, norm: NormalizationStats) -> np.ndarray:
    """
    Refine one real N x M plane with a single-channel model.

    Raises:
        InputValidationException: If the plane is not finite or too small
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise InputValidationException(f"Plane must be 2-D, got {plane.shape}")
    validate_finite(plane, "plane")
    _check_plane_size(model, plane.shape)
    if model.in_channels not in (None, 1):
        raise InputValidationException(
            "infer takes single-channel models; use infer_two_channel",
            details={"in_channels": model.in_channels}
        )
    out, _ = model_forward(model, norm.apply(plane)[None, None])
    return norm.invert(out[0, 0])


def infer_two_channel(model: Model, planes: np.ndarray, norm: NormalizationStats) -> np.ndarray:
    """Refine a (2, N, M) real/imag stack with a two-channel model."""
    planes = np.asarray(planes, dtype=np.float64)
    if planes.ndim != 3 or planes.shape[0] != 2:
        raise InputValidationException(f"Expected a (2, N, M) stack, got {planes.shape}")
    validate_finite(planes, "planes")
    _check_plane_size(model, planes.shape[1:])
    out, _ = model_forward(model, norm.apply(planes)[None])
    return norm.invert(out[0])


def refine_batch(model: Model, estimates: np.ndarray, norm: NormalizationStats) -> np.ndarray:
    """
    Refine a (B, N, M) stack of complex estimates in one forward pass.

    Single-channel models see 2B independent planes; two-channel models see
    B real/imag images.
    """
    estimates = np.asarray(estimates)
    if estimates.ndim != 3:
        raise InputValidationException(f"Expected a (B, N, M) stack, got {estimates.shape}")
    validate_finite(estimates, "estimates")
    _check_plane_size(model, estimates.shape[1:])
    planes = np.stack([estimates.real, estimates.imag], axis=1)
    if model.in_channels == 2:
        out, _ = model_forward(model, norm.apply(planes))
        refined = norm.invert(out)
    else:
        batch, _, n, m = planes.shape
        out, _ = model_forward(model, norm.apply(planes.reshape(batch * 2, 1, n, m)))
        refined = norm.invert(out).reshape(batch, 2, n, m)
    return refined[:, 0] + 1j * refined[:, 1]


def refine_estimate(
    model: Model,
    estimate: Union[ChannelMatrix, np.ndarray],
    norm: NormalizationStats,
) -> ChannelMatrix:
    """Run the network on the planes of one coarse complex estimate."""
    data = estimate.data if isinstance(estimate, ChannelMatrix) else np.asarray(estimate)
    return ChannelMatrix(refine_batch(model, data[None], norm)[0])
