"""
Dense 4-D tensor layers with analytic backpropagation

Tensors are float64 arrays shaped (batch, channels, height, width). Every
convolution uses stride 1 and symmetric zero padding of k // 2 so spatial
dimensions are preserved. The direct nested-loop cross-correlation is the
numerical reference; the implementation accumulates one kernel tap at a
time, which gives the same sums without materializing patch matrices.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..utils.exceptions import ShapeMismatchException
from ..utils.seeding import make_rng

Tensor4 = np.ndarray


def _check_tensor4(x: Tensor4, name: str) -> None:
    if not isinstance(x, np.ndarray) or x.ndim != 4:
        raise ShapeMismatchException(
            f"{name} must be a 4-D array (batch, channels, height, width)",
            details={"name": name, "shape": list(np.shape(x))}
        )


@dataclass
class ConvLayer:
    """
    A stride-1, same-padded convolution or transposed convolution.

    Plain layers store the kernel as (out_channels, in_channels, k_h, k_w).
    Transposed layers store the kernel of the convolution they are the
    adjoint of, i.e. (in_channels, out_channels, k_h, k_w), so a plain and a
    transposed layer sharing one kernel are exact adjoints.

    Attributes:
        kernel: Real 4-D weight array
        bias: Real vector, one entry per output channel
        transposed: Whether this is a transposed convolution
        name: Layer identifier used in logs and errors
    """

    kernel: np.ndarray = field(repr=False)
    bias: np.ndarray = field(repr=False)
    transposed: bool = False
    name: str = "conv"

    def __post_init__(self):
        self.kernel = np.asarray(self.kernel, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.kernel.ndim != 4:
            raise ShapeMismatchException(f"{self.name}: kernel must be 4-D, got {self.kernel.shape}")
        k_h, k_w = self.kernel.shape[2:]
        if k_h % 2 == 0 or k_w % 2 == 0:
            raise ShapeMismatchException(
                f"{self.name}: kernel sizes must be odd, got {k_h}x{k_w}",
                details={"layer": self.name}
            )
        if self.bias.shape != (self.out_channels,):
            raise ShapeMismatchException(
                f"{self.name}: bias shape {self.bias.shape} does not match {self.out_channels} output channels",
                details={"layer": self.name}
            )

    @classmethod
    def zeros(cls, in_channels: int, out_channels: int, kernel_size: int,
              transposed: bool = False, name: str = "conv") -> "ConvLayer":
        """A layer with all-zero parameters of the given geometry."""
        if transposed:
            shape = (in_channels, out_channels, kernel_size, kernel_size)
        else:
            shape = (out_channels, in_channels, kernel_size, kernel_size)
        return cls(np.zeros(shape), np.zeros(out_channels), transposed, name)

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[0] if self.transposed else self.kernel.shape[1]

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[1] if self.transposed else self.kernel.shape[0]

    @property
    def kernel_size(self) -> Tuple[int, int]:
        return self.kernel.shape[2], self.kernel.shape[3]

    @property
    def padding(self) -> Tuple[int, int]:
        """Zero padding per side, (rows, columns)."""
        return self.kernel.shape[2] // 2, self.kernel.shape[3] // 2

    @property
    def stride(self) -> Tuple[int, int]:
        return 1, 1

    @property
    def fan_in(self) -> int:
        k_h, k_w = self.kernel_size
        return self.in_channels * k_h * k_w

    @property
    def num_parameters(self) -> int:
        return int(self.kernel.size + self.bias.size)

    def parameters(self):
        return [self.kernel, self.bias]


@dataclass(frozen=True)
class ReLU:
    """Rectified linear unit, subgradient 0 at 0."""

    name: str = "relu"


def _pad(x: Tensor4, padding: Tuple[int, int]) -> Tensor4:
    p_h, p_w = padding
    return np.pad(x, ((0, 0), (0, 0), (p_h, p_h), (p_w, p_w)))


def _correlate(x_pad: Tensor4, kernel: np.ndarray, height: int, width: int) -> Tensor4:
    """out[b, o, y, x] = sum_{c, i, j} kernel[o, c, i, j] * x_pad[b, c, y + i, x + j]."""
    out_channels, _, k_h, k_w = kernel.shape
    out = np.zeros((x_pad.shape[0], out_channels, height, width))
    for i in range(k_h):
        for j in range(k_w):
            window = x_pad[:, :, i:i + height, j:j + width]
            out += np.einsum("oc,bchw->bohw", kernel[:, :, i, j], window, optimize=True)
    return out


def _scatter(g: Tensor4, kernel: np.ndarray, padding: Tuple[int, int]) -> Tensor4:
    """Adjoint of _correlate: g[b, o] spread back onto the c channels, padding cropped."""
    _, in_channels, k_h, k_w = kernel.shape
    batch, _, height, width = g.shape
    p_h, p_w = padding
    out_pad = np.zeros((batch, in_channels, height + 2 * p_h, width + 2 * p_w))
    for i in range(k_h):
        for j in range(k_w):
            out_pad[:, :, i:i + height, j:j + width] += np.einsum(
                "oc,bohw->bchw", kernel[:, :, i, j], g, optimize=True
            )
    return out_pad[:, :, p_h:p_h + height, p_w:p_w + width]


def _kernel_grad(g: Tensor4, x_pad: Tensor4, kernel_shape: Tuple[int, ...]) -> np.ndarray:
    """grad[o, c, i, j] = sum_{b, y, x} g[b, o, y, x] * x_pad[b, c, y + i, x + j]."""
    _, _, k_h, k_w = kernel_shape
    height, width = g.shape[2:]
    grad = np.zeros(kernel_shape)
    for i in range(k_h):
        for j in range(k_w):
            window = x_pad[:, :, i:i + height, j:j + width]
            grad[:, :, i, j] = np.einsum("bohw,bchw->oc", g, window, optimize=True)
    return grad


def _check_input(x: Tensor4, layer: ConvLayer) -> None:
    _check_tensor4(x, f"{layer.name} input")
    if x.shape[1] != layer.in_channels:
        raise ShapeMismatchException(
            f"{layer.name}: input has {x.shape[1]} channels, layer expects {layer.in_channels}",
            details={"layer": layer.name, "input_shape": list(x.shape)}
        )


def _check_grad(grad_out: Tensor4, x: Tensor4, layer: ConvLayer) -> None:
    _check_tensor4(grad_out, f"{layer.name} grad_out")
    expected = (x.shape[0], layer.out_channels, x.shape[2], x.shape[3])
    if grad_out.shape != expected:
        raise ShapeMismatchException(
            f"{layer.name}: grad_out shape {grad_out.shape} != {expected}",
            details={"layer": layer.name}
        )


def _require(layer: ConvLayer, transposed: bool) -> None:
    if layer.transposed != transposed:
        kind = "transposed" if transposed else "plain"
        raise ShapeMismatchException(
            f"{layer.name}: expected a {kind} convolution layer",
            details={"layer": layer.name}
        )


def conv2d_forward(x: Tensor4, layer: ConvLayer) -> Tensor4:
    """Same-padded stride-1 cross-correlation plus per-channel bias."""
    _require(layer, transposed=False)
    _check_input(x, layer)
    out = _correlate(_pad(x, layer.padding), layer.kernel, x.shape[2], x.shape[3])
    return out + layer.bias[None, :, None, None]


def conv2d_backward(x: Tensor4, layer: ConvLayer, grad_out: Tensor4):
    """
    Exact gradients of conv2d_forward.

    Returns:
        (grad_input, grad_kernel, grad_bias)
    """
    _require(layer, transposed=False)
    _check_input(x, layer)
    _check_grad(grad_out, x, layer)
    grad_input = _scatter(grad_out, layer.kernel, layer.padding)
    grad_kernel = _kernel_grad(grad_out, _pad(x, layer.padding), layer.kernel.shape)
    grad_bias = grad_out.sum(axis=(0, 2, 3))
    return grad_input, grad_kernel, grad_bias


def deconv2d_forward(x: Tensor4, layer: ConvLayer) -> Tensor4:
    """Stride-1 transposed convolution (adjoint of the same-kernel conv) plus bias."""
    _require(layer, transposed=True)
    _check_input(x, layer)
    out = _scatter(x, layer.kernel, layer.padding)
    return out + layer.bias[None, :, None, None]


def deconv2d_backward(x: Tensor4, layer: ConvLayer, grad_out: Tensor4):
    """
    Exact gradients of deconv2d_forward.

    Returns:
        (grad_input, grad_kernel, grad_bias)
    """
    _require(layer, transposed=True)
    _check_input(x, layer)
    _check_grad(grad_out, x, layer)
    grad_pad = _pad(grad_out, layer.padding)
    grad_input = _correlate(grad_pad, layer.kernel, x.shape[2], x.shape[3])
    grad_kernel = _kernel_grad(x, grad_pad, layer.kernel.shape)
    grad_bias = grad_out.sum(axis=(0, 2, 3))
    return grad_input, grad_kernel, grad_bias


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return np.where(x > 0, grad_out, 0.0)


def mse_loss(pred: Tensor4, target: Tensor4):
    """
    Squared error summed per sample, averaged over the batch.

    Returns:
        (loss, grad_pred)
    """
    if np.shape(pred) != np.shape(target):
        raise ShapeMismatchException(
            f"Prediction {np.shape(pred)} and target {np.shape(target)} differ",
            details={"pred": list(np.shape(pred)), "target": list(np.shape(target))}
        )
    batch = pred.shape[0]
    diff = pred - target
    loss = float(np.sum(diff * diff)) / batch
    return loss, (2.0 / batch) * diff


def he_init(layer: ConvLayer, seed: int) -> ConvLayer:
    """Kernel ~ Normal(0, 2 / fan_in), zero bias; deterministic per seed."""
    rng = make_rng(seed)
    layer.kernel = rng.normal(0.0, np.sqrt(2.0 / layer.fan_in), size=layer.kernel.shape)
    layer.bias = np.zeros_like(layer.bias)
    return layer


def layer_forward(x: Tensor4, layer) -> Tensor4:
    """Dispatch one forward step on layer type."""
    if isinstance(layer, ReLU):
        return relu_forward(x)
    if layer.transposed:
        return deconv2d_forward(x, layer)
    return conv2d_forward(x, layer)


def layer_backward(x: Tensor4, layer, grad_out: Tensor4):
    """
    Dispatch one backward step on layer type.

    Returns:
        (grad_input, grad_kernel or None, grad_bias or None)
    """
    if isinstance(layer, ReLU):
        return relu_backward(x, grad_out), None, None
    if layer.transposed:
        return deconv2d_backward(x, layer, grad_out)
    return conv2d_backward(x, layer, grad_out)


def reference_conv2d(x: Tensor4, kernel: np.ndarray, bias: Optional[np.ndarray] = None) -> Tensor4:
    """Direct nested-loop same-padded cross-correlation, the numerical reference."""
    batch, in_channels, height, width = x.shape
    out_channels, _, k_h, k_w = kernel.shape
    p_h, p_w = k_h // 2, k_w // 2
    out = np.zeros((batch, out_channels, height, width))
    for b in range(batch):
        for o in range(out_channels):
            for y in range(height):
                for xx in range(width):
                    total = 0.0 if bias is None else bias[o]
                    for c in range(in_channels):
                        for i in range(k_h):
                            for j in range(k_w):
                                r, s = y + i - p_h, xx + j - p_w
                                if 0 <= r < height and 0 <= s < width:
                                    total += kernel[o, c, i, j] * x[b, c, r, s]
                    out[b, o, y, xx] = total
    return out
