"""
Sequential model over ConvLayer and ReLU layers
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np

from .layers import ConvLayer, ReLU, layer_backward, layer_forward
from .optim import AdamState, adam_step
from ..utils.exceptions import InputValidationException, ShapeMismatchException

Layer = Union[ConvLayer, ReLU]
Gradients = Dict[str, np.ndarray]


@dataclass
class Model:
    """
    Ordered layer stack plus per-parameter Adam state.

    Parameters are addressed as "<layer name>.kernel" and "<layer name>.bias"
    in layer order; that order is also the checkpoint blob order.
    """

    layers: List[Layer] = field(default_factory=list)
    adam: Dict[str, AdamState] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            raise InputValidationException("Layer names must be unique", details={"layers": names})

        previous: Optional[ConvLayer] = None
        for layer in self.conv_layers:
            if previous is not None and previous.out_channels != layer.in_channels:
                raise ShapeMismatchException(
                    f"{previous.name} emits {previous.out_channels} channels, "
                    f"{layer.name} expects {layer.in_channels}",
                    details={"from": previous.name, "to": layer.name}
                )
            previous = layer

    @property
    def conv_layers(self) -> List[ConvLayer]:
        return [layer for layer in self.layers if isinstance(layer, ConvLayer)]

    @property
    def in_channels(self) -> Optional[int]:
        convs = self.conv_layers
        return convs[0].in_channels if convs else None

    @property
    def out_channels(self) -> Optional[int]:
        convs = self.conv_layers
        return convs[-1].out_channels if convs else None

    def parameters(self) -> "OrderedDict[str, np.ndarray]":
        """Parameter arrays by name, in layer order (kernel before bias)."""
        params = OrderedDict()
        for layer in self.conv_layers:
            params[f"{layer.name}.kernel"] = layer.kernel
            params[f"{layer.name}.bias"] = layer.bias
        return params

    @property
    def num_parameters(self) -> int:
        return sum(layer.num_parameters for layer in self.conv_layers)

    def layer_table(self) -> List[dict]:
        """One row per layer, for logs and checkpoint manifests."""
        rows = []
        for layer in self.layers:
            if isinstance(layer, ReLU):
                rows.append({"name": layer.name, "type": "relu"})
                continue
            rows.append({
                "name": layer.name,
                "type": "deconv" if layer.transposed else "conv",
                "in_channels": layer.in_channels,
                "out_channels": layer.out_channels,
                "kernel_size": list(layer.kernel_size),
                "parameters": layer.num_parameters,
            })
        return rows


class ForwardCache:
    """Per-layer inputs recorded by model_forward; usable by one backward pass."""

    def __init__(self, inputs: List[np.ndarray]):
        self._inputs = inputs
        self._consumed = False

    @property
    def consumed(self) -> bool:
        return self._consumed

    def take(self) -> List[np.ndarray]:
        if self._consumed:
            raise InputValidationException("Forward cache was already consumed by a backward pass")
        self._consumed = True
        inputs, self._inputs = self._inputs, []
        return inputs


def model_forward(model: Model, x: np.ndarray):
    """
    Run the layer stack.

    Returns:
        (output, ForwardCache)
    """
    inputs = []
    out = np.asarray(x, dtype=np.float64)
    for layer in model.layers:
        inputs.append(out)
        out = layer_forward(out, layer)
    if not model.layers:
        out = out.copy()
    return out, ForwardCache(inputs)


def model_backward(model: Model, cache: ForwardCache, grad_out: np.ndarray) -> Gradients:
    """
    Backpropagate grad_out through the stack recorded in `cache`.

    Returns:
        Gradients keyed like Model.parameters()
    """
    inputs = cache.take()
    if len(inputs) != len(model.layers):
        raise InputValidationException(
            "Forward cache does not belong to this model",
            details={"cached": len(inputs), "layers": len(model.layers)}
        )
    grads: Gradients = {}
    grad = grad_out
    for layer, x in zip(reversed(model.layers), reversed(inputs)):
        grad, grad_kernel, grad_bias = layer_backward(x, layer, grad)
        if grad_kernel is not None:
            grads[f"{layer.name}.kernel"] = grad_kernel
            grads[f"{layer.name}.bias"] = grad_bias
    return OrderedDict((name, grads[name]) for name in model.parameters())


def apply_gradients(model: Model, grads: Gradients, lr: float) -> None:
    """One Adam step on every parameter of the model."""
    for name, param in model.parameters().items():
        state = model.adam.get(name)
        if state is None:
            state = model.adam[name] = AdamState.like(param, lr)
        state.lr = lr
        adam_step(param, grads[name], state, name=name)
