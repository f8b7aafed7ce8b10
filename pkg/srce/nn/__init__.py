"""
Neural network engine: layers, model, optimizer and checkpoints
"""

from .layers import (
    ConvLayer,
    ReLU,
    conv2d_forward,
    conv2d_backward,
    deconv2d_forward,
    deconv2d_backward,
    relu_forward,
    relu_backward,
    mse_loss,
    he_init,
)
from .model import Model, ForwardCache, model_forward, model_backward, apply_gradients
from .optim import AdamState, adam_step
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint

__all__ = [
    "ConvLayer",
    "ReLU",
    "conv2d_forward",
    "conv2d_backward",
    "deconv2d_forward",
    "deconv2d_backward",
    "relu_forward",
    "relu_backward",
    "mse_loss",
    "he_init",
    "Model",
    "ForwardCache",
    "model_forward",
    "model_backward",
    "apply_gradients",
    "AdamState",
    "adam_step",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]
