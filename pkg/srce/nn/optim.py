"""
Adam optimizer with bias correction
"""

from dataclasses import dataclass, field

import numpy as np

from ..utils.exceptions import NumericalException, ShapeMismatchException

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class AdamState:
    """
    Optimizer state for one parameter array.

    Attributes:
        first_moment: Running mean of gradients
        second_moment: Running mean of squared gradients
        step_count: Updates applied so far
        lr: Learning rate used by the next step
    """

    first_moment: np.ndarray = field(repr=False)
    second_moment: np.ndarray = field(repr=False)
    step_count: int = 0
    lr: float = 1e-3
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def like(cls, param: np.ndarray, lr: float = 1e-3) -> "AdamState":
        """Zero moments shaped like `param`."""
        return cls(np.zeros_like(param, dtype=np.float64), np.zeros_like(param, dtype=np.float64), 0, lr)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState, name: str = "param"):
    """
    Apply one Adam update to `param` in place.

    Args:
        param: Parameter array, updated in place
        grad: Gradient of the loss w.r.t. param
        state: Optimizer state for this parameter
        name: Identifier reported when the gradient is not finite

    Returns:
        (param, state)

    Raises:
        ShapeMismatchException: If grad, param and moments disagree in shape
        NumericalException: If grad contains NaN or inf
    """
    if grad.shape != param.shape or state.first_moment.shape != param.shape:
        raise ShapeMismatchException(
            f"{name}: gradient {grad.shape} / parameter {param.shape} mismatch",
            details={"layer": name}
        )
    if not np.all(np.isfinite(grad)):
        raise NumericalException(
            f"Non-finite gradient in {name}",
            details={"layer": name, "step_count": state.step_count}
        )

    state.step_count += 1
    state.first_moment *= state.beta1
    state.first_moment += (1.0 - state.beta1) * grad
    state.second_moment *= state.beta2
    state.second_moment += (1.0 - state.beta2) * grad * grad

    m_hat = state.first_moment / (1.0 - state.beta1 ** state.step_count)
    v_hat = state.second_moment / (1.0 - state.beta2 ** state.step_count)
    param -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return param, state
