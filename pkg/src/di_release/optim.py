"""RMSprop with clipping and recurrent Ridge regularization.

Gradients are clipped before they enter the mean-square accumulator, so the
accumulator only ever sees clipped values.
"""

from __future__ import annotations

from typing import Literal

import attrs
import numpy as np
from attrs import field, frozen

from di_release.errors import ContractViolationError
from di_release.neural import StackedNet

ClipMode = Literal["value", "norm"]
"""Clip every entry to :math:`[-C, C]`, or rescale the whole vector to norm :math:`C`."""


@frozen(eq=False)
class RmsPropState:
    accumulator: np.ndarray = field(repr=False)
    decay: float = 0.9
    learning_rate: float = 1e-3
    epsilon: float = 1e-8

    def __attrs_post_init__(self) -> None:
        if not 0 < self.decay < 1:
            msg = f"RMSprop decay must lie in (0, 1), got {self.decay}"
            raise ContractViolationError(msg)
        if self.learning_rate < 0 or self.epsilon <= 0:
            msg = "RMSprop needs a non-negative learning rate and positive epsilon"
            raise ContractViolationError(msg)

    @classmethod
    def zeros(cls, size: int, **kwargs: float) -> RmsPropState:
        return cls(np.zeros(size), **kwargs)


def clip_gradients(
    grads: np.ndarray, clip_value: float, mode: ClipMode = "value"
) -> np.ndarray:
    """Limit the gradient with clipping value :math:`C`.

    >>> clip_gradients(np.array([10.0, -10.0, 0.5]), clip_value=1.0)
    array([ 1. , -1. ,  0.5])
    """
    if clip_value <= 0:
        msg = f"Clipping value must be positive, got {clip_value}"
        raise ContractViolationError(msg)
    if mode == "value":
        return np.clip(grads, -clip_value, clip_value)
    if mode == "norm":
        norm = float(np.linalg.norm(grads))
        if norm <= clip_value:
            return grads.copy()
        return grads * (clip_value / norm)
    msg = f"Unknown clipping mode {mode!r}"
    raise ContractViolationError(msg)


def rmsprop_step(
    state: RmsPropState, params: np.ndarray, grads: np.ndarray
) -> tuple[np.ndarray, RmsPropState]:
    """Apply one RMSprop update and return new parameters and optimizer state."""
    if params.shape != grads.shape or grads.shape != state.accumulator.shape:
        msg = (
            f"Shapes of parameters {params.shape}, gradients {grads.shape}, and"
            f" accumulator {state.accumulator.shape} do not agree"
        )
        raise ContractViolationError(msg)
    accumulator = state.decay * state.accumulator + (1 - state.decay) * grads**2
    step = state.learning_rate * grads / np.sqrt(accumulator + state.epsilon)
    return params - step, attrs.evolve(state, accumulator=accumulator)


def recurrent_l2_gradient(net: StackedNet, beta: float) -> np.ndarray:
    """Gradient of :math:`\\beta\\sum\\|K\\|_F^2` over all recurrent weights.

    Input weights, biases, and the head get an exactly zero contribution.
    """
    if beta < 0:
        msg = f"Regularization weight must be non-negative, got {beta}"
        raise ContractViolationError(msg)
    return np.where(net.layout.recurrent_mask(), 2.0 * beta * net.parameters, 0.0)


def recurrent_l2_penalty(net: StackedNet, beta: float) -> float:
    recurrent = net.parameters[net.layout.recurrent_mask()]
    return beta * float(np.sum(recurrent**2))
