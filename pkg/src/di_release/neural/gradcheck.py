"""Compare analytic gradients with central finite differences."""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable

import numpy as np

from di_release.numkit import SeededRng

if TYPE_CHECKING:
    from collections.abc import Sequence

    from di_release.neural import StackedNet

LossFunction = Callable[["StackedNet"], "tuple[float, np.ndarray]"]
"""Evaluate a deterministic loss and its analytic gradient for a network."""


def grad_check(
    net: StackedNet,
    loss_fn: LossFunction,
    epsilon: float = 1e-5,
    n_samples: int = 200,
    seed: int = 0,
    indices: Sequence[int] | None = None,
    floor: float = 1e-6,
) -> float:
    """Get the maximum relative error between analytic and numeric derivatives.

    The relative error of a parameter is :math:`|a - n| / \\max(|a| + |n|,
    \\text{floor})`, where :math:`a` is the analytic and :math:`n` the numeric
    derivative. The floor avoids dividing round-off noise by vanishing gradients.

    Args:
        net: Network at which the gradient is checked.
        loss_fn: Loss with its analytic gradient with respect to the flat parameters.
        epsilon: Step of the central differences.
        n_samples: Number of randomly chosen parameters to check. All parameters are
            checked if the network has fewer.
        seed: Seed for choosing the parameters.
        indices: Check these flat parameter indices instead of a random subsample.
        floor: Lower bound of the denominator of the relative error.
    """
    _, analytic = loss_fn(net)
    if indices is None:
        n_parameters = net.parameters.size
        if n_parameters <= n_samples:
            indices = range(n_parameters)
        else:
            rng = SeededRng(seed).generator
            indices = rng.choice(n_parameters, size=n_samples, replace=False).tolist()
    max_error = 0.0
    for i in indices:
        numeric = _central_difference(net, loss_fn, i, epsilon)
        denominator = max(abs(analytic[i]) + abs(numeric), floor)
        max_error = max(max_error, abs(analytic[i] - numeric) / denominator)
    return max_error


def _central_difference(
    net: StackedNet, loss_fn: LossFunction, index: int, epsilon: float
) -> float:
    shifted = net.parameters.copy()
    shifted[index] += epsilon
    loss_plus, _ = loss_fn(net.with_parameters(shifted))
    shifted[index] -= 2 * epsilon
    loss_minus, _ = loss_fn(net.with_parameters(shifted))
    return (loss_plus - loss_minus) / (2 * epsilon)
