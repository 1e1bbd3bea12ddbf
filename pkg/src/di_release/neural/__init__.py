"""Stacked LSTM sequence networks with backpropagation through time.

All parameters of a `StackedNet` live in one flat float64 vector. The order of this
vector is fixed: for each layer, the stacked input weights :math:`V` (:math:`4H\\times
I`), then the stacked recurrent weights :math:`K` (:math:`4H\\times H`), then the
stacked biases :math:`b` (:math:`4H`), all row-major with the units in the order
:code:`f, g, o, c`; finally the head weights (:math:`O\\times H`) and head bias
(:math:`O`). Gradients are returned in the same layout.

Every sequence starts from zero hidden and cell states, so different sequences in a
batch never share state.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Literal

import attrs
import numpy as np
from attrs import field, frozen

from di_release.errors import ContractViolationError
from di_release.neural.lstm import (
    CellCache,
    LstmLayerParams,
    LstmState,
    cell_backward,
    cell_forward,
)
from di_release.numkit import Matrix, affine, softmax_columns

if TYPE_CHECKING:
    from di_release.numkit import SeededRng

HeadKind = Literal["linear", "softmax"]
FORGET_BIAS = 1.0


@frozen
class ParameterLayout:
    """Shapes of a `StackedNet` and the position of each array in the flat vector.

    >>> layout = ParameterLayout(input_dim=2, hidden_dims=(3,), output_dim=1)
    >>> layout.size
    76
    >>> layout.head_slices()
    (slice(72, 75, None), slice(75, 76, None))
    """

    input_dim: int
    hidden_dims: tuple[int, ...] = field(converter=tuple)
    output_dim: int

    def __attrs_post_init__(self) -> None:
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if not self.hidden_dims or any(d < 1 for d in dims):
            msg = f"Invalid network dimensions {dims}"
            raise ContractViolationError(msg)

    @property
    def n_layers(self) -> int:
        return len(self.hidden_dims)

    def layer_input_dim(self, layer: int) -> int:
        if layer == 0:
            return self.input_dim
        return self.hidden_dims[layer - 1]

    def layer_slices(self, layer: int) -> tuple[slice, slice, slice]:
        """Positions of :math:`V`, :math:`K`, and :math:`b` of a layer."""
        start = sum(self.__layer_size(i) for i in range(layer))
        hidden = self.hidden_dims[layer]
        n_input = 4 * hidden * self.layer_input_dim(layer)
        n_recurrent = 4 * hidden * hidden
        return (
            slice(start, start + n_input),
            slice(start + n_input, start + n_input + n_recurrent),
            slice(start + n_input + n_recurrent, start + self.__layer_size(layer)),
        )

    def head_slices(self) -> tuple[slice, slice]:
        start = sum(self.__layer_size(i) for i in range(self.n_layers))
        n_weights = self.output_dim * self.hidden_dims[-1]
        return (
            slice(start, start + n_weights),
            slice(start + n_weights, start + n_weights + self.output_dim),
        )

    @property
    def size(self) -> int:
        return self.head_slices()[1].stop

    def unflatten(
        self, flat: np.ndarray
    ) -> tuple[list[LstmLayerParams], tuple[Matrix, Matrix]]:
        """Create views of the flat vector with the shapes of each parameter array."""
        if flat.shape != (self.size,):
            msg = f"Expected {self.size} parameters, got array of shape {flat.shape}"
            raise ContractViolationError(msg)
        layers = []
        for i, hidden in enumerate(self.hidden_dims):
            n_input = self.layer_input_dim(i)
            v_slice, k_slice, b_slice = self.layer_slices(i)
            layers.append(
                LstmLayerParams(
                    input_dim=n_input,
                    hidden_dim=hidden,
                    V=flat[v_slice].reshape(4 * hidden, n_input),
                    K=flat[k_slice].reshape(4 * hidden, hidden),
                    b=flat[b_slice].reshape(4 * hidden, 1),
                )
            )
        w_slice, b_slice = self.head_slices()
        head = (
            flat[w_slice].reshape(self.output_dim, self.hidden_dims[-1]),
            flat[b_slice].reshape(self.output_dim, 1),
        )
        return layers, head

    def flatten(
        self, layers: list[LstmLayerParams], head: tuple[Matrix, Matrix]
    ) -> np.ndarray:
        """Inverse of `unflatten`."""
        arrays = [a for layer in layers for a in (layer.V, layer.K, layer.b)]
        arrays.extend(head)
        flat = np.concatenate([np.ravel(a) for a in arrays])
        if flat.shape != (self.size,):
            msg = f"Arrays hold {flat.size} parameters, layout needs {self.size}"
            raise ContractViolationError(msg)
        return flat

    def recurrent_mask(self) -> np.ndarray:
        """Boolean mask that selects the recurrent weights :math:`K` of all layers."""
        mask = np.zeros(self.size, dtype=bool)
        for i in range(self.n_layers):
            _, k_slice, _ = self.layer_slices(i)
            mask[k_slice] = True
        return mask

    def __layer_size(self, layer: int) -> int:
        hidden = self.hidden_dims[layer]
        return 4 * hidden * (self.layer_input_dim(layer) + hidden + 1)


@frozen(eq=False)
class StackedNet:
    """LSTM layers followed by an output head that is shared over the time steps."""

    layout: ParameterLayout
    head_kind: HeadKind
    parameters: np.ndarray = field(repr=False)
    _views: tuple[list[LstmLayerParams], tuple[Matrix, Matrix]] = field(
        init=False, repr=False
    )

    def __attrs_post_init__(self) -> None:
        if self.parameters.shape != (self.layout.size,):
            msg = (
                f"Network with layout {self.layout} needs {self.layout.size}"
                f" parameters, got {self.parameters.shape}"
            )
            raise ContractViolationError(msg)
        if self.head_kind not in {"linear", "softmax"}:
            msg = f"Unknown head kind {self.head_kind!r}"
            raise ContractViolationError(msg)
        object.__setattr__(self, "_views", self.layout.unflatten(self.parameters))

    @property
    def layers(self) -> list[LstmLayerParams]:
        return self._views[0]

    @property
    def head(self) -> tuple[Matrix, Matrix]:
        return self._views[1]

    def with_parameters(self, parameters: np.ndarray) -> StackedNet:
        return attrs.evolve(self, parameters=np.asarray(parameters, dtype=np.float64))


def init_stacked_net(
    input_dim: int,
    hidden_dims: tuple[int, ...] | list[int],
    output_dim: int,
    head_kind: HeadKind,
    rng: SeededRng,
) -> StackedNet:
    """Draw weights uniformly in :math:`\\pm 1/\\sqrt{\\text{fan-in}}`.

    Biases start at zero, except for the forget gate bias, which starts at one.
    """
    layout = ParameterLayout(input_dim, tuple(hidden_dims), output_dim)
    parameters = np.zeros(layout.size)
    layers, (head_w, _) = layout.unflatten(parameters)
    for layer in layers:
        bound = 1.0 / math.sqrt(layer.input_dim + layer.hidden_dim)
        layer.V[:] = rng.generator.uniform(-bound, bound, size=layer.V.shape)
        layer.K[:] = rng.generator.uniform(-bound, bound, size=layer.K.shape)
        layer.b[: layer.hidden_dim] = FORGET_BIAS
    bound = 1.0 / math.sqrt(layout.hidden_dims[-1])
    head_w[:] = rng.generator.uniform(-bound, bound, size=head_w.shape)
    return StackedNet(layout, head_kind, parameters)


@frozen(eq=False)
class ForwardTape:
    """Everything `net_forward` computed that `net_backward` needs."""

    layout: ParameterLayout
    caches: tuple[tuple[CellCache, ...], ...]
    """Cell caches, indexed by layer and then by time step."""
    top_hidden: np.ndarray
    """Hidden states of the last layer, shape :code:`(T, H, B)`."""
    outputs: np.ndarray

    @property
    def sequence_length(self) -> int:
        return len(self.caches[0])


def net_forward(net: StackedNet, inputs: np.ndarray) -> tuple[np.ndarray, ForwardTape]:
    """Run the network over a batch of sequences of shape :code:`(T, I, B)`.

    The output at time :math:`t` only depends on the inputs up to :math:`t`.
    """
    if inputs.ndim != 3 or inputs.shape[1] != net.layout.input_dim:  # noqa: PLR2004
        msg = (
            f"Expected inputs of shape (T, {net.layout.input_dim}, B), got"
            f" {inputs.shape}"
        )
        raise ContractViolationError(msg)
    n_steps, _, batch_size = inputs.shape
    head_w, head_b = net.head
    states = [LstmState.zeros(h, batch_size) for h in net.layout.hidden_dims]
    caches: list[list[CellCache]] = [[] for _ in net.layers]
    top_hidden = np.empty((n_steps, net.layout.hidden_dims[-1], batch_size))
    outputs = np.empty((n_steps, net.layout.output_dim, batch_size))
    for t in range(n_steps):
        w = inputs[t]
        for i, layer in enumerate(net.layers):
            states[i], cache = cell_forward(layer, w, states[i])
            caches[i].append(cache)
            w = states[i].h
        top_hidden[t] = w
        logits = affine(head_w, w, head_b)
        if net.head_kind == "softmax":
            outputs[t] = softmax_columns(logits)
        else:
            outputs[t] = logits
    tape = ForwardTape(
        layout=net.layout,
        caches=tuple(tuple(c) for c in caches),
        top_hidden=top_hidden,
        outputs=outputs,
    )
    return outputs, tape


@frozen(eq=False)
class Gradients:
    parameters: np.ndarray
    """Gradient with respect to the flat parameter vector."""
    inputs: np.ndarray
    """Gradient with respect to the network inputs, shape :code:`(T, I, B)`."""


def net_backward(
    net: StackedNet, tape: ForwardTape, d_outputs: np.ndarray
) -> Gradients:
    """Reverse-accumulate the gradient of a scalar loss through time and layers.

    Args:
        net: The network that produced the tape.
        tape: Output of the matching `net_forward` call.
        d_outputs: Derivative of the loss with respect to each network output. For a
            softmax head, these are derivatives with respect to the probabilities.
    """
    if tape.layout != net.layout:
        msg = "Forward tape was recorded with a network of a different layout"
        raise ContractViolationError(msg)
    if d_outputs.shape != tape.outputs.shape:
        msg = (
            f"Output gradient of shape {d_outputs.shape} does not match outputs of"
            f" shape {tape.outputs.shape}"
        )
        raise ContractViolationError(msg)
    grad = np.zeros(net.layout.size)
    grad_layers, (grad_head_w, grad_head_b) = net.layout.unflatten(grad)
    head_w, _ = net.head
    if net.head_kind == "softmax":
        p = tape.outputs
        d_logits = p * (d_outputs - (p * d_outputs).sum(axis=1, keepdims=True))
    else:
        d_logits = d_outputs
    grad_head_w += np.einsum("tob,thb->oh", d_logits, tape.top_hidden)
    grad_head_b += d_logits.sum(axis=(0, 2))[:, None]
    d_hidden = np.einsum("oh,tob->thb", head_w, d_logits)
    for layer, grad_layer, caches in zip(
        reversed(net.layers), reversed(grad_layers), reversed(tape.caches)
    ):
        d_below = np.empty((len(caches), layer.input_dim, d_hidden.shape[2]))
        dh_next = np.zeros_like(d_hidden[0])
        dC_next = np.zeros_like(d_hidden[0])  # noqa: N806
        for t in reversed(range(len(caches))):
            cell_grad = cell_backward(
                layer, caches[t], dh=d_hidden[t] + dh_next, dC=dC_next
            )
            grad_layer.V[:] += cell_grad.V
            grad_layer.K[:] += cell_grad.K
            grad_layer.b[:] += cell_grad.b
            d_below[t] = cell_grad.w
            dh_next = cell_grad.h_prev
            dC_next = cell_grad.C_prev  # noqa: N806
        d_hidden = d_below
    return Gradients(parameters=grad, inputs=d_hidden)
