"""A single LSTM cell with forget gate and without peepholes.

For every unit :math:`u` of the cell, the pre-activation is
:math:`b^u + K^u h_{t-1} + V^u w_t`. The forget gate :math:`f`, input gate :math:`g`,
and output gate :math:`o` use a sigmoid, the input unit :math:`\\tilde{c}` uses a
hyperbolic tangent, and

.. math::

    C_t = f_t \\odot C_{t-1} + g_t \\odot \\tilde{c}_t, \\qquad
    h_t = o_t \\odot \\tanh(C_t).

The weights of the four units are stored stacked in the order :code:`f, g, o, c`, so
that :math:`V` has shape :math:`4H \\times I`, :math:`K` has shape
:math:`4H \\times H`, and :math:`b` has shape :math:`4H \\times 1`.
"""

from __future__ import annotations

import numpy as np
from attrs import field, frozen

from di_release.errors import ContractViolationError
from di_release.numkit import Matrix, affine, map_elementwise, matmul


@frozen(eq=False)
class LstmLayerParams:
    input_dim: int
    hidden_dim: int
    V: Matrix = field(repr=False)  # noqa: N815
    K: Matrix = field(repr=False)  # noqa: N815
    b: Matrix = field(repr=False)

    def __attrs_post_init__(self) -> None:
        n_rows = 4 * self.hidden_dim
        expected = {
            "V": (n_rows, self.input_dim),
            "K": (n_rows, self.hidden_dim),
            "b": (n_rows, 1),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                msg = f"LSTM parameter {name} has shape {actual}, expected {shape}"
                raise ContractViolationError(msg)


@frozen(eq=False)
class LstmState:
    h: Matrix
    C: Matrix  # noqa: N815

    @classmethod
    def zeros(cls, hidden_dim: int, batch_size: int) -> LstmState:
        return cls(
            h=np.zeros((hidden_dim, batch_size)),
            C=np.zeros((hidden_dim, batch_size)),
        )


@frozen(eq=False)
class CellCache:
    """Values of one forward step that are needed to backpropagate through it."""

    w: Matrix
    prev: LstmState
    f: Matrix
    g: Matrix
    o: Matrix
    c_tilde: Matrix
    tanh_C: Matrix  # noqa: N815


def cell_forward(
    params: LstmLayerParams, w_t: Matrix, prev: LstmState
) -> tuple[LstmState, CellCache]:
    if w_t.shape[0] != params.input_dim:
        msg = f"Cell expects {params.input_dim} input features, got {w_t.shape[0]}"
        raise ContractViolationError(msg)
    if prev.h.shape != (params.hidden_dim, w_t.shape[1]):
        msg = f"Previous hidden state has shape {prev.h.shape}, does not match input"
        raise ContractViolationError(msg)
    hidden = params.hidden_dim
    pre_activation = affine(params.V, w_t, params.b) + matmul(params.K, prev.h)
    gates = map_elementwise(pre_activation[: 3 * hidden], "sigmoid")
    f = gates[:hidden]
    g = gates[hidden : 2 * hidden]
    o = gates[2 * hidden :]
    c_tilde = map_elementwise(pre_activation[3 * hidden :], "tanh")
    C = f * prev.C + g * c_tilde  # noqa: N806
    tanh_C = map_elementwise(C, "tanh")  # noqa: N806
    state = LstmState(h=o * tanh_C, C=C)
    cache = CellCache(w_t, prev, f, g, o, c_tilde, tanh_C)
    return state, cache


@frozen(eq=False)
class CellGradients:
    w: Matrix
    h_prev: Matrix
    C_prev: Matrix  # noqa: N815
    V: Matrix  # noqa: N815
    K: Matrix  # noqa: N815
    b: Matrix


def cell_backward(
    params: LstmLayerParams, cache: CellCache, dh: Matrix, dC: Matrix  # noqa: N803
) -> CellGradients:
    """Backpropagate the gradients of :math:`h_t` and :math:`C_t` through one step."""
    d_o = dh * cache.tanh_C
    dC = dC + dh * cache.o * (1.0 - cache.tanh_C**2)  # noqa: N806
    d_f = dC * cache.prev.C
    d_g = dC * cache.c_tilde
    d_c_tilde = dC * cache.g
    d_pre = np.concatenate([
        d_f * cache.f * (1.0 - cache.f),
        d_g * cache.g * (1.0 - cache.g),
        d_o * cache.o * (1.0 - cache.o),
        d_c_tilde * (1.0 - cache.c_tilde**2),
    ])
    return CellGradients(
        w=params.V.T @ d_pre,
        h_prev=params.K.T @ d_pre,
        C_prev=dC * cache.f,
        V=d_pre @ cache.w.T,
        K=d_pre @ cache.prev.h.T,
        b=d_pre.sum(axis=1, keepdims=True),
    )
