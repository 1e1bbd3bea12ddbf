from __future__ import annotations

import math

import numpy as np
import pytest

from di_release.errors import ContractViolationError
from di_release.neural.lstm import (
    LstmLayerParams,
    LstmState,
    cell_backward,
    cell_forward,
)
from di_release.numkit import SeededRng


def _params(
    input_dim: int, hidden_dim: int, scale: float = 0.0, seed: int = 0
) -> LstmLayerParams:
    rng = SeededRng(seed).generator
    n_rows = 4 * hidden_dim
    return LstmLayerParams(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        V=scale * rng.normal(size=(n_rows, input_dim)),
        K=scale * rng.normal(size=(n_rows, hidden_dim)),
        b=scale * rng.normal(size=(n_rows, 1)),
    )


def _state(hidden_dim: int, batch_size: int, seed: int) -> LstmState:
    rng = SeededRng(seed).generator
    return LstmState(
        h=rng.uniform(-1, 1, size=(hidden_dim, batch_size)),
        C=rng.uniform(-1, 1, size=(hidden_dim, batch_size)),
    )


def _sigmoid(value: float) -> float:
    return 1.0 / (1.0 + math.exp(-value))


class TestCellForward:
    def test_zero_parameters(self):
        prev = _state(3, 4, seed=1)
        w_t = SeededRng(2).generator.normal(size=(2, 4))
        state, cache = cell_forward(_params(2, 3), w_t, prev)
        for gate in (cache.f, cache.g, cache.o):
            np.testing.assert_array_equal(gate, 0.5)
        np.testing.assert_array_equal(cache.c_tilde, 0.0)
        np.testing.assert_allclose(state.C, 0.5 * prev.C, rtol=1e-15)
        np.testing.assert_allclose(state.h, 0.5 * np.tanh(0.5 * prev.C), rtol=1e-15)

    def test_saturated_gates_keep_memory(self):
        hidden = 3
        params = _params(2, hidden)
        params.b[:hidden] = 30.0
        params.b[hidden : 2 * hidden] = -30.0
        params.b[3 * hidden :] = SeededRng(3).generator.normal(size=(hidden, 1))
        prev = _state(hidden, 5, seed=4)
        w_t = SeededRng(5).generator.normal(size=(2, 5))
        state, _ = cell_forward(params, w_t, prev)
        np.testing.assert_allclose(state.C, prev.C, rtol=0, atol=1e-12)

    def test_matches_scalar_formulas(self):
        input_dim, hidden, batch_size = 2, 3, 2
        params = _params(input_dim, hidden, scale=0.7, seed=6)
        prev = _state(hidden, batch_size, seed=7)
        w_t = SeededRng(8).generator.normal(size=(input_dim, batch_size))
        state, _ = cell_forward(params, w_t, prev)

        def pre_activation(row: int, j: int) -> float:
            value = params.b[row, 0]
            for k in range(hidden):
                value += params.K[row, k] * prev.h[k, j]
            for k in range(input_dim):
                value += params.V[row, k] * w_t[k, j]
            return value

        for u in range(hidden):
            for j in range(batch_size):
                f = _sigmoid(pre_activation(u, j))
                g = _sigmoid(pre_activation(hidden + u, j))
                o = _sigmoid(pre_activation(2 * hidden + u, j))
                c_tilde = math.tanh(pre_activation(3 * hidden + u, j))
                cell = f * prev.C[u, j] + g * c_tilde
                assert state.C[u, j] == pytest.approx(cell, rel=1e-12, abs=1e-12)
                assert state.h[u, j] == pytest.approx(
                    o * math.tanh(cell), rel=1e-12, abs=1e-12
                )

    def test_wrong_input_width(self):
        with pytest.raises(ContractViolationError, match="expects 2 input features"):
            cell_forward(_params(2, 3), np.zeros((3, 1)), LstmState.zeros(3, 1))

    def test_wrong_state_shape(self):
        with pytest.raises(ContractViolationError, match="Previous hidden state"):
            cell_forward(_params(2, 3), np.zeros((2, 2)), LstmState.zeros(3, 1))

    def test_parameter_shapes(self):
        with pytest.raises(ContractViolationError, match="parameter K has shape"):
            LstmLayerParams(
                input_dim=2,
                hidden_dim=3,
                V=np.zeros((12, 2)),
                K=np.zeros((12, 2)),
                b=np.zeros((12, 1)),
            )


class TestCellBackward:
    def test_matches_finite_differences(self):
        params = _params(2, 3, scale=0.5, seed=9)
        prev = _state(3, 2, seed=10)
        w_t = SeededRng(11).generator.normal(size=(2, 2))
        rng = SeededRng(12).generator
        weight_h = rng.normal(size=(3, 2))
        weight_C = rng.normal(size=(3, 2))  # noqa: N806

        def loss(w: np.ndarray, previous: LstmState) -> float:
            state, _ = cell_forward(params, w, previous)
            return float(np.sum(weight_h * state.h) + np.sum(weight_C * state.C))

        _, cache = cell_forward(params, w_t, prev)
        gradients = cell_backward(params, cache, dh=weight_h, dC=weight_C)
        epsilon = 1e-6
        for index in [(0, 0), (1, 1)]:
            shifted = w_t.copy()
            shifted[index] += epsilon
            loss_plus = loss(shifted, prev)
            shifted[index] -= 2 * epsilon
            numeric = (loss_plus - loss(shifted, prev)) / (2 * epsilon)
            assert gradients.w[index] == pytest.approx(numeric, rel=1e-6, abs=1e-9)
        for index in [(0, 1), (2, 0)]:
            shifted_C = prev.C.copy()  # noqa: N806
            shifted_C[index] += epsilon
            loss_plus = loss(w_t, LstmState(h=prev.h, C=shifted_C))
            shifted_C[index] -= 2 * epsilon
            numeric = (loss_plus - loss(w_t, LstmState(h=prev.h, C=shifted_C))) / (
                2 * epsilon
            )
            expected = pytest.approx(numeric, rel=1e-6, abs=1e-9)
            assert gradients.C_prev[index] == expected
