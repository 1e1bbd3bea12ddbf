from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from di_release.errors import ContractViolationError
from di_release.optim import (
    RmsPropState,
    clip_gradients,
    recurrent_l2_gradient,
    recurrent_l2_penalty,
    rmsprop_step,
)

if TYPE_CHECKING:
    from di_release.neural import StackedNet


class TestClipGradients:
    @pytest.mark.parametrize("mode", ["value", "norm"])
    def test_idempotent(self, mode):
        grads = np.array([3.0, -0.2, 0.7, -5.0])
        once = clip_gradients(grads, 1.0, mode)
        np.testing.assert_allclose(clip_gradients(once, 1.0, mode), once)

    def test_value_mode_bounds_entries(self):
        clipped = clip_gradients(np.linspace(-4, 4, 9), 1.5)
        assert np.abs(clipped).max() == 1.5

    def test_norm_mode_keeps_direction(self):
        grads = np.array([3.0, 4.0])
        np.testing.assert_allclose(clip_gradients(grads, 1.0, "norm"), [0.6, 0.8])

    def test_invalid_clip_value(self):
        with pytest.raises(ContractViolationError, match="must be positive"):
            clip_gradients(np.ones(2), 0.0)


class TestRmsProp:
    def test_first_step(self):
        state = RmsPropState.zeros(2, decay=0.9, learning_rate=0.1)
        params, state = rmsprop_step(state, np.zeros(2), np.array([1.0, -2.0]))
        np.testing.assert_allclose(state.accumulator, [0.1, 0.4])
        expected = -0.1 * np.array([1.0, -2.0]) / np.sqrt([0.1 + 1e-8, 0.4 + 1e-8])
        np.testing.assert_allclose(params, expected)

    def test_zero_gradient_keeps_parameters(self):
        state = RmsPropState.zeros(3)
        params = np.array([1.0, 2.0, 3.0])
        new_params, _ = rmsprop_step(state, params, np.zeros(3))
        np.testing.assert_array_equal(new_params, params)

    def test_constant_gradient_steps_by_learning_rate(self):
        gradient = np.array([2.0, -0.5, 1e-2])
        state = RmsPropState.zeros(3, learning_rate=0.01)
        params = np.zeros(3)
        for _ in range(300):
            previous = params
            params, state = rmsprop_step(state, params, gradient)
        np.testing.assert_allclose(state.accumulator, gradient**2, rtol=1e-12)
        np.testing.assert_allclose(
            previous - params, 0.01 * np.sign(gradient), rtol=1e-4
        )

    def test_zero_learning_rate(self):
        state = RmsPropState.zeros(2, learning_rate=0.0)
        params = np.array([0.3, -1.2])
        new_params, new_state = rmsprop_step(state, params, np.array([5.0, -4.0]))
        np.testing.assert_array_equal(new_params, params)
        np.testing.assert_allclose(new_state.accumulator, [2.5, 1.6])

    def test_state_is_not_mutated(self):
        state = RmsPropState.zeros(2)
        rmsprop_step(state, np.zeros(2), np.ones(2))
        np.testing.assert_array_equal(state.accumulator, 0.0)

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolationError, match="do not agree"):
            rmsprop_step(RmsPropState.zeros(2), np.zeros(3), np.zeros(3))

    @pytest.mark.parametrize("decay", [0.0, 1.0])
    def test_invalid_decay(self, decay: float):
        with pytest.raises(ContractViolationError, match="decay"):
            RmsPropState.zeros(2, decay=decay)


class TestRecurrentRegularization:
    def test_only_recurrent_weights(self, small_net: StackedNet):
        gradient = recurrent_l2_gradient(small_net, beta=0.5)
        mask = small_net.layout.recurrent_mask()
        np.testing.assert_array_equal(gradient[~mask], 0.0)
        np.testing.assert_allclose(gradient[mask], small_net.parameters[mask])

    def test_penalty_matches_gradient(self, small_net: StackedNet):
        beta = 1.5
        direction = np.zeros(small_net.layout.size)
        index = int(np.flatnonzero(small_net.layout.recurrent_mask())[3])
        direction[index] = 1e-6
        shifted = small_net.with_parameters(small_net.parameters + direction)
        numeric = (
            recurrent_l2_penalty(shifted, beta) - recurrent_l2_penalty(small_net, beta)
        ) / 1e-6
        analytic = recurrent_l2_gradient(small_net, beta)[index]
        assert numeric == pytest.approx(analytic, abs=1e-5)

    def test_zero_weight(self, small_net: StackedNet):
        assert recurrent_l2_penalty(small_net, 0.0) == 0.0
        np.testing.assert_array_equal(recurrent_l2_gradient(small_net, 0.0), 0.0)

    def test_negative_weight(self, small_net: StackedNet):
        with pytest.raises(ContractViolationError, match="non-negative"):
            recurrent_l2_gradient(small_net, -1.0)
