from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np
import pytest

from di_release.data import Normalization, SplitSpec
from di_release.errors import ContractViolationError, DataError
from di_release.neural import StackedNet, net_forward
from di_release.neural.gradcheck import grad_check
from di_release.numkit import SeededRng
from di_release.privmech import (
    Adversary,
    MechanismBundle,
    Releaser,
    ReleaserObjective,
    adversary_loss,
    conditional_entropy_term,
    di_upper_bound,
    distortion,
    draw_inputs,
    peak_distortion_with_grad,
    release,
    releaser_loss,
)

if TYPE_CHECKING:
    from pathlib import Path


@pytest.fixture(scope="module")
def releaser() -> Releaser:
    return Releaser.create(
        observation_dim=1, output_dim=1, hidden_dims=(8, 8), noise_dim=2, rng=SeededRng(0)
    )


@pytest.fixture(scope="module")
def adversary() -> Adversary:
    return Adversary.create(
        release_dim=1, alphabet_size=3, hidden_dims=(6,), rng=SeededRng(1)
    )


def _random_predictions(seed: int, shape: tuple[int, int, int]) -> np.ndarray:
    logits = SeededRng(seed).generator.normal(scale=3, size=shape)
    return np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)


class TestRelease:
    def test_shapes(self, releaser: Releaser):
        w_seq = np.ones((5, 1, 4))
        result = release(releaser, w_seq, SeededRng(0))
        assert result.z.shape == (5, 1, 4)
        assert result.u.shape == (5, 2, 4)
        assert result.inputs.shape == (5, 3, 4)
        assert ((result.u >= 0) & (result.u < 1)).all()

    def test_reproducible(self, releaser: Releaser):
        w_seq = np.ones((5, 1, 2))
        first = release(releaser, w_seq, SeededRng(3)).z
        second = release(releaser, w_seq, SeededRng(3)).z
        np.testing.assert_array_equal(first, second)

    def test_noise_changes_release(self, releaser: Releaser):
        w_seq = np.ones((5, 1, 2))
        first = release(releaser, w_seq, SeededRng(3)).z
        second = release(releaser, w_seq, SeededRng(4)).z
        assert not np.array_equal(first, second)

    def test_deterministic_without_noise(self):
        releaser = Releaser.create(1, 1, (4,), noise_dim=0, rng=SeededRng(0))
        w_seq = np.ones((3, 1, 2))
        first = release(releaser, w_seq, SeededRng(1)).z
        second = release(releaser, w_seq, SeededRng(2)).z
        np.testing.assert_array_equal(first, second)

    def test_wrong_observation_width(self, releaser: Releaser):
        with pytest.raises(ContractViolationError, match="observes 1 features"):
            draw_inputs(releaser, np.ones((5, 2, 4)), SeededRng(0))

    def test_noise_dim_must_fit(self, releaser: Releaser):
        with pytest.raises(ContractViolationError, match="does not fit"):
            Releaser(releaser.net, noise_dim=3)


class TestLosses:
    def test_distortion_zero_iff_equal(self):
        y_seq = SeededRng(0).generator.random((4, 1, 3))
        assert distortion(y_seq, y_seq) == 0.0
        assert distortion(y_seq + 0.1, y_seq) == pytest.approx(0.01)

    def test_distortion_shape_mismatch(self):
        with pytest.raises(ContractViolationError, match="does not match target"):
            distortion(np.zeros((4, 1, 3)), np.zeros((4, 1, 2)))

    def test_peak_distortion_between_mean_and_max(self):
        rng = SeededRng(1).generator
        z_seq, y_seq = rng.random((24, 1, 5)), rng.random((24, 1, 5))
        errors = ((z_seq - y_seq) ** 2)[:, 0, :]
        for temperature in (1.0, 10.0, 100.0):
            value, _ = peak_distortion_with_grad(z_seq, y_seq, temperature)
            assert errors.mean(axis=0).mean() <= value + 1e-12
            assert value <= errors.max(axis=0).mean() + 1e-12

    def test_peak_distortion_zero_at_target(self):
        y_seq = np.ones((6, 1, 2))
        value, grad = peak_distortion_with_grad(y_seq, y_seq)
        assert value == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_array_equal(grad, 0.0)

    def test_adversary_loss_of_uniform_guess(self):
        pred_seq = np.full((4, 3, 2), 1 / 3)
        labels = np.array([[0, 1], [2, 0], [1, 1], [2, 2]])
        assert adversary_loss(pred_seq, labels) == pytest.approx(math.log(3))

    def test_adversary_loss_label_out_of_range(self):
        with pytest.raises(ContractViolationError, match=r"Labels must lie in \[0, 3\)"):
            adversary_loss(np.full((1, 3, 1), 1 / 3), np.array([[3]]))

    def test_entropy_bounds(self):
        for seed in range(20):
            pred_seq = _random_predictions(seed, (6, 4, 3))
            entropy = conditional_entropy_term(pred_seq)
            assert 0 <= entropy <= math.log(4) + 1e-12

    def test_entropy_of_certain_prediction(self):
        pred_seq = np.zeros((3, 2, 1))
        pred_seq[:, 0] = 1.0
        assert conditional_entropy_term(pred_seq) == 0.0

    def test_di_bound_zero_at_uniform(self):
        pred_seq = np.full((24, 4, 3), 0.25)
        assert di_upper_bound(pred_seq, alphabet_size=4) == pytest.approx(0, abs=1e-12)

    def test_di_bound_non_negative(self):
        for seed in range(20):
            pred_seq = _random_predictions(seed, (24, 3, 2))
            bound = di_upper_bound(pred_seq, alphabet_size=3)
            assert 0 <= bound <= 24 * math.log(3) + 1e-9

    def test_releaser_loss_without_privacy_is_distortion(self):
        rng = SeededRng(2).generator
        z_seq, y_seq = rng.random((5, 1, 3)), rng.random((5, 1, 3))
        pred_seq = _random_predictions(3, (5, 2, 3))
        assert releaser_loss(z_seq, y_seq, pred_seq, lam=0.0) == distortion(
            z_seq, y_seq
        )

    def test_negative_lambda(self):
        with pytest.raises(ContractViolationError, match="non-negative"):
            ReleaserObjective(lam=-1.0)


class TestReleaserObjective:
    @pytest.mark.parametrize(
        ("distortion_kind", "privacy_term"),
        [("mse", "entropy"), ("mse", "cross_entropy"), ("peak", "entropy")],
    )
    def test_gradient_through_adversary(
        self,
        releaser: Releaser,
        adversary: Adversary,
        distortion_kind,
        privacy_term,
    ):
        rng = SeededRng(5)
        w_seq = rng.generator.random((5, 1, 3))
        inputs = draw_inputs(releaser, w_seq, rng)
        y_seq = w_seq + 0.1
        x_seq = rng.generator.integers(0, 3, size=(5, 3))
        objective = ReleaserObjective(
            lam=2.0,
            distortion=distortion_kind,
            privacy_term=privacy_term,
            peak_temperature=5.0,
        )

        def loss_fn(net: StackedNet) -> tuple[float, np.ndarray]:
            value = objective.evaluate(
                Releaser(net, releaser.noise_dim), adversary, inputs, y_seq, x_seq
            )
            return value.loss, value.gradient

        assert releaser.net.layout.size >= 200
        assert grad_check(releaser.net, loss_fn, n_samples=200) < 1e-4

    def test_lambda_zero_equals_distortion(
        self, releaser: Releaser, adversary: Adversary
    ):
        rng = SeededRng(6)
        w_seq = rng.generator.random((4, 1, 2))
        inputs = draw_inputs(releaser, w_seq, rng)
        x_seq = np.zeros((4, 2), dtype=int)
        value = ReleaserObjective(lam=0.0).evaluate(
            releaser, adversary, inputs, w_seq, x_seq
        )
        z_seq, _ = net_forward(releaser.net, inputs)
        assert value.loss == distortion(z_seq, w_seq)
        assert value.loss == value.distortion

    def test_privacy_term_reported(self, releaser: Releaser, adversary: Adversary):
        rng = SeededRng(7)
        w_seq = rng.generator.random((4, 1, 2))
        inputs = draw_inputs(releaser, w_seq, rng)
        value = ReleaserObjective(lam=1.0).evaluate(
            releaser, adversary, inputs, w_seq, np.zeros((4, 2), dtype=int)
        )
        assert value.privacy == pytest.approx(
            conditional_entropy_term(value.predictions)
        )
        assert value.loss == pytest.approx(value.distortion - value.privacy)


class TestMechanismBundle:
    def test_save_and_load(self, releaser: Releaser, tmp_path: Path):
        bundle = MechanismBundle(
            releaser=releaser,
            normalization=Normalization(minimum=0.1, maximum=2.5),
            alphabet_size=2,
            sequence_length=24,
            split=SplitSpec(train_ratio=0.8, seed=3),
            dataset_fingerprint="ab" * 32,
        )
        path = tmp_path / "bundle.npz"
        bundle.save(path)
        loaded = MechanismBundle.load(path)
        assert loaded.normalization == bundle.normalization
        assert loaded.alphabet_size == 2
        assert loaded.sequence_length == 24
        assert loaded.observe_labels is False
        assert loaded.split == SplitSpec(train_ratio=0.8, seed=3)
        assert loaded.dataset_fingerprint == "ab" * 32
        assert loaded.releaser.noise_dim == releaser.noise_dim
        w_seq = np.ones((3, 1, 2))
        np.testing.assert_array_equal(
            release(loaded.releaser, w_seq, SeededRng(0)).z,
            release(releaser, w_seq, SeededRng(0)).z,
        )

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(DataError, match="does not exist"):
            MechanismBundle.load(tmp_path / "missing.npz")

    def test_not_a_bundle(self, releaser: Releaser, tmp_path: Path):
        path = tmp_path / "net.npz"
        np.savez(path, parameters=releaser.net.parameters)
        with pytest.raises(DataError, match="not a mechanism bundle"):
            MechanismBundle.load(path)
