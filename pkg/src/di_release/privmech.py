"""The privacy mechanism: releaser, adversary, attacker, and their losses.

The releaser maps the observations :math:`w^t` plus seed noise :math:`u^t \\sim
U[0, 1)^m` to the release :math:`z_t`. The adversary and the attacker estimate
:math:`p_{\\hat{X}_t|Z^t}` with a softmax head. The releaser minimizes

.. math::

    \\mathcal{D}(Z^T, Y^T) - \\frac{\\lambda}{T}\\sum_{t=1}^T H(\\hat{X}_t|Z^t),

which penalizes an upper bound of the directed information
:math:`T\\log|\\mathcal{X}| - \\sum_t H(\\hat{X}_t|Z^t)`. All logarithms are natural.

Every loss comes in two flavours: the value, and the value together with its gradient
with respect to the network outputs, which is what :func:`.net_backward` consumes.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import TYPE_CHECKING, Literal

import attrs
import numpy as np
import yaml
from attrs import field, frozen
from scipy.special import logsumexp, softmax

from di_release.data import Normalization, SplitSpec
from di_release.errors import ContractViolationError, DataError
from di_release.neural import StackedNet, init_stacked_net, net_backward, net_forward
from di_release.neural.serialization import net_from_arrays, net_to_arrays

if TYPE_CHECKING:
    from di_release.numkit import SeededRng

LOG_FLOOR = 1e-12
"""Probabilities are floored to this value inside logarithms."""

DistortionKind = Literal["mse", "peak"]
PrivacyTerm = Literal["entropy", "cross_entropy"]


@frozen(eq=False)
class Releaser:
    net: StackedNet
    noise_dim: int = field()

    @noise_dim.validator
    def _check_noise_dim(self, _: object, value: int) -> None:
        if value < 0 or value >= self.net.layout.input_dim:
            msg = f"Noise dimension {value} does not fit the releaser input"
            raise ContractViolationError(msg)

    @property
    def observation_dim(self) -> int:
        return self.net.layout.input_dim - self.noise_dim

    @property
    def output_dim(self) -> int:
        return self.net.layout.output_dim

    @classmethod
    def create(
        cls,
        observation_dim: int,
        output_dim: int,
        hidden_dims: tuple[int, ...],
        noise_dim: int,
        rng: SeededRng,
    ) -> Releaser:
        net = init_stacked_net(
            observation_dim + noise_dim, hidden_dims, output_dim, "linear", rng
        )
        return cls(net, noise_dim)


@frozen(eq=False)
class Adversary:
    """Estimates the sensitive label at every time step from the release."""

    net: StackedNet = field()

    @net.validator
    def _check_head(self, _: object, net: StackedNet) -> None:
        if net.head_kind != "softmax":
            msg = "An adversary needs a softmax head"
            raise ContractViolationError(msg)

    @property
    def alphabet_size(self) -> int:
        return self.net.layout.output_dim

    @classmethod
    def create(
        cls,
        release_dim: int,
        alphabet_size: int,
        hidden_dims: tuple[int, ...],
        rng: SeededRng,
    ) -> Adversary:
        net = init_stacked_net(release_dim, hidden_dims, alphabet_size, "softmax", rng)
        return cls(net)

    def predict(self, z_seq: np.ndarray) -> np.ndarray:
        """Probabilities of shape :code:`(T, |X|, B)`."""
        probabilities, _ = net_forward(self.net, z_seq)
        return probabilities


class Attacker(Adversary):
    """Post-hoc adversary, trained from scratch against a frozen releaser."""


@frozen(eq=False)
class ReleaseResult:
    z: np.ndarray
    u: np.ndarray
    inputs: np.ndarray
    """Concatenation of observations and noise, as fed to the releaser network."""


def draw_inputs(releaser: Releaser, w_seq: np.ndarray, rng: SeededRng) -> np.ndarray:
    """Append fresh seed noise to observation sequences of shape :code:`(T, dim(w), B)`."""
    if w_seq.ndim != 3 or w_seq.shape[1] != releaser.observation_dim:  # noqa: PLR2004
        msg = (
            f"Releaser observes {releaser.observation_dim} features per step, got"
            f" array of shape {w_seq.shape}"
        )
        raise ContractViolationError(msg)
    n_steps, _, batch_size = w_seq.shape
    u_seq = np.stack([
        rng.draw_uniform(releaser.noise_dim, batch_size) for _ in range(n_steps)
    ])
    return np.concatenate([w_seq, u_seq], axis=1)


def release(releaser: Releaser, w_seq: np.ndarray, rng: SeededRng) -> ReleaseResult:
    """Release a batch of observation sequences of shape :code:`(T, dim(w), B)`."""
    inputs = draw_inputs(releaser, w_seq, rng)
    z_seq, _ = net_forward(releaser.net, inputs)
    return ReleaseResult(z=z_seq, u=inputs[:, releaser.observation_dim :], inputs=inputs)


def distortion(z_seq: np.ndarray, y_seq: np.ndarray) -> float:
    """Normalized squared error :math:`\\frac{1}{T}\\sum_t (z_t - y_t)^2`, batch-averaged.

    >>> z = np.array([1.0, 3.0]).reshape(2, 1, 1)
    >>> distortion(z, np.zeros_like(z))
    5.0
    """
    value, _ = distortion_with_grad(z_seq, y_seq)
    return value


def distortion_with_grad(
    z_seq: np.ndarray, y_seq: np.ndarray
) -> tuple[float, np.ndarray]:
    _check_same_shape(z_seq, y_seq)
    n_steps, _, batch_size = z_seq.shape
    residual = z_seq - y_seq
    value = float(np.sum(residual**2)) / (n_steps * batch_size)
    return value, 2.0 * residual / (n_steps * batch_size)


def peak_distortion_with_grad(
    z_seq: np.ndarray, y_seq: np.ndarray, temperature: float = 10.0
) -> tuple[float, np.ndarray]:
    """Smooth maximum over time of the squared error, batch-averaged.

    The maximum is approximated by :math:`\\frac{1}{\\tau}\\log\\frac{1}{T}\\sum_t
    e^{\\tau e_t}` with :math:`e_t = \\|z_t - y_t\\|^2`, which tends to
    :math:`\\max_t e_t` as :math:`\\tau` grows and is zero when :math:`z = y`.
    """
    _check_same_shape(z_seq, y_seq)
    if temperature <= 0:
        msg = f"Temperature must be positive, got {temperature}"
        raise ContractViolationError(msg)
    n_steps, _, batch_size = z_seq.shape
    residual = z_seq - y_seq
    scaled = temperature * np.sum(residual**2, axis=1)
    per_sequence = (logsumexp(scaled, axis=0) - math.log(n_steps)) / temperature
    value = float(per_sequence.mean())
    weights = softmax(scaled, axis=0)
    grad = 2.0 * residual * weights[:, None, :] / batch_size
    return value, grad


def adversary_loss(pred_seq: np.ndarray, x_seq: np.ndarray) -> float:
    """Cross-entropy :math:`\\frac{1}{T}\\sum_t -\\log\\hat{p}_t(x_t)`, batch-averaged.

    Args:
        pred_seq: Predicted distributions of shape :code:`(T, |X|, B)`.
        x_seq: Integer labels of shape :code:`(T, B)`.
    """
    value, _ = adversary_loss_with_grad(pred_seq, x_seq)
    return value


def adversary_loss_with_grad(
    pred_seq: np.ndarray, x_seq: np.ndarray
) -> tuple[float, np.ndarray]:
    n_steps, alphabet_size, batch_size = pred_seq.shape
    if x_seq.shape != (n_steps, batch_size):
        msg = f"Labels of shape {x_seq.shape} do not match predictions {pred_seq.shape}"
        raise ContractViolationError(msg)
    if x_seq.min() < 0 or x_seq.max() >= alphabet_size:
        msg = f"Labels must lie in [0, {alphabet_size})"
        raise ContractViolationError(msg)
    steps, batch = np.meshgrid(np.arange(n_steps), np.arange(batch_size), indexing="ij")
    p_true = pred_seq[steps, x_seq, batch]
    floored = np.maximum(p_true, LOG_FLOOR)
    n = n_steps * batch_size
    value = float(-np.sum(np.log(floored))) / n
    grad = np.zeros_like(pred_seq)
    grad[steps, x_seq, batch] = np.where(p_true > LOG_FLOOR, -1.0 / (n * floored), 0.0)
    return value, grad


def conditional_entropy_term(pred_seq: np.ndarray) -> float:
    """Mean Shannon entropy :math:`\\frac{1}{T}\\sum_t H(\\hat{p}_t)`, batch-averaged.

    >>> p = np.array([0.25, 0.75]).reshape(1, 2, 1)
    >>> round(conditional_entropy_term(p), 4)
    0.5623
    """
    value, _ = conditional_entropy_with_grad(pred_seq)
    return value


def conditional_entropy_with_grad(pred_seq: np.ndarray) -> tuple[float, np.ndarray]:
    n_steps, _, batch_size = pred_seq.shape
    n = n_steps * batch_size
    log_p = np.log(np.maximum(pred_seq, LOG_FLOOR))
    value = float(-np.sum(pred_seq * log_p)) / n
    grad = np.where(pred_seq > LOG_FLOOR, -(log_p + 1.0), -log_p) / n
    return value, grad


def releaser_loss(
    z_seq: np.ndarray, y_seq: np.ndarray, pred_seq: np.ndarray, lam: float
) -> float:
    """Distortion minus :math:`\\lambda` times the conditional entropy term.

    For :math:`\\lambda = 0` this is exactly the distortion.
    """
    _check_lambda(lam)
    value = distortion(z_seq, y_seq)
    if lam == 0:
        return value
    return value - lam * conditional_entropy_term(pred_seq)


def di_upper_bound(pred_seq: np.ndarray, alphabet_size: int) -> float:
    """Upper bound :math:`T\\log|\\mathcal{X}| - \\sum_t H(\\hat{p}_t)`, batch-averaged.

    >>> p = np.tile(np.array([1.0, 0.0]).reshape(1, 2, 1), (24, 1, 1))
    >>> round(di_upper_bound(p, alphabet_size=2), 3)
    16.636
    """
    n_steps = pred_seq.shape[0]
    entropy_sum = n_steps * conditional_entropy_term(pred_seq)
    return n_steps * math.log(alphabet_size) - entropy_sum


@frozen(eq=False)
class ReleaserObjective:
    """Releaser loss with all its variants, evaluated through a frozen adversary."""

    lam: float = field()
    distortion: DistortionKind = "mse"
    privacy_term: PrivacyTerm = "entropy"
    peak_temperature: float = 10.0

    @lam.validator
    def _check_lam(self, _: object, value: float) -> None:
        _check_lambda(value)

    def evaluate(
        self,
        releaser: Releaser,
        adversary: Adversary,
        inputs: np.ndarray,
        y_seq: np.ndarray,
        x_seq: np.ndarray,
    ) -> ObjectiveValue:
        """Compute the loss and its gradient with respect to the releaser parameters.

        The gradient of the privacy term flows back through the adversary network,
        whose parameters are held fixed.
        """
        z_seq, releaser_tape = net_forward(releaser.net, inputs)
        if self.distortion == "peak":
            dist, d_z = peak_distortion_with_grad(z_seq, y_seq, self.peak_temperature)
        else:
            dist, d_z = distortion_with_grad(z_seq, y_seq)
        pred_seq, adversary_tape = net_forward(adversary.net, z_seq)
        if self.privacy_term == "cross_entropy":
            privacy, d_pred = adversary_loss_with_grad(pred_seq, x_seq)
        else:
            privacy, d_pred = conditional_entropy_with_grad(pred_seq)
        if self.lam != 0:
            through_adversary = net_backward(
                adversary.net, adversary_tape, -self.lam * d_pred
            )
            d_z = d_z + through_adversary.inputs
        gradients = net_backward(releaser.net, releaser_tape, d_z)
        return ObjectiveValue(
            loss=dist - self.lam * privacy if self.lam != 0 else dist,
            distortion=dist,
            privacy=privacy,
            gradient=gradients.parameters,
            z=z_seq,
            predictions=pred_seq,
        )


@frozen(eq=False)
class ObjectiveValue:
    loss: float
    distortion: float
    privacy: float
    gradient: np.ndarray
    z: np.ndarray
    predictions: np.ndarray


def adversary_step_gradient(
    adversary: Adversary, z_seq: np.ndarray, x_seq: np.ndarray
) -> tuple[float, np.ndarray]:
    """Cross-entropy of the adversary and its gradient with respect to its parameters."""
    pred_seq, tape = net_forward(adversary.net, z_seq)
    loss, d_pred = adversary_loss_with_grad(pred_seq, x_seq)
    gradients = net_backward(adversary.net, tape, d_pred)
    return loss, gradients.parameters


@frozen(eq=False)
class MechanismBundle:
    """A trained releaser with everything needed to apply it to new data."""

    releaser: Releaser
    normalization: Normalization
    alphabet_size: int
    sequence_length: int
    observe_labels: bool = False
    split: SplitSpec | None = None
    """Split of the dataset that the releaser was trained on."""
    dataset_fingerprint: str | None = None
    """Digest of the raw dataset that was split, see `.Dataset.fingerprint`."""

    def save(self, path: Path | str) -> None:
        metadata = {
            "noise_dim": self.releaser.noise_dim,
            "normalization": {
                "minimum": self.normalization.minimum,
                "maximum": self.normalization.maximum,
            },
            "alphabet_size": self.alphabet_size,
            "sequence_length": self.sequence_length,
            "observe_labels": self.observe_labels,
            "split": None if self.split is None else attrs.asdict(self.split),
            "dataset_fingerprint": self.dataset_fingerprint,
        }
        arrays = net_to_arrays(self.releaser.net, prefix="releaser/")
        arrays["metadata"] = np.array(yaml.safe_dump(metadata, sort_keys=False))
        with open(path, "wb") as stream:
            np.savez(stream, **arrays)

    @classmethod
    def load(cls, path: Path | str) -> MechanismBundle:
        if not Path(path).is_file():
            msg = f"Mechanism bundle {path} does not exist"
            raise DataError(msg)
        with np.load(path, allow_pickle=False) as archive:
            if "metadata" not in archive:
                msg = f"{path} is not a mechanism bundle"
                raise DataError(msg)
            metadata = yaml.safe_load(str(archive["metadata"]))
            net = net_from_arrays(archive, prefix="releaser/")
        split = metadata.get("split")
        return cls(
            releaser=Releaser(net, noise_dim=int(metadata["noise_dim"])),
            normalization=Normalization(**metadata["normalization"]),
            alphabet_size=int(metadata["alphabet_size"]),
            sequence_length=int(metadata["sequence_length"]),
            observe_labels=bool(metadata["observe_labels"]),
            split=None if split is None else SplitSpec(**split),
            dataset_fingerprint=metadata.get("dataset_fingerprint"),
        )


def _check_same_shape(z_seq: np.ndarray, y_seq: np.ndarray) -> None:
    if z_seq.shape != y_seq.shape:
        msg = f"Release of shape {z_seq.shape} does not match target {y_seq.shape}"
        raise ContractViolationError(msg)


def _check_lambda(lam: float) -> None:
    if lam < 0:
        msg = f"Privacy weight lambda must be non-negative, got {lam}"
        raise ContractViolationError(msg)
