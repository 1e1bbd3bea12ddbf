"""Post-hoc attacker against a frozen releaser, and the evaluation of a release.

The attacker is trained from scratch in the worst case for the releaser: it has
access to all training data of the releaser and sees a fresh release of it in every
epoch, as if it observed many releases of the same households.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

from attrs import frozen

from di_release.data import minibatches
from di_release.errors import ContractViolationError, DivergenceError, DomainError
from di_release.harness.metrics import (
    balanced_accuracy,
    nrmse,
    predicted_labels,
    sequence_accuracy,
)
from di_release.numkit import SeededRng, child_seed
from di_release.optim import RmsPropState, clip_gradients, rmsprop_step
from di_release.privmech import (
    Attacker,
    adversary_loss,
    adversary_step_gradient,
    di_upper_bound,
    release,
)

if TYPE_CHECKING:
    from di_release.data import Dataset
    from di_release.harness.config import TrainConfig
    from di_release.privmech import Releaser

_LOGGER = logging.getLogger(__name__)

_INIT = 0
_EPOCH = 1
_VALIDATION = 2
_HOLDOUT = 3


def train_attacker(
    releaser: Releaser,
    train: Dataset,
    attacker_config: TrainConfig,
    val: Dataset | None = None,
) -> Attacker:
    """Train an attacker on releases of the training set by the frozen releaser.

    Each epoch releases the whole training set with fresh noise. Training stops when
    the validation cross-entropy has not improved for :code:`attacker_patience`
    epochs; the best parameters are returned. Without a validation set, ten percent
    of the training set is held out for early stopping.
    """
    config = attacker_config
    if val is None:
        order = SeededRng(child_seed(config.seed, _HOLDOUT)).generator.permutation(
            len(train)
        )
        n_holdout = max(1, len(train) // 10)
        train, val = train.subset(order[n_holdout:]), train.subset(order[:n_holdout])
    if len(train) == 0 or len(val) == 0:
        msg = "The attacker needs non-empty training and validation sets"
        raise ContractViolationError(msg)
    attacker = Attacker.create(
        release_dim=releaser.output_dim,
        alphabet_size=train.alphabet_size,
        hidden_dims=config.attacker.hidden_dims,
        rng=SeededRng(child_seed(config.seed, _INIT)),
    )
    state = RmsPropState.zeros(
        attacker.net.layout.size,
        decay=config.rmsprop_decay,
        learning_rate=config.attacker_lr,
    )
    val_batch = val.stack()
    val_z = release(
        releaser,
        val_batch.observations(val.alphabet_size, config.observe_labels),
        SeededRng(child_seed(config.seed, _VALIDATION)),
    ).z
    best_loss, best_attacker, stale_epochs = math.inf, attacker, 0
    for epoch in range(config.attacker_epochs):
        epoch_seed = child_seed(config.seed, _EPOCH, epoch)
        noise_rng = SeededRng(epoch_seed)
        try:
            for batch in minibatches(train, config.batch_size, epoch_seed):
                w_seq = batch.observations(train.alphabet_size, config.observe_labels)
                z_seq = release(releaser, w_seq, noise_rng).z
                loss, grad = adversary_step_gradient(attacker, z_seq, batch.x)
                if not math.isfinite(loss):
                    msg = f"Attacker loss became {loss} in epoch {epoch}"
                    raise DivergenceError(msg)
                grad = clip_gradients(grad, config.clip_value, config.clip_mode)
                parameters, state = rmsprop_step(state, attacker.net.parameters, grad)
                attacker = Attacker(attacker.net.with_parameters(parameters))
            val_loss = adversary_loss(attacker.predict(val_z), val_batch.x)
        except DomainError as exc:
            msg = f"Attacker training diverged in epoch {epoch}: {exc}"
            raise DivergenceError(msg) from exc
        _LOGGER.debug("Attacker epoch %d: validation loss %.4f", epoch + 1, val_loss)
        if val_loss < best_loss:
            best_loss, best_attacker, stale_epochs = val_loss, attacker, 0
        else:
            stale_epochs += 1
            if stale_epochs >= config.attacker_patience:
                _LOGGER.info("Attacker stopped early after %d epochs", epoch + 1)
                break
    _LOGGER.info("Attacker validation cross-entropy %.4f", best_loss)
    return best_attacker


@frozen
class Evaluation:
    """Utility and privacy of a releaser on a test set."""

    nrmse: float
    balanced_accuracy_pct: float
    """Attacker balanced accuracy over all time steps."""
    sequence_accuracy_pct: float
    """Attacker balanced accuracy of the majority vote per sequence."""
    di_bound_mean: float
    """Upper bound of the directed information under the attacker, per sequence."""
    n_sequences: int


def evaluate(
    releaser: Releaser,
    attacker: Attacker,
    test: Dataset,
    seed: int = 0,
    observe_labels: bool = False,
) -> Evaluation:
    """Release the test set once and measure distortion and attacker accuracy."""
    if len(test) == 0:
        msg = "Cannot evaluate on an empty test set"
        raise ContractViolationError(msg)
    batch = test.stack()
    w_seq = batch.observations(test.alphabet_size, observe_labels)
    z_seq = release(releaser, w_seq, SeededRng(seed)).z
    probabilities = attacker.predict(z_seq)
    labels = predicted_labels(probabilities)
    return Evaluation(
        nrmse=nrmse(batch.y, z_seq),
        balanced_accuracy_pct=balanced_accuracy(labels, batch.x, test.alphabet_size),
        sequence_accuracy_pct=sequence_accuracy(labels, batch.x, test.alphabet_size),
        di_bound_mean=di_upper_bound(probabilities, test.alphabet_size),
        n_sequences=len(test),
    )


def check_disjoint(train: Dataset, test: Dataset) -> None:
    """Assert that no test sequence was used for training."""
    overlap = {s.key for s in train.samples} & {s.key for s in test.samples}
    if overlap:
        msg = f"{len(overlap)} test sequences also occur in the training set"
        raise ContractViolationError(msg)

