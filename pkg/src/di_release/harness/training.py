"""Alternating adversarial training of the releaser and the adversary.

Every iteration applies :math:`k` updates to the adversary, which learns to predict
the sensitive labels from releases of the current releaser, followed by one update of
the releaser against the frozen adversary. Both use clipped gradients and RMSprop;
the releaser loss additionally contains a Ridge penalty on its recurrent weights.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
from attrs import Factory, asdict, define, frozen

from di_release.data import minibatches
from di_release.errors import ContractViolationError, DivergenceError, DomainError
from di_release.harness.metrics import nrmse
from di_release.numkit import SeededRng, child_seed
from di_release.optim import (
    RmsPropState,
    clip_gradients,
    recurrent_l2_gradient,
    recurrent_l2_penalty,
    rmsprop_step,
)
from di_release.privmech import (
    Adversary,
    Releaser,
    ReleaserObjective,
    adversary_step_gradient,
    conditional_entropy_term,
    di_upper_bound,
    draw_inputs,
    release,
)

if TYPE_CHECKING:
    from collections.abc import Iterator
    from pathlib import Path

    from di_release.data import Batch, Dataset
    from di_release.harness.config import TrainConfig

_LOGGER = logging.getLogger(__name__)

_RELEASER_INIT = 0
_ADVERSARY_INIT = 1
_NOISE = 2
_BATCHES = 3
_VALIDATION = 4


@frozen
class IterationRecord:
    epoch: int
    iteration: int
    adversary_loss: float
    """Mean cross-entropy of the :math:`k` adversary updates."""
    releaser_loss: float
    """Releaser objective including the recurrent penalty."""
    distortion: float
    entropy: float
    di_bound: float


@frozen
class EpochRecord:
    epoch: int
    val_nrmse: float
    val_releaser_loss: float


@define
class TrainHistory:
    iterations: list[IterationRecord] = Factory(list)
    epochs: list[EpochRecord] = Factory(list)
    best_epoch: int | None = None

    def to_frame(self) -> pd.DataFrame:
        """One row per iteration, with the validation metrics of its epoch."""
        iterations = pd.DataFrame(
            [asdict(r) for r in self.iterations],
            columns=[
                "epoch",
                "iteration",
                "adversary_loss",
                "releaser_loss",
                "distortion",
                "entropy",
                "di_bound",
            ],
        )
        epochs = pd.DataFrame(
            [asdict(r) for r in self.epochs],
            columns=["epoch", "val_nrmse", "val_releaser_loss"],
        )
        return iterations.merge(epochs, on="epoch", how="left")

    def write_csv(self, path: Path | str) -> None:
        self.to_frame().to_csv(path, index=False, lineterminator="\n")


def train_adversarial(
    config: TrainConfig, train: Dataset, val: Dataset
) -> tuple[Releaser, Adversary, TrainHistory]:
    """Train a releaser and its adversary for a fixed number of epochs.

    An epoch has :math:`\\lceil n/B\\rceil` iterations. Minibatches are drawn from a
    stream that reshuffles the training set whenever it is exhausted, and each
    releaser pass draws fresh seed noise. After every epoch, the releaser is
    evaluated on the validation set; the parameters of the epoch with the lowest
    validation releaser loss after the warm-up epochs are returned.

    The validation releaser loss is the distortion minus :math:`\\lambda` times the
    entropy of the predictions of the adversary of the same epoch. For
    :math:`\\lambda > 0` it is therefore also low in epochs where that adversary is
    weak, and the selected epoch is not necessarily the one with the most private
    release. `TrainHistory.epochs` holds the validation NRMSE of every epoch for a
    selection on utility alone.

    Raises:
        DivergenceError: If a loss or an activation becomes non-finite. The error
            carries the history up to that iteration.
    """
    _check_datasets(train, val)
    trainer = _AdversarialTrainer.create(config, train.alphabet_size)
    batches = batch_stream(train, config.batch_size, child_seed(config.seed, _BATCHES))
    iterations_per_epoch = math.ceil(len(train) / config.batch_size)
    best: tuple[float, Releaser, Adversary] | None = None
    for epoch in range(config.epochs):
        try:
            for _ in range(iterations_per_epoch):
                adversary_losses = [
                    trainer.update_adversary(next(batches))
                    for _ in range(config.adversary_steps)
                ]
                trainer.update_releaser(next(batches), epoch, adversary_losses)
            record = trainer.validate(val, epoch)
        except DomainError as exc:
            msg = f"Training diverged in epoch {epoch}: {exc}"
            raise DivergenceError(msg, trainer.history) from exc
        if not math.isfinite(record.val_releaser_loss):
            msg = f"Validation loss became {record.val_releaser_loss} in epoch {epoch}"
            raise DivergenceError(msg, trainer.history)
        last = trainer.history.iterations[-1]
        _LOGGER.info(
            "Epoch %d/%d: adversary loss %.4f, releaser loss %.4f, val NRMSE %.4f",
            epoch + 1,
            config.epochs,
            last.adversary_loss,
            last.releaser_loss,
            record.val_nrmse,
        )
        is_candidate = epoch >= config.warmup_epochs
        if is_candidate and (best is None or record.val_releaser_loss < best[0]):
            best = (record.val_releaser_loss, trainer.releaser, trainer.adversary)
            trainer.history.best_epoch = epoch
    if best is None:
        return trainer.releaser, trainer.adversary, trainer.history
    return best[1], best[2], trainer.history


def batch_stream(dataset: Dataset, batch_size: int, seed: int) -> Iterator[Batch]:
    """Endless minibatches; every pass over the data uses a new shuffle."""
    n_pass = 0
    while True:
        yield from minibatches(dataset, batch_size, child_seed(seed, n_pass))
        n_pass += 1


@define
class _AdversarialTrainer:
    """Networks and optimizer states that change during training."""

    config: TrainConfig
    alphabet_size: int
    releaser: Releaser
    adversary: Adversary
    objective: ReleaserObjective
    releaser_state: RmsPropState
    adversary_state: RmsPropState
    noise_rng: SeededRng
    history: TrainHistory = Factory(TrainHistory)

    @classmethod
    def create(cls, config: TrainConfig, alphabet_size: int) -> _AdversarialTrainer:
        observation_dim = 1 + (alphabet_size if config.observe_labels else 0)
        releaser = Releaser.create(
            observation_dim,
            output_dim=1,
            hidden_dims=config.releaser.hidden_dims,
            noise_dim=config.noise_dim,
            rng=SeededRng(child_seed(config.seed, _RELEASER_INIT)),
        )
        adversary = Adversary.create(
            release_dim=1,
            alphabet_size=alphabet_size,
            hidden_dims=config.adversary.hidden_dims,
            rng=SeededRng(child_seed(config.seed, _ADVERSARY_INIT)),
        )
        return cls(
            config=config,
            alphabet_size=alphabet_size,
            releaser=releaser,
            adversary=adversary,
            objective=ReleaserObjective(
                lam=config.lam,
                distortion=config.distortion,
                privacy_term=config.privacy_term,
                peak_temperature=config.peak_temperature,
            ),
            releaser_state=RmsPropState.zeros(
                releaser.net.layout.size,
                decay=config.rmsprop_decay,
                learning_rate=config.releaser_lr,
            ),
            adversary_state=RmsPropState.zeros(
                adversary.net.layout.size,
                decay=config.rmsprop_decay,
                learning_rate=config.adversary_lr,
            ),
            noise_rng=SeededRng(child_seed(config.seed, _NOISE)),
        )

    @property
    def iteration(self) -> int:
        return len(self.history.iterations)

    def update_adversary(self, batch: Batch) -> float:
        """Apply one update to the adversary; the releaser stays fixed."""
        w_seq = batch.observations(self.alphabet_size, self.config.observe_labels)
        z_seq = release(self.releaser, w_seq, self.noise_rng).z
        loss, grad = adversary_step_gradient(self.adversary, z_seq, batch.x)
        self.__check_finite(loss, "adversary")
        grad = clip_gradients(grad, self.config.clip_value, self.config.clip_mode)
        parameters, self.adversary_state = rmsprop_step(
            self.adversary_state, self.adversary.net.parameters, grad
        )
        self.adversary = Adversary(self.adversary.net.with_parameters(parameters))
        return loss

    def update_releaser(
        self, batch: Batch, epoch: int, adversary_losses: list[float]
    ) -> None:
        """Apply one update to the releaser through the frozen adversary."""
        beta = self.config.recurrent_l2
        w_seq = batch.observations(self.alphabet_size, self.config.observe_labels)
        inputs = draw_inputs(self.releaser, w_seq, self.noise_rng)
        value = self.objective.evaluate(
            self.releaser, self.adversary, inputs, batch.y, batch.x
        )
        loss = value.loss + recurrent_l2_penalty(self.releaser.net, beta)
        self.history.iterations.append(
            IterationRecord(
                epoch=epoch,
                iteration=self.iteration,
                adversary_loss=float(np.mean(adversary_losses)),
                releaser_loss=loss,
                distortion=value.distortion,
                entropy=conditional_entropy_term(value.predictions),
                di_bound=di_upper_bound(value.predictions, self.alphabet_size),
            )
        )
        self.__check_finite(loss, "releaser")
        grad = value.gradient + recurrent_l2_gradient(self.releaser.net, beta)
        grad = clip_gradients(grad, self.config.clip_value, self.config.clip_mode)
        parameters, self.releaser_state = rmsprop_step(
            self.releaser_state, self.releaser.net.parameters, grad
        )
        self.releaser = Releaser(
            self.releaser.net.with_parameters(parameters), self.releaser.noise_dim
        )

    def validate(self, val: Dataset, epoch: int) -> EpochRecord:
        """Evaluate the releaser on the validation set with a fixed noise draw."""
        batch = val.stack()
        w_seq = batch.observations(val.alphabet_size, self.config.observe_labels)
        rng = SeededRng(child_seed(self.config.seed, _VALIDATION))
        inputs = draw_inputs(self.releaser, w_seq, rng)
        value = self.objective.evaluate(
            self.releaser, self.adversary, inputs, batch.y, batch.x
        )
        record = EpochRecord(
            epoch=epoch,
            val_nrmse=nrmse(batch.y, value.z),
            val_releaser_loss=value.loss,
        )
        self.history.epochs.append(record)
        return record

    def __check_finite(self, loss: float, network: str) -> None:
        if not math.isfinite(loss):
            msg = f"The {network} loss became {loss} in iteration {self.iteration}"
            raise DivergenceError(msg, self.history)


def _check_datasets(train: Dataset, val: Dataset) -> None:
    if len(train) == 0 or len(val) == 0:
        msg = "Training needs non-empty training and validation sets"
        raise ContractViolationError(msg)
    if train.normalization is None or val.normalization != train.normalization:
        msg = "Training and validation sets must share fitted normalization constants"
        raise ContractViolationError(msg)
    if train.alphabet_size != val.alphabet_size:
        msg = "Training and validation sets have different label alphabets"
        raise ContractViolationError(msg)
