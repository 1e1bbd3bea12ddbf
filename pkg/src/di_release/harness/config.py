"""Hyperparameters of the adversarial training and the named presets.

The desk presets train in minutes on a laptop. The large presets use deep networks
and long training with the :math:`(B, k, m)` values that suit the occupancy and
identity tasks, and are meant for runs of several hours.
"""

from __future__ import annotations

from typing import Callable, Literal

import attrs
from attrs import field, frozen

from di_release.data import SplitSpec
from di_release.data.ingest import CsvSchema
from di_release.data.synthetic import EmissionParams, HmmParams, SyntheticParams
from di_release.errors import ConfigError
from di_release.optim import ClipMode
from di_release.privmech import DistortionKind, PrivacyTerm


def _positive_int(_: object, attribute: attrs.Attribute, value: int) -> None:
    if value < 1:
        msg = f"{attribute.name} must be at least 1, got {value}"
        raise ConfigError(msg)


def _non_negative(_: object, attribute: attrs.Attribute, value: float) -> None:
    if value < 0:
        msg = f"{attribute.name} must be non-negative, got {value}"
        raise ConfigError(msg)


def _positive(_: object, attribute: attrs.Attribute, value: float) -> None:
    if not value > 0:
        msg = f"{attribute.name} must be positive, got {value}"
        raise ConfigError(msg)


def _one_of(*options: str) -> Callable[[object, attrs.Attribute, str], None]:
    def check(_: object, attribute: attrs.Attribute, value: str) -> None:
        if value not in options:
            msg = f"{attribute.name} must be one of {', '.join(options)}; got {value!r}"
            raise ConfigError(msg)

    return check


@frozen
class NetworkSpec:
    """Stack of :code:`layers` LSTM layers with :code:`cells` cells each.

    >>> NetworkSpec(layers=2, cells=32).hidden_dims
    (32, 32)
    """

    layers: int = field(validator=_positive_int)
    cells: int = field(validator=_positive_int)

    @property
    def hidden_dims(self) -> tuple[int, ...]:
        return (self.cells,) * self.layers


@frozen
class TrainConfig:
    batch_size: int = field(default=128, validator=_positive_int)
    """Minibatch size :math:`B`."""
    adversary_steps: int = field(default=4, validator=_positive_int)
    """Adversary updates :math:`k` per releaser update."""
    clip_value: float = field(default=1.0, validator=_positive)
    """Gradient clipping value :math:`C`."""
    clip_mode: ClipMode = field(default="value", validator=_one_of("value", "norm"))
    recurrent_l2: float = field(default=1e-4, validator=_non_negative)
    """Weight :math:`\\beta` of the Ridge penalty on the recurrent weights."""
    lam: float = field(default=0.0, validator=_non_negative)
    """Privacy weight :math:`\\lambda`."""
    noise_dim: int = field(default=8, validator=_non_negative)
    """Dimension :math:`m` of the seed noise."""
    epochs: int = field(default=50, validator=_positive_int)
    releaser_lr: float = field(default=3e-3, validator=_positive)
    adversary_lr: float = field(default=3e-3, validator=_positive)
    attacker_lr: float = field(default=3e-3, validator=_positive)
    rmsprop_decay: float = 0.9
    seed: int = field(default=0, validator=_non_negative)
    releaser: NetworkSpec = NetworkSpec(layers=2, cells=32)
    adversary: NetworkSpec = NetworkSpec(layers=1, cells=16)
    attacker: NetworkSpec = NetworkSpec(layers=1, cells=16)
    attacker_epochs: int = field(default=30, validator=_positive_int)
    attacker_patience: int = field(default=5, validator=_positive_int)
    """Stop the attacker after this many epochs without validation improvement."""
    checkpoint_warmup: int | None = None
    """First epoch that may become the best-validation checkpoint; default half."""
    distortion: DistortionKind = field(default="mse", validator=_one_of("mse", "peak"))
    peak_temperature: float = field(default=10.0, validator=_positive)
    privacy_term: PrivacyTerm = field(
        default="entropy", validator=_one_of("entropy", "cross_entropy")
    )
    observe_labels: bool = False
    """Let the releaser observe the one-hot sensitive labels next to the consumption."""
    lambdas: tuple[float, ...] = field(
        default=(0.0, 0.5, 1.0, 2.0, 5.0), converter=tuple
    )
    """Privacy weights of a sweep."""

    def __attrs_post_init__(self) -> None:
        if not 0 < self.rmsprop_decay < 1:
            msg = f"rmsprop_decay must lie in (0, 1), got {self.rmsprop_decay}"
            raise ConfigError(msg)
        if any(lam < 0 for lam in self.lambdas):
            msg = f"Privacy weights must be non-negative, got {self.lambdas}"
            raise ConfigError(msg)

    @property
    def warmup_epochs(self) -> int:
        if self.checkpoint_warmup is None:
            return self.epochs // 2
        return min(self.checkpoint_warmup, self.epochs - 1)


@frozen
class DataConfig:
    source: Literal["synthetic", "csv"] = field(
        default="synthetic", validator=_one_of("synthetic", "csv")
    )
    path: str | None = None
    """CSV file to load if the source is :code:`"csv"`."""
    seed: int = field(default=0, validator=_non_negative)
    """Seed of the synthetic generator."""
    synthetic: SyntheticParams = SyntheticParams()
    csv: CsvSchema = CsvSchema()
    split: SplitSpec = SplitSpec()


@frozen
class Preset:
    name: str
    description: str
    data: DataConfig
    train: TrainConfig


_DESK_TRAINING = TrainConfig(batch_size=64, adversary_steps=2, noise_dim=4)
_DESK_OCCUPANCY = SyntheticParams(n_houses=20, days_per_house=100)
_DESK_IDENTITY = SyntheticParams(
    n_houses=5,
    days_per_house=400,
    hmm=HmmParams(p_stay=0.9),
    emission=EmissionParams(base_range=(0.1, 0.8), gain_range=(0.3, 1.5)),
    task="identity",
)

PRESETS: dict[str, Preset] = {
    preset.name: preset
    for preset in [
        Preset(
            name="occupancy-desk",
            description="Binary occupancy on 2000 synthetic days, small networks",
            data=DataConfig(synthetic=_DESK_OCCUPANCY),
            train=_DESK_TRAINING,
        ),
        Preset(
            name="identity-desk",
            description="Five-house identity on 2000 synthetic days, small networks",
            data=DataConfig(synthetic=_DESK_IDENTITY),
            train=_DESK_TRAINING,
        ),
        Preset(
            name="occupancy-paper",
            description="Occupancy with deep networks and long training",
            data=DataConfig(synthetic=_DESK_OCCUPANCY),
            train=TrainConfig(
                batch_size=128,
                adversary_steps=4,
                noise_dim=8,
                recurrent_l2=1.5,
                releaser=NetworkSpec(layers=4, cells=64),
                adversary=NetworkSpec(layers=2, cells=32),
                attacker=NetworkSpec(layers=3, cells=32),
                releaser_lr=1e-3,
                adversary_lr=1e-3,
                attacker_lr=1e-3,
                epochs=200,
            ),
        ),
        Preset(
            name="identity-paper",
            description="Identity with deep networks and long training",
            data=DataConfig(synthetic=_DESK_IDENTITY),
            train=TrainConfig(
                batch_size=128,
                adversary_steps=5,
                noise_dim=3,
                recurrent_l2=2.0,
                releaser=NetworkSpec(layers=6, cells=128),
                adversary=NetworkSpec(layers=4, cells=32),
                attacker=NetworkSpec(layers=4, cells=32),
                releaser_lr=1e-3,
                adversary_lr=1e-3,
                attacker_lr=1e-3,
                epochs=200,
            ),
        ),
    ]
}
DEFAULT_PRESET = "occupancy-desk"


def get_preset(name: str) -> Preset:
    preset = PRESETS.get(name)
    if preset is None:
        msg = f"Unknown preset {name!r}, choose from {', '.join(PRESETS)}"
        raise ConfigError(msg)
    return preset
