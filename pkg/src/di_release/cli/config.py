"""Resolve the effective run configuration from a preset, a TOML file, and flags.

Values are applied in this order, later ones taking precedence:

1. the named preset (`~di_release.harness.config.PRESETS`),
2. the TOML file given with :code:`--config`,
3. the command-line flags.

A configuration file has the sections :code:`[data]`, :code:`[train]`, and
:code:`[output]`, plus an optional top-level :code:`preset` key. Nested tables
such as :code:`[data.synthetic.hmm]` address the nested parameter classes.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from pathlib import Path
from typing import TYPE_CHECKING, Any, TypeVar

import attrs
from attrs import frozen

from di_release.data import Dataset, normalize_fit_apply, split
from di_release.data.ingest import load_csv
from di_release.errors import ConfigError, ReleaseError
from di_release.harness.config import (
    DEFAULT_PRESET,
    DataConfig,
    TrainConfig,
    get_preset,
)
from di_release.utilities import write
from di_release.utilities.toml import load_toml, to_toml_document

if TYPE_CHECKING:
    from argparse import Namespace

    from di_release.data import Normalization

_LOGGER = logging.getLogger(__name__)

T = TypeVar("T")

CONFIG_FILENAME = "config.toml"
DEFAULT_OUTPUT = Path("output")
MAX_SEED = 2**63 - 1
"""Largest seed that TOML can store."""

_SECTIONS = {"preset", "data", "train", "output"}
_OUTPUT_KEYS = {"dir"}


@frozen
class RunConfig:
    preset: str
    data: DataConfig
    train: TrainConfig
    out: Path = DEFAULT_OUTPUT

    def to_dict(self) -> dict[str, Any]:
        return {
            "preset": self.preset,
            "data": attrs.asdict(self.data),
            "train": attrs.asdict(self.train),
            "output": {"dir": str(self.out)},
        }

    def echo(self) -> Path:
        """Write the effective configuration to the output directory."""
        path = self.out / CONFIG_FILENAME
        write(to_toml_document(self.to_dict()).as_string(), path)
        return path


def resolve_config(args: Namespace) -> RunConfig:
    """Combine preset, configuration file, and flags, and validate input paths."""
    document: dict[str, Any] = {}
    if args.config is not None:
        document = load_toml(args.config)
        unknown = set(document) - _SECTIONS
        if unknown:
            msg = f"Unknown sections in {args.config}: {', '.join(sorted(unknown))}"
            raise ConfigError(msg)
    preset_name = args.preset or document.get("preset") or DEFAULT_PRESET
    preset = get_preset(preset_name)
    data = override(preset.data, document.get("data", {}), section="data")
    train = override(preset.train, document.get("train", {}), section="train")
    output = document.get("output", {})
    _check_keys(output, _OUTPUT_KEYS, "output")
    out = Path(output.get("dir", DEFAULT_OUTPUT))

    if getattr(args, "data", None) is not None:
        data = attrs.evolve(data, source="csv", path=str(args.data))
    if args.seed is not None:
        seed = _check_seed(args.seed)
        train = attrs.evolve(train, seed=seed)
        data = attrs.evolve(
            data, seed=seed, split=attrs.evolve(data.split, seed=seed)
        )
    if getattr(args, "lambdas", None) is not None:
        train = override(train, {"lambdas": args.lambdas}, section="train")
    if args.out is not None:
        out = Path(args.out)
    run = RunConfig(preset=preset_name, data=data, train=train, out=out)
    validate_paths(run)
    return run


def override(instance: T, overrides: Mapping[str, Any], section: str) -> T:
    """Replace fields of an attrs instance, recursing into nested attrs fields.

    >>> from di_release.harness.config import NetworkSpec
    >>> override(NetworkSpec(layers=1, cells=8), {"cells": 16}, section="net")
    NetworkSpec(layers=1, cells=16)
    >>> override(NetworkSpec(layers=1, cells=8), {"units": 16}, section="net")
    Traceback (most recent call last):
        ...
    di_release.errors.ConfigError: Unknown keys in [net]: units
    """
    if not isinstance(overrides, Mapping):
        msg = f"[{section}] must be a table, got {overrides!r}"
        raise ConfigError(msg)
    fields = attrs.fields_dict(type(instance))
    _check_keys(overrides, set(fields), section)
    changes = {}
    for key, value in overrides.items():
        current = getattr(instance, key)
        if attrs.has(type(current)) and isinstance(value, Mapping):
            changes[key] = override(current, value, section=f"{section}.{key}")
        else:
            changes[key] = _freeze(value)
    try:
        return attrs.evolve(instance, **changes)
    except ReleaseError:
        raise
    except (TypeError, ValueError) as exc:
        msg = f"Invalid value in [{section}]: {exc}"
        raise ConfigError(msg) from exc


def validate_paths(run: RunConfig) -> None:
    if run.data.source == "csv":
        if run.data.path is None:
            msg = "A CSV data source needs a path, set data.path or pass --data"
            raise ConfigError(msg)
        if not Path(run.data.path).is_file():
            msg = f"Dataset {run.data.path} does not exist"
            raise ConfigError(msg)
    if run.out.exists() and not run.out.is_dir():
        msg = f"Output path {run.out} exists and is not a directory"
        raise ConfigError(msg)


def load_dataset(data: DataConfig) -> Dataset:
    """Generate or read the raw dataset described by the data section."""
    if data.source == "csv":
        dataset = load_csv(data.path, data.csv)  # type: ignore[arg-type]
    else:
        dataset = data.synthetic.generate(data.seed)
    _LOGGER.info("Dataset: %s", dataset.describe())
    return dataset


def prepare_splits(
    data: DataConfig, dataset: Dataset | None = None
) -> tuple[tuple[Dataset, Dataset, Dataset], Normalization]:
    """Split the dataset and normalize all parts with the training constants."""
    if dataset is None:
        dataset = load_dataset(data)
    train, val, test = split(dataset, data.split)
    (train, val, test), normalization = normalize_fit_apply(train, val, test)
    return (train, val, test), normalization


def _check_keys(mapping: Mapping[str, Any], allowed: set[str], section: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        msg = f"Unknown keys in [{section}]: {', '.join(sorted(unknown))}"
        raise ConfigError(msg)


def _check_seed(seed: int) -> int:
    if not 0 <= seed <= MAX_SEED:
        msg = f"Seed must lie in [0, {MAX_SEED}], got {seed}"
        raise ConfigError(msg)
    return seed


def _freeze(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value
