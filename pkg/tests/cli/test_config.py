from __future__ import annotations

from pathlib import Path
from textwrap import dedent

import pytest

from di_release.cli import _create_argparse
from di_release.cli.config import (
    CONFIG_FILENAME,
    DEFAULT_OUTPUT,
    MAX_SEED,
    RunConfig,
    override,
    resolve_config,
)
from di_release.errors import ConfigError
from di_release.harness.config import DEFAULT_PRESET, NetworkSpec, TrainConfig


def _resolve(*argv: str) -> RunConfig:
    return resolve_config(_create_argparse().parse_args(argv))


def _write_config(tmp_path: Path, content: str) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(dedent(content))
    return path


class TestResolveConfig:
    def test_defaults(self):
        run = _resolve("train")
        assert run.preset == DEFAULT_PRESET
        assert run.out == DEFAULT_OUTPUT
        assert run.data.source == "synthetic"

    def test_preset_flag(self):
        run = _resolve("train", "--preset", "identity-desk")
        assert run.data.synthetic.task == "identity"

    @pytest.mark.parametrize(
        ("preset", "expected", "beta"),
        [
            ("occupancy-paper", (128, 4, 8), 1.5),
            ("identity-paper", (128, 5, 3), 2.0),
        ],
    )
    def test_long_training_presets(
        self, preset: str, expected: tuple[int, int, int], beta: float
    ):
        train = _resolve("train", "--preset", preset).train
        assert (train.batch_size, train.adversary_steps, train.noise_dim) == expected
        assert train.recurrent_l2 == beta

    def test_file_overrides_preset(self, tmp_path: Path):
        config = _write_config(
            tmp_path,
            """
            preset = "identity-desk"

            [train]
            epochs = 3

            [train.releaser]
            cells = 7

            [data.synthetic.hmm]
            p_stay = 0.8

            [output]
            dir = "results"
            """,
        )
        run = _resolve("train", "--config", str(config))
        assert run.preset == "identity-desk"
        assert run.data.synthetic.task == "identity"
        assert run.data.synthetic.hmm.p_stay == 0.8
        assert run.train.epochs == 3
        assert run.train.releaser == NetworkSpec(layers=2, cells=7)
        assert run.out == Path("results")

    def test_flags_override_file(self, tmp_path: Path):
        config = _write_config(
            tmp_path,
            """
            preset = "identity-desk"

            [train]
            seed = 3

            [output]
            dir = "results"
            """,
        )
        out = tmp_path / "out"
        run = _resolve(
            "train",
            "--config",
            str(config),
            "--preset",
            "occupancy-desk",
            "--seed",
            "5",
            "--out",
            str(out),
        )
        assert run.preset == "occupancy-desk"
        assert run.train.seed == 5
        assert run.data.seed == 5
        assert run.data.split.seed == 5
        assert run.out == out

    def test_lambda_flag(self):
        run = _resolve("sweep", "--lambda", "0,0.5,2")
        assert run.train.lambdas == (0.0, 0.5, 2.0)

    def test_lists_become_tuples(self, tmp_path: Path):
        config = _write_config(
            tmp_path,
            """
            [train]
            lambdas = [0.0, 1.0]
            """,
        )
        assert _resolve("sweep", "--config", str(config)).train.lambdas == (0.0, 1.0)

    def test_data_flag(self, tmp_path: Path):
        dataset = tmp_path / "meter.csv"
        dataset.write_text("house_id,timestamp,consumption_kwh\n")
        run = _resolve("train", "--data", str(dataset))
        assert run.data.source == "csv"
        assert run.data.path == str(dataset)

    @pytest.mark.parametrize(
        ("content", "message"),
        [
            ("[model]\nlayers = 2\n", "Unknown sections in .*: model"),
            ("[train.releaser]\nunits = 2\n", r"Unknown keys in \[train.releaser\]: units"),
            ("[output]\npath = 'x'\n", r"Unknown keys in \[output\]: path"),
            ("[data.synthetic.hmm]\np_stay = 1.5\n", "p_stay must be a probability"),
            ("[train]\nepochs = 0\n", "epochs must be at least 1"),
            ("[train]\nbatch_size = 'large'\n", r"Invalid value in \[train\]"),
            ("[train\nepochs = 2\n", "Cannot parse"),
            ("preset = 'large'\n", "Unknown preset 'large'"),
        ],
    )
    def test_invalid_file(self, tmp_path: Path, content: str, message: str):
        config = _write_config(tmp_path, content)
        with pytest.raises(ConfigError, match=message):
            _resolve("train", "--config", str(config))

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(ConfigError, match="does not exist"):
            _resolve("train", "--config", str(tmp_path / "missing.toml"))

    def test_missing_dataset(self, tmp_path: Path):
        with pytest.raises(ConfigError, match=r"Dataset .*missing.csv does not exist"):
            _resolve("train", "--data", str(tmp_path / "missing.csv"))

    def test_csv_source_without_path(self, tmp_path: Path):
        config = _write_config(tmp_path, '[data]\nsource = "csv"\n')
        with pytest.raises(ConfigError, match="needs a path"):
            _resolve("train", "--config", str(config))

    def test_output_is_a_file(self, tmp_path: Path):
        target = tmp_path / "file"
        target.write_text("")
        with pytest.raises(ConfigError, match="is not a directory"):
            _resolve("train", "--out", str(target))

    @pytest.mark.parametrize("seed", [-1, MAX_SEED + 1])
    def test_seed_range(self, seed: int):
        with pytest.raises(ConfigError, match="Seed must lie in"):
            _resolve("train", "--seed", str(seed))


class TestOverride:
    def test_nested(self):
        config = override(TrainConfig(), {"attacker": {"cells": 3}}, section="train")
        assert config.attacker == NetworkSpec(layers=1, cells=3)

    def test_not_a_table(self):
        with pytest.raises(ConfigError, match=r"\[train\] must be a table"):
            override(TrainConfig(), [1, 2], section="train")  # type: ignore[arg-type]


class TestEcho:
    def test_round_trip(self, tmp_path: Path):
        out = tmp_path / "run"
        run = _resolve("sweep", "--seed", "11", "--lambda", "0,1", "--out", str(out))
        path = run.echo()
        assert path == out / CONFIG_FILENAME
        assert _resolve("sweep", "--config", str(path)) == run
