"""Store and load network parameters as versioned :code:`.npz` archives.

An archive contains a :code:`format_version`, the shape header (:code:`input_dim`,
:code:`hidden_dims`, :code:`output_dim`, :code:`head_kind`), and the flat
:code:`parameters` vector in the order documented in :mod:`di_release.neural`. Callers
can store additional arrays under a prefix, which is how the mechanism bundle adds its
metadata.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from di_release.errors import DataError
from di_release.neural import ParameterLayout, StackedNet

if TYPE_CHECKING:
    from collections.abc import Mapping
    from pathlib import Path

FORMAT_VERSION = 1


def net_to_arrays(net: StackedNet, prefix: str = "") -> dict[str, np.ndarray]:
    return {
        f"{prefix}format_version": np.array(FORMAT_VERSION),
        f"{prefix}input_dim": np.array(net.layout.input_dim),
        f"{prefix}hidden_dims": np.array(net.layout.hidden_dims),
        f"{prefix}output_dim": np.array(net.layout.output_dim),
        f"{prefix}head_kind": np.array(net.head_kind),
        f"{prefix}parameters": net.parameters,
    }


def net_from_arrays(arrays: Mapping[str, np.ndarray], prefix: str = "") -> StackedNet:
    try:
        version = int(arrays[f"{prefix}format_version"])
        if version != FORMAT_VERSION:
            msg = f"Unsupported parameter format version {version}"
            raise DataError(msg)
        layout = ParameterLayout(
            input_dim=int(arrays[f"{prefix}input_dim"]),
            hidden_dims=tuple(int(h) for h in arrays[f"{prefix}hidden_dims"]),
            output_dim=int(arrays[f"{prefix}output_dim"]),
        )
        head_kind = str(arrays[f"{prefix}head_kind"])
        parameters = np.array(arrays[f"{prefix}parameters"], dtype=np.float64)
    except KeyError as exc:
        msg = f"Parameter archive is missing the entry {exc.args[0]!r}"
        raise DataError(msg) from exc
    return StackedNet(layout, head_kind, parameters)  # type: ignore[arg-type]


def save_net(net: StackedNet, path: Path | str) -> None:
    with open(path, "wb") as stream:
        np.savez(stream, **net_to_arrays(net))


def load_net(path: Path | str) -> StackedNet:
    with np.load(path, allow_pickle=False) as archive:
        return net_from_arrays(archive)
