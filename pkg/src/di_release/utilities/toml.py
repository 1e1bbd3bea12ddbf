"""Read TOML with :mod:`rtoml` and write it with :mod:`tomlkit`."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Any

import rtoml
import tomlkit

from di_release.errors import ConfigError

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping

    from tomlkit.items import Array, Table
    from tomlkit.toml_document import TOMLDocument


def load_toml(path: Path | str) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        msg = f"Configuration file {path} does not exist"
        raise ConfigError(msg)
    try:
        return rtoml.load(path)
    except rtoml.TomlParsingError as exc:
        msg = f"Cannot parse {path}: {exc}"
        raise ConfigError(msg) from exc


def to_toml_array(items: Iterable[Any], multiline: bool | None = None) -> Array:
    array = tomlkit.array()
    array.extend(items)
    if multiline is None:
        array.multiline(len(array) > 4)  # noqa: PLR2004
    else:
        array.multiline(multiline)
    return array


def to_toml_document(definition: Mapping[str, Any]) -> TOMLDocument:
    """Convert nested mappings to a TOML document with one table per mapping.

    Entries that are `None` have no TOML representation and are left out.

    >>> document = to_toml_document({"a": 1, "b": {"c": (1, 2), "d": None}})
    >>> document["b"]["c"] == [1, 2], "d" in document["b"]
    (True, False)
    """
    document = tomlkit.document()
    __fill_table(document, definition)
    return document


def __fill_table(table: TOMLDocument | Table, definition: Mapping[str, Any]) -> None:
    scalars = {k: v for k, v in definition.items() if not isinstance(v, dict)}
    tables = {k: v for k, v in definition.items() if isinstance(v, dict)}
    for key, value in scalars.items():
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            table[key] = to_toml_array(value)
        elif isinstance(value, Path):
            table[key] = str(value)
        else:
            table[key] = value
    for key, value in tables.items():
        sub_table = tomlkit.table()
        __fill_table(sub_table, value)
        table[key] = sub_table
