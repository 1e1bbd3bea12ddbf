"""Helper functions for writing YAML provenance files."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from di_release.utilities import hash_file, package_version


class _IncreasedYamlIndent(yaml.SafeDumper):
    def increase_indent(self, flow: bool = False, indentless: bool = False) -> None:  # noqa: ARG002
        return super().increase_indent(flow, indentless=False)

    def write_line_break(self, data: str | None = None) -> None:
        """See https://stackoverflow.com/a/44284819."""
        super().write_line_break(data)
        if len(self.indents) == 1:
            super().write_line_break()


def write_yaml(definition: dict, output_path: Path | str) -> None:
    """Write a `dict` to disk with standardized YAML formatting."""
    with open(output_path, "w", encoding="utf-8") as stream:
        yaml.dump(
            definition,
            stream,
            sort_keys=False,
            Dumper=_IncreasedYamlIndent,
            default_flow_style=False,
        )


def write_provenance(artifact: Path | str, **entries: Any) -> Path:
    """Describe how an artifact was produced in a sidecar next to it.

    The sidecar is called :file:`<artifact>.provenance.yaml` and contains the
    package version, the SHA-256 hash of the artifact, and the given entries.
    """
    artifact = Path(artifact)
    sidecar = artifact.with_name(artifact.name + ".provenance.yaml")
    definition = {
        "artifact": artifact.name,
        "sha256": hash_file(artifact),
        "di_release_version": package_version(),
        **entries,
    }
    write_yaml(definition, sidecar)
    return sidecar
