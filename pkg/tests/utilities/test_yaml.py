from __future__ import annotations

from typing import TYPE_CHECKING

import yaml

from di_release.utilities import hash_file
from di_release.utilities.yaml import write_provenance, write_yaml

if TYPE_CHECKING:
    from pathlib import Path


def test_write_yaml(tmp_path: Path):
    path = tmp_path / "summary.yaml"
    write_yaml({"lam": 0.5, "houses": [1, 3], "net": {"cells": 4}}, path)
    content = path.read_text()
    assert "  - 1" in content
    assert yaml.safe_load(content) == {"lam": 0.5, "houses": [1, 3], "net": {"cells": 4}}


def test_write_provenance(tmp_path: Path):
    artifact = tmp_path / "dataset.csv"
    artifact.write_text("house_id,timestamp,consumption_kwh\n")
    sidecar = write_provenance(artifact, seed=7, synthetic={"n_houses": 5})
    assert sidecar == tmp_path / "dataset.csv.provenance.yaml"
    provenance = yaml.safe_load(sidecar.read_text())
    assert provenance["artifact"] == "dataset.csv"
    assert provenance["sha256"] == hash_file(artifact)
    assert provenance["seed"] == 7
    assert provenance["synthetic"] == {"n_houses": 5}
    assert "di_release_version" in provenance
