"""Power spectral densities of the consumption and of the release error."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from di_release.cli.evaluate import bundle_splits
from di_release.harness.spectrum import error_psd_report
from di_release.privmech import MechanismBundle

if TYPE_CHECKING:
    from pathlib import Path

    from di_release.cli.config import RunConfig
    from di_release.harness.spectrum import PsdTable

_LOGGER = logging.getLogger(__name__)

PSD_FILENAME = "psd.csv"
DEFAULT_REALIZATIONS = 10


def main(
    run: RunConfig, bundle_path: Path, n_realizations: int = DEFAULT_REALIZATIONS
) -> PsdTable:
    bundle = MechanismBundle.load(bundle_path)
    _, _, test = bundle_splits(run, bundle)
    table = error_psd_report(
        bundle.releaser,
        test,
        n_realizations,
        seed=run.train.seed,
        observe_labels=bundle.observe_labels,
    )
    run.out.mkdir(parents=True, exist_ok=True)
    path = run.out / PSD_FILENAME
    table.write_csv(path)
    peak = table.harmonic_bins()
    _LOGGER.info(
        "Wrote %d frequency bins to %s; error power on daily harmonics: %.3g of %.3g",
        len(table.frequency_cph),
        path,
        table.error_psd[peak].sum(),
        table.error_psd.sum(),
    )
    return table
