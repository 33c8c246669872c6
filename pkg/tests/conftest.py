import csv

import numpy as np
import pytest

from sportscausal.panel import PanelData


@pytest.fixture
def write_outcomes(tmp_path):
    """Write rows of (unit_id, t, y, d) to a long-format CSV, return its path."""

    def _write(rows, name="panel.csv"):
        path = tmp_path / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["unit_id", "t", "y", "d"])
            w.writerows(rows)
        return path

    return _write


def make_panel(outcomes, treatment, t0, features=None):
    outcomes = np.asarray(outcomes, dtype=float)
    n = outcomes.shape[0]
    if features is None:
        features = np.empty((n, 0))
    ids = tuple(f"u{i:03d}" for i in range(n))
    return PanelData(outcomes, np.asarray(treatment), features, t0, ids)
