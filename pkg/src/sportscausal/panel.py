"""Experiment data model: validated outcome panels and group-level series.

A panel is a complete (m+n) x (T0+T) outcome matrix with a binary treatment
indicator per subject, optional subject features, and the pre/post boundary
t0. Ingestion is strict: gaps, duplicates, and inconsistent labels are
rejected rather than repaired.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadT0Error,
    DuplicateCellError,
    FeatureMismatchError,
    InconsistentTreatmentError,
    InvalidPanelError,
    MissingCellError,
)

__all__ = [
    "PanelData",
    "GroupSeries",
    "load_panel",
    "write_panel",
    "aggregate_groups",
    "split_periods",
]


@dataclass(frozen=True)
class PanelData:
    """Complete outcome matrix with treatment labels and the pre/post split.

    outcomes : (m+n, T0+T) float matrix, row per subject, column per time
    treatment : (m+n,) 0/1 vector
    features : (m+n, k) float matrix; k may be 0
    t0 : last pre-treatment column (1-based)
    unit_ids : unique opaque subject identifiers
    """

    outcomes: np.ndarray
    treatment: np.ndarray
    features: np.ndarray
    t0: int
    unit_ids: tuple[str, ...]

    def __post_init__(self):
        outcomes = np.ascontiguousarray(np.asarray(self.outcomes, dtype=float))
        treatment = np.asarray(self.treatment, dtype=np.int64)
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(len(treatment), -1)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "treatment", treatment)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "unit_ids", tuple(str(u) for u in self.unit_ids))
        self._validate()
        for arr in (self.outcomes, self.treatment, self.features):
            arr.setflags(write=False)

    def _validate(self):
        n_units, n_times = self.outcomes.shape
        if n_units == 0 or n_times == 0:
            raise InvalidPanelError("empty outcome matrix")
        if not np.all(np.isfinite(self.outcomes)):
            raise InvalidPanelError("outcomes contain missing or non-finite values")
        if len(self.treatment) != n_units or len(self.unit_ids) != n_units:
            raise InvalidPanelError("treatment/unit_ids length does not match outcomes")
        if self.features.shape[0] != n_units:
            raise InvalidPanelError("features row count does not match outcomes")
        if not set(np.unique(self.treatment)) <= {0, 1}:
            raise InvalidPanelError("treatment indicators must be 0 or 1")
        if not np.any(self.treatment == 0):
            raise InvalidPanelError("no control subjects")
        if not np.any(self.treatment == 1):
            raise InvalidPanelError("no treated subjects")
        if len(set(self.unit_ids)) != n_units:
            raise InvalidPanelError("unit_ids are not unique")
        if not (1 <= self.t0 < n_times):
            raise BadT0Error(
                f"t0={self.t0} must leave at least one pre and one post column "
                f"(observed range 1..{n_times})"
            )

    @property
    def n_units(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_times(self) -> int:
        return self.outcomes.shape[1]

    @property
    def n_post(self) -> int:
        return self.n_times - self.t0

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def control_mask(self) -> np.ndarray:
        return self.treatment == 0

    @property
    def treated_mask(self) -> np.ndarray:
        return self.treatment == 1


@dataclass(frozen=True)
class GroupSeries:
    """Per-time arithmetic means of the control and treated groups."""

    control: np.ndarray
    treated: np.ndarray
    t0: int

    def __post_init__(self):
        control = np.asarray(self.control, dtype=float)
        treated = np.asarray(self.treated, dtype=float)
        object.__setattr__(self, "control", control)
        object.__setattr__(self, "treated", treated)
        if control.shape != treated.shape or control.ndim != 1:
            raise InvalidPanelError("control/treated series must be 1-d and equal length")
        if not (1 <= self.t0 < control.size):
            raise BadT0Error(f"t0={self.t0} outside series of length {control.size}")
        control.setflags(write=False)
        treated.setflags(write=False)

    @property
    def n_post(self) -> int:
        return self.control.size - self.t0


def load_panel(outcomes_path, features_path=None, *, t0: int) -> PanelData:
    """Read a long-format outcomes CSV (and optional features CSV).

    Expected columns: ``unit_id`` (string), ``t`` (integer >= 1), ``y``
    (decimal), ``d`` (0 or 1). Subjects keep their order of first appearance;
    time values are mapped to their rank so that indices form a contiguous
    1..T0+T range. ``t0`` counts pre-treatment time points on that scale.
    """
    rows = _read_csv_rows(Path(outcomes_path), ("unit_id", "t", "y", "d"))

    unit_order: list[str] = []
    unit_pos: dict[str, int] = {}
    treat_of: dict[str, int] = {}
    cells: dict[tuple[int, int], float] = {}
    times: set[int] = set()

    for line_no, rec in rows:
        uid = rec["unit_id"]
        try:
            t = int(rec["t"])
            y = float(rec["y"])
            d = int(rec["d"])
        except ValueError as exc:
            raise InvalidPanelError(f"line {line_no}: malformed numeric field ({exc})")
        if t < 1:
            raise InvalidPanelError(f"line {line_no}: time index {t} < 1")
        if d not in (0, 1):
            raise InvalidPanelError(f"line {line_no}: d must be 0 or 1, got {d}")
        if uid not in unit_pos:
            unit_pos[uid] = len(unit_order)
            unit_order.append(uid)
            treat_of[uid] = d
        elif treat_of[uid] != d:
            raise InconsistentTreatmentError(
                f"unit {uid!r} appears with both d=0 and d=1"
            )
        key = (unit_pos[uid], t)
        if key in cells:
            raise DuplicateCellError(f"duplicate cell for unit {uid!r} at t={t}")
        cells[key] = y
        times.add(t)

    if not cells:
        raise InvalidPanelError(f"{outcomes_path}: no data rows")

    time_rank = {t: r for r, t in enumerate(sorted(times))}
    n_units, n_times = len(unit_order), len(times)
    if not (1 <= t0 < n_times):
        raise BadT0Error(f"t0={t0} outside observed time range 1..{n_times}")

    outcomes = np.full((n_units, n_times), np.nan)
    for (i, t), y in cells.items():
        outcomes[i, time_rank[t]] = y
    gaps = np.argwhere(np.isnan(outcomes))
    if gaps.size:
        i, r = gaps[0]
        t_missing = sorted(times)[r]
        raise MissingCellError(f"unit {unit_order[i]!r} lacks time {t_missing}")

    treatment = np.array([treat_of[u] for u in unit_order], dtype=np.int64)
    features = _load_features(features_path, unit_order) if features_path else \
        np.empty((n_units, 0))

    return PanelData(outcomes, treatment, features, int(t0), tuple(unit_order))


def _load_features(features_path, unit_order: list[str]) -> np.ndarray:
    path = Path(features_path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "unit_id":
            raise FeatureMismatchError(f"{path}: first column must be unit_id")
        k = len(header) - 1
        by_unit: dict[str, list[float]] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k + 1:
                raise FeatureMismatchError(f"{path} line {line_no}: expected {k + 1} columns")
            uid = row[0]
            if uid in by_unit:
                raise FeatureMismatchError(f"{path}: duplicate unit {uid!r}")
            try:
                by_unit[uid] = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise FeatureMismatchError(f"{path} line {line_no}: {exc}")

    known = set(unit_order)
    extra = set(by_unit) - known
    if extra:
        raise FeatureMismatchError(f"features include unknown unit_ids: {sorted(extra)[:5]}")
    missing = known - set(by_unit)
    if missing:
        raise FeatureMismatchError(f"features missing unit_ids: {sorted(missing)[:5]}")
    return np.array([by_unit[u] for u in unit_order], dtype=float)


def _read_csv_rows(path: Path, required: tuple[str, ...]):
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(required) <= set(reader.fieldnames):
            raise InvalidPanelError(
                f"{path}: header must contain columns {', '.join(required)}"
            )
        out = []
        for line_no, rec in enumerate(reader, start=2):
            if all(v in (None, "") for v in rec.values()):
                continue
            out.append((line_no, rec))
    return out


def write_panel(panel: PanelData, outcomes_path, features_path=None) -> None:
    """Write a panel back to the long-format CSV schema (full float precision)."""
    with Path(outcomes_path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["unit_id", "t", "y", "d"])
        for i, uid in enumerate(panel.unit_ids):
            d = int(panel.treatment[i])
            for t in range(panel.n_times):
                w.writerow([uid, t + 1, repr(float(panel.outcomes[i, t])), d])
    if features_path is not None and panel.n_features > 0:
        with Path(features_path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["unit_id"] + [f"x{j + 1}" for j in range(panel.n_features)])
            for i, uid in enumerate(panel.unit_ids):
                w.writerow([uid] + [repr(float(v)) for v in panel.features[i]])


def aggregate_groups(panel: PanelData) -> GroupSeries:
    """Per-time arithmetic means over the control and treated groups."""
    control = panel.outcomes[panel.control_mask].mean(axis=0)
    treated = panel.outcomes[panel.treated_mask].mean(axis=0)
    return GroupSeries(control, treated, panel.t0)


def split_periods(panel: PanelData) -> tuple[np.ndarray, np.ndarray]:
    """Per-subject means over the pre period (t <= t0) and post period (t > t0)."""
    pre = panel.outcomes[:, : panel.t0].mean(axis=1)
    post = panel.outcomes[:, panel.t0 :].mean(axis=1)
    return pre, post
