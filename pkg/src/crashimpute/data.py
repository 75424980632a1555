"""Masked tabular data, standardization and CSV I/O."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyRowOrColumn,
    InvalidConfig,
    TooFewObserved,
    ZeroVariance,
)

SIGNIFICANT_DIGITS = 9
LABEL_COLUMN = "label"
WEIGHT_COLUMN = "weight"


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MaskedTable:
    """Sample-by-feature matrix with an observability mask.

    Parameters
    ----------
    values : array of shape (m, d)
        Cell values. Unobserved cells are overwritten with NaN on construction
        and must never be read.
    mask : bool array of shape (m, d)
        True where the cell is observed.
    column_names : sequence of str, optional
        Defaults to ``x0 .. x{d-1}``.
    """

    values: np.ndarray
    mask: np.ndarray
    column_names: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        mask = np.array(self.mask, dtype=bool, copy=True)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DimensionMismatch(f"values must be a non-empty 2-D matrix, got shape {values.shape}")
        if mask.shape != values.shape:
            raise DimensionMismatch(f"mask shape {mask.shape} != values shape {values.shape}")
        if not np.all(np.isfinite(values[mask])):
            raise InvalidConfig("observed cells must be finite")
        if not mask.any(axis=1).all():
            raise EmptyRowOrColumn(f"rows without observed cells: {np.flatnonzero(~mask.any(axis=1)).tolist()}")
        if not mask.any(axis=0).all():
            raise EmptyRowOrColumn(f"columns without observed cells: {np.flatnonzero(~mask.any(axis=0)).tolist()}")
        values[~mask] = np.nan
        names = tuple(self.column_names) or tuple(f"x{j}" for j in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise DimensionMismatch(f"{len(names)} column names for {values.shape[1]} columns")
        object.__setattr__(self, "values", _frozen(values, float))
        object.__setattr__(self, "mask", _frozen(mask, bool))
        object.__setattr__(self, "column_names", names)

    @classmethod
    def from_array(cls, values, column_names=()):
        """Build a table treating NaN cells as unobserved."""
        values = np.asarray(values, dtype=float)
        return cls(values, ~np.isnan(values), column_names)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_missing(self):
        return int((~self.mask).sum())

    def is_complete(self):
        return bool(self.mask.all())

    def take_rows(self, idx):
        return MaskedTable(self.values[idx], self.mask[idx], self.column_names)

    def take_columns(self, idx):
        idx = list(idx)
        return MaskedTable(self.values[:, idx], self.mask[:, idx],
                           tuple(self.column_names[j] for j in idx))


@dataclass(frozen=True, eq=False)
class Scaler:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        stds = np.asarray(self.stds, dtype=float)
        if np.any(stds <= 0):
            raise ZeroVariance(int(np.flatnonzero(stds <= 0)[0]))
        object.__setattr__(self, "means", _frozen(self.means, float))
        object.__setattr__(self, "stds", _frozen(stds, float))

    @classmethod
    def identity(cls, d):
        return cls(np.zeros(d), np.ones(d))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """A MaskedTable with +1/-1 labels (+1 = crash) and optional sample weights."""

    table: MaskedTable
    labels: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != self.table.shape[0]:
            raise DimensionMismatch(f"{labels.shape} labels for {self.table.shape[0]} rows")
        if not np.isin(labels, (-1, 1)).all():
            raise InvalidConfig("labels must be -1 or +1")
        object.__setattr__(self, "labels", _frozen(labels, np.int64))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != labels.shape or np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise InvalidConfig("weights must be finite, positive and one per row")
            object.__setattr__(self, "weights", _frozen(w, float))

    @property
    def n_samples(self):
        return self.table.shape[0]

    def subset(self, idx):
        idx = np.asarray(idx)
        return LabeledDataset(
            self.table.take_rows(idx),
            self.labels[idx],
            None if self.weights is None else self.weights[idx],
        )

    def class_counts(self):
        return int((self.labels == 1).sum()), int((self.labels == -1).sum())


def fit_scaler(table: MaskedTable) -> Scaler:
    """Per-column mean and population std over observed entries only."""
    means = np.empty(table.shape[1])
    stds = np.empty(table.shape[1])
    for j in range(table.shape[1]):
        col = table.values[table.mask[:, j], j]
        if col.size < 2:
            raise TooFewObserved(table.column_names[j])
        means[j] = col.mean()
        stds[j] = col.std()
        if stds[j] == 0.0 or np.all(col == col[0]):
            raise ZeroVariance(table.column_names[j])
    return Scaler(means, stds)


def _check_scaler(table, scaler):
    if scaler.means.shape != (table.shape[1],):
        raise DimensionMismatch(f"scaler has {scaler.means.shape[0]} columns, table has {table.shape[1]}")


def transform(table: MaskedTable, scaler: Scaler) -> MaskedTable:
    _check_scaler(table, scaler)
    return MaskedTable((table.values - scaler.means) / scaler.stds, table.mask, table.column_names)


def inverse_transform(table: MaskedTable, scaler: Scaler) -> MaskedTable:
    _check_scaler(table, scaler)
    return MaskedTable(table.values * scaler.stds + scaler.means, table.mask, table.column_names)


def apply_mask(table: MaskedTable, extra_mask) -> MaskedTable:
    """Hide additional cells; the result must keep every row and column observed."""
    extra_mask = np.asarray(extra_mask, dtype=bool)
    if extra_mask.shape != table.shape:
        raise DimensionMismatch(f"mask shape {extra_mask.shape} != table shape {table.shape}")
    return MaskedTable(table.values, table.mask & extra_mask, table.column_names)


def standardize(data: LabeledDataset, scaler: Scaler | None = None):
    """Standardize a dataset's table; returns (dataset, scaler)."""
    scaler = fit_scaler(data.table) if scaler is None else scaler
    return LabeledDataset(transform(data.table, scaler), data.labels, data.weights), scaler


# --- CSV -----------------------------------------------------------------

def format_value(x) -> str:
    return f"{x:.{SIGNIFICANT_DIGITS}g}"


def dataset_to_csv(data: LabeledDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(data.table.column_names) + [LABEL_COLUMN]
    if data.weights is not None:
        header.append(WEIGHT_COLUMN)
    writer.writerow(header)
    t = data.table
    for i in range(t.shape[0]):
        row = [format_value(v) if ok else "" for v, ok in zip(t.values[i], t.mask[i])]
        row.append(str(int(data.labels[i])))
        if data.weights is not None:
            row.append(format_value(data.weights[i]))
        writer.writerow(row)
    return buf.getvalue()


def dataset_from_csv(text: str) -> LabeledDataset:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InvalidConfig("empty CSV")
    header = rows[0]
    if LABEL_COLUMN not in header:
        raise InvalidConfig(f"CSV lacks a {LABEL_COLUMN!r} column")
    label_at = header.index(LABEL_COLUMN)
    weight_at = header.index(WEIGHT_COLUMN) if WEIGHT_COLUMN in header else None
    feat_at = [j for j, h in enumerate(header) if j not in (label_at, weight_at)]
    body = [r for r in rows[1:] if r]
    values = np.full((len(body), len(feat_at)), np.nan)
    labels = np.empty(len(body), dtype=np.int64)
    weights = np.empty(len(body)) if weight_at is not None else None
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise InvalidConfig(f"row {i + 1} has {len(r)} fields, expected {len(header)}")
        for k, j in enumerate(feat_at):
            if r[j].strip() != "":
                values[i, k] = float(r[j])
        labels[i] = int(float(r[label_at]))
        if weights is not None:
            weights[i] = float(r[weight_at])
    table = MaskedTable.from_array(values, [header[j] for j in feat_at])
    return LabeledDataset(table, labels, weights)


def save_dataset(data: LabeledDataset, path) -> None:
    Path(path).write_text(dataset_to_csv(data))


def load_dataset(path) -> LabeledDataset:
    return dataset_from_csv(Path(path).read_text())
