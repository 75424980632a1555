"""Imbalance handling: cost weighting, SMOTE and matched case-control sampling.

A class-weighted ratio ``gamma`` is applied as

=============  ==========================  ============================
mode           positive/negative cost       synthetic multiplier
=============  ==========================  ============================
cost           gamma                        (none)
smote          1                            gamma
cost_smote     sqrt(gamma)                  sqrt(gamma)
=============  ==========================  ============================

The synthetic count is ``round_half_up(multiplier * n_minority)``.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import LabeledDataset, MaskedTable
from .errors import IncompleteRows, InvalidConfig, MinRatio, NoCandidates, TooFewSamples

NONE, COST, SMOTE, COST_SMOTE = "none", "cost", "smote", "cost_smote"
MODES = (NONE, COST, SMOTE, COST_SMOTE)


@dataclass(frozen=True)
class ImbalanceConfig:
    gamma: float = 10.0
    mode: str = COST
    smote_k: int = 5

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidConfig(f"unknown imbalance mode {self.mode!r}; expected one of {MODES}")
        if not self.gamma >= 1:
            raise InvalidConfig("gamma must be >= 1")
        if self.smote_k < 1:
            raise InvalidConfig("smote_k must be >= 1")

    @property
    def cost_ratio(self) -> float:
        if self.mode == COST:
            return float(self.gamma)
        if self.mode == COST_SMOTE:
            return math.sqrt(self.gamma)
        return 1.0

    @property
    def smote_multiplier(self) -> float:
        if self.mode == SMOTE:
            return float(self.gamma)
        if self.mode == COST_SMOTE:
            return math.sqrt(self.gamma)
        return 0.0


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def synthetic_count(n_minority: int, multiplier: float) -> int:
    return round_half_up(multiplier * n_minority)


def cost_weights(labels, gamma: float) -> np.ndarray:
    """Weight gamma for positive (crash) samples and 1 for negatives."""
    labels = np.asarray(labels)
    return np.where(labels > 0, float(gamma), 1.0)


def _neighbors(X, k):
    """Indices of the k nearest other rows; ties go to the lower row index."""
    sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(sq, np.inf)
    return np.argsort(sq, axis=1, kind="stable")[:, :k]


def smote(minority, multiplier: float, k: int = 5, rng_seed: int = 0, return_pairs: bool = False):
    """Synthetic minority rows on segments between minority nearest neighbours.

    Each minority row is used ``floor(total / n)`` times as a base and the
    remainder is spread over distinct random rows. Every synthetic row is
    ``x + lam * (x_nn - x)`` with ``lam ~ U[0, 1]`` and ``x_nn`` drawn from
    the k nearest minority neighbours of ``x``.

    With ``return_pairs`` the base and neighbour row indices are returned too.
    """
    X = np.asarray(minority, dtype=float)
    if X.ndim != 2:
        raise InvalidConfig("minority rows must form a 2-D array")
    if not np.all(np.isfinite(X)):
        raise IncompleteRows("SMOTE needs complete rows; impute first")
    n = X.shape[0]
    if n < 2:
        raise TooFewSamples(f"SMOTE needs at least 2 minority rows, got {n}")
    if not 1 <= k < n:
        raise TooFewSamples(f"k={k} neighbours requested from {n} minority rows")
    if multiplier < 0:
        raise InvalidConfig("multiplier must be non-negative")
    total = synthetic_count(n, multiplier)
    rng = np.random.default_rng(rng_seed)
    reps, extra = divmod(total, n)
    base = np.concatenate([np.tile(np.arange(n), reps),
                           np.sort(rng.choice(n, size=extra, replace=False))]).astype(int)
    nn = _neighbors(X, k)
    partner = nn[base, rng.integers(0, k, size=total)]
    lam = rng.random(total)[:, None]
    rows = X[base] + lam * (X[partner] - X[base])
    if return_pairs:
        return rows, base, partner
    return rows


def rebalance(X, y, config: ImbalanceConfig, rng_seed: int = 0, weights=None):
    """Apply an imbalance solution to complete training rows.

    Returns ``(X, y, weights)``; synthetic rows are appended after the
    originals and carry the positive-class cost.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    base_w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    if config.mode == NONE:
        return X, y, base_w
    if config.smote_multiplier > 0:
        minority = X[y > 0]
        k = min(config.smote_k, len(minority) - 1)
        synth = smote(minority, config.smote_multiplier, k, rng_seed)
        X = np.vstack([X, synth])
        y = np.concatenate([y, np.ones(len(synth), dtype=y.dtype)])
        base_w = np.concatenate([base_w, np.ones(len(synth))])
    return X, y, base_w * cost_weights(y, config.cost_ratio)


# --- matched case-control ----------------------------------------------------------

SLOT_MINUTES = 5


def parse_slot(text: str) -> int:
    """'HH:MM' -> minutes after midnight on the 5-minute grid."""
    try:
        hh, mm = text.strip().split(":")
        minutes = int(hh) * 60 + int(mm)
    except ValueError as exc:
        raise InvalidConfig(f"bad slot {text!r}; expected HH:MM") from exc
    if not 0 <= minutes <= 23 * 60 + 55 or minutes % SLOT_MINUTES:
        raise InvalidConfig(f"slot {text!r} is not on the 00:00-23:55 five-minute grid")
    return minutes


def format_slot(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def day_type(date: dt.date) -> str:
    return "weekend" if date.weekday() >= 5 else "weekday"


@dataclass(frozen=True, eq=False)
class TrafficRecord:
    """Detector snapshot at one location and five-minute slot (NaN = missing)."""

    location_id: str
    date: dt.date
    slot: int
    features: np.ndarray
    record_id: Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.slot <= 23 * 60 + 55 or self.slot % SLOT_MINUTES:
            raise InvalidConfig(f"slot {self.slot} outside the 00:00-23:55 grid")
        object.__setattr__(self, "features", np.asarray(self.features, dtype=float))

    @property
    def day_type(self):
        return day_type(self.date)


CrashRecord = TrafficRecord
ArchiveRecord = TrafficRecord


@dataclass(frozen=True, eq=False)
class MatchResult:
    dataset: LabeledDataset
    # crash index -> number of controls found, for crashes matched below ratio
    underfilled: dict = field(default_factory=dict)
    # archive indices of the controls, in dataset order
    control_sources: tuple = ()


def match_controls(crashes: Sequence[TrafficRecord], archive: Sequence[TrafficRecord], ratio: int = 10,
                   rng_seed: int = 0, column_names=()) -> MatchResult:
    """Pair every crash with ``ratio`` non-crash records.

    Controls share the crash's location, five-minute slot and day type
    (weekday/weekend) but come from a different calendar day. They are drawn
    without replacement per crash; different crashes may share a control.
    Rows are ordered crash, its controls, next crash, ...
    """
    if ratio < 1:
        raise MinRatio(f"ratio must be >= 1, got {ratio}")
    index = {}
    for a, rec in enumerate(archive):
        index.setdefault((rec.location_id, rec.day_type, rec.slot), []).append(a)
    rows, labels, sources = [], [], []
    underfilled = {}
    for c, crash in enumerate(crashes):
        pool = [a for a in index.get((crash.location_id, crash.day_type, crash.slot), ())
                if archive[a].date != crash.date]
        if not pool:
            raise NoCandidates(crash.record_id if crash.record_id is not None else c)
        rng = np.random.default_rng(np.random.SeedSequence([rng_seed, c]))
        if len(pool) > ratio:
            chosen = [pool[i] for i in np.sort(rng.choice(len(pool), size=ratio, replace=False))]
        else:
            chosen = pool
            if len(pool) < ratio:
                underfilled[c] = len(pool)
        rows.append(crash.features)
        labels.append(1)
        for a in chosen:
            rows.append(archive[a].features)
            labels.append(-1)
            sources.append(a)
    table = MaskedTable.from_array(np.vstack(rows), column_names)
    return MatchResult(LabeledDataset(table, np.array(labels)), underfilled, tuple(sources))


RECORD_HEAD = ("location_id", "date", "slot")


def load_records(path) -> tuple:
    """Read records CSV: location_id, date (ISO), slot (HH:MM), then feature columns.

    An optional ``record_id`` column may follow ``slot``. Returns
    ``(records, feature_names)``.
    """
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header[:3]) != RECORD_HEAD:
            raise InvalidConfig(f"records CSV must start with columns {RECORD_HEAD}")
        has_id = len(header) > 3 and header[3] == "record_id"
        start = 4 if has_id else 3
        names = tuple(header[start:])
        records = []
        for row in reader:
            if not row:
                continue
            feats = [float(v) if v.strip() else np.nan for v in row[start:]]
            records.append(TrafficRecord(
                row[0], dt.date.fromisoformat(row[1]), parse_slot(row[2]),
                np.array(feats), row[3] if has_id else None,
            ))
    return records, names
