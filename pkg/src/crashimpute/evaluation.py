"""Masks, error measures, ROC/AUC, k-fold splitting and the CV pipeline."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import classifiers as clf
from .data import LabeledDataset, MaskedTable, apply_mask, fit_scaler, format_value
from .errors import (
    CrashImputeError,
    EmptyProbe,
    InfeasibleRatio,
    InvalidConfig,
    SingleClass,
    TooFewPerClass,
)
from .imbalance import ImbalanceConfig, rebalance
from .imputers import IMPUTERS, fit_impute, impute_with

MASK_ATTEMPTS = 1000


def derive_seed(*keys) -> int:
    """Stable 32-bit seed mixed from integer keys (base seed, repeat, fold, ...)."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


# --- masks and RMSE --------------------------------------------------------------

def generate_mcar_mask(m: int, d: int, ratio: float, rng_seed: int = 0) -> np.ndarray:
    """Boolean observability mask, each cell hidden independently with prob ``ratio``.

    Rows or columns left with no observed cell are redrawn (whole row, then
    whole column) until none remain, at most 1000 rounds.
    """
    if not 0 <= ratio < 1:
        raise InfeasibleRatio(f"missing ratio must lie in [0, 1), got {ratio}")
    if m < 1 or d < 1:
        raise InvalidConfig("mask needs at least one row and one column")
    rng = np.random.default_rng(rng_seed)
    mask = rng.random((m, d)) >= ratio
    for _ in range(MASK_ATTEMPTS):
        bad_rows = np.flatnonzero(~mask.any(axis=1))
        for i in bad_rows:
            mask[i] = rng.random(d) >= ratio
        bad_cols = np.flatnonzero(~mask.any(axis=0))
        for j in bad_cols:
            mask[:, j] = rng.random(m) >= ratio
        if mask.any(axis=1).all() and mask.any(axis=0).all():
            return mask
    raise InfeasibleRatio(f"could not keep every row and column observed at ratio {ratio}")


def rmse(real_values, imputed_values, probe_mask) -> float:
    """Root mean squared error over the probe cells only."""
    probe = np.asarray(probe_mask, dtype=bool)
    n = int(probe.sum())
    if n == 0:
        raise EmptyProbe("no probe cells")
    diff = np.asarray(real_values, dtype=float)[probe] - np.asarray(imputed_values, dtype=float)[probe]
    return math.sqrt(float((diff ** 2).sum()) / n)


# --- classification measures -------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fn: int
    fp: int
    tp: int

    @property
    def total(self):
        return self.tn + self.fn + self.fp + self.tp

    @property
    def accuracy(self):
        return (self.tp + self.tn) / self.total if self.total else math.nan

    @property
    def sensitivity(self):
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else math.nan

    @property
    def specificity(self):
        return self.tn / (self.tn + self.fp) if self.tn + self.fp else math.nan

    @property
    def fpr(self):
        return self.fp / (self.tn + self.fp) if self.tn + self.fp else math.nan

    tpr = sensitivity


def confusion(scores, labels, threshold: float = 0.0) -> ConfusionMatrix:
    """Predict crash (+1) when score >= threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pred = scores >= threshold
    pos = labels > 0
    return ConfusionMatrix(
        tn=int((~pred & ~pos).sum()), fn=int((~pred & pos).sum()),
        fp=int((pred & ~pos).sum()), tp=int((pred & pos).sum()),
    )


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


def roc_auc(scores, labels) -> RocCurve:
    """ROC points at every distinct score (ties grouped) and trapezoidal AUC."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int((labels > 0).sum())
    n_neg = int((labels < 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = (labels[order] > 0).astype(float)
    # last index of each group of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(pos)[ends]
    fp = np.cumsum(1.0 - pos)[ends]
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[ends]]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)


def mann_whitney_auc(scores, labels) -> float:
    """Pairwise probability that a positive outscores a negative (ties count 1/2)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    p = scores[labels > 0]
    n = scores[labels < 0]
    if not len(p) or not len(n):
        raise SingleClass("AUC needs both classes")
    diff = p[:, None] - n[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    auc: float
    sensitivity: float
    specificity: float
    confusion: ConfusionMatrix
    rmse: Optional[float] = None

    def as_row(self) -> dict:
        c = self.confusion
        return {"accuracy": self.accuracy, "auc": self.auc, "sensitivity": self.sensitivity,
                "specificity": self.specificity, "tn": c.tn, "fn": c.fn, "fp": c.fp, "tp": c.tp,
                "rmse": self.rmse}


def evaluate_scores(scores, labels, threshold: float = 0.0, imputation_rmse=None) -> EvalReport:
    cm = confusion(scores, labels, threshold)
    return EvalReport(cm.accuracy, roc_auc(scores, labels).auc, cm.sensitivity, cm.specificity,
                      cm, imputation_rmse)


# --- folds ---------------------------------------------------------------------------

def kfold(labels, k: int = 10, stratified: bool = True, rng_seed: int = 0):
    """List of (train_idx, test_idx) pairs; folds are disjoint and cover every row.

    Stratified splitting shuffles each class and deals it round-robin over the
    folds, so fold class counts differ by at most one.
    """
    labels = np.asarray(labels)
    m = len(labels)
    if k < 2 or k > m:
        raise InvalidConfig(f"k={k} folds impossible for {m} samples")
    rng = np.random.default_rng(rng_seed)
    assign = np.empty(m, dtype=int)
    if stratified:
        offset = 0
        for cls in (1, -1):
            idx = np.flatnonzero(labels == cls)
            if len(idx) < k:
                raise TooFewPerClass(f"class {cls:+d} has {len(idx)} samples for {k} folds")
            idx = rng.permutation(idx)
            assign[idx] = (np.arange(len(idx)) + offset) % k
            offset += len(idx)
    else:
        idx = rng.permutation(m)
        assign[idx] = np.arange(m) % k
    all_idx = np.arange(m)
    return [(all_idx[assign != f], all_idx[assign == f]) for f in range(k)]


# --- pipeline --------------------------------------------------------------------

CLASSIFIERS = ("svm_linear", "svm_gaussian", "svm_polynomial", "adaboost")
_KERNEL_OF = {"svm_linear": clf.LINEAR, "svm_gaussian": clf.GAUSSIAN,
              "svm_polynomial": clf.POLYNOMIAL}


@dataclass(frozen=True)
class ModelSpec:
    classifier: str
    selected: bool = False

    def __post_init__(self):
        if self.classifier not in CLASSIFIERS:
            raise InvalidConfig(f"unknown classifier {self.classifier!r}; expected one of {CLASSIFIERS}")

    @property
    def name(self):
        return f"{self.classifier}({'selected' if self.selected else 'full'})"


ALL_MODELS = tuple(ModelSpec(c, s) for c in CLASSIFIERS for s in (False, True))


@dataclass(frozen=True)
class PipelineConfig:
    """One CV pipeline: optional masking, imputation, selection, rebalancing, models."""

    imputer: str = "ppca"
    c: int = 6
    kmeans_k: int = 5
    missing_ratio: float = 0.0
    imbalance: ImbalanceConfig = field(default_factory=ImbalanceConfig)
    models: tuple = (ModelSpec("svm_linear"),)
    C: float = 1.0
    bandwidth: float = 1.0
    adaboost_T: int = 100
    top_k: int = 8
    rf_trees: int = 100
    fold_scaling: bool = False
    imputer_max_iter: int = 500
    imputer_tol: float = 1e-5
    svm_tol: float = 1e-4

    def __post_init__(self):
        if self.imputer not in IMPUTERS:
            raise InvalidConfig(f"unknown imputer {self.imputer!r}; expected one of {IMPUTERS}")
        models = tuple(m if isinstance(m, ModelSpec) else ModelSpec(**m) for m in self.models)
        if not models:
            raise InvalidConfig("at least one model is required")
        object.__setattr__(self, "models", models)
        if isinstance(self.imbalance, dict):
            object.__setattr__(self, "imbalance", ImbalanceConfig(**self.imbalance))
        if not 0 <= self.missing_ratio < 1:
            raise InvalidConfig("missing_ratio must lie in [0, 1)")


def fit_classifier(name, X, y, weights, config: PipelineConfig):
    if name == "adaboost":
        return clf.adaboost_fit(X, y, config.adaboost_T, weights)
    return clf.svm_fit(X, y, _KERNEL_OF[name], config.C, weights, tol=config.svm_tol,
                       bandwidth=config.bandwidth)


@dataclass(eq=False)
class FoldArtifacts:
    """Everything fitted on one training fold; compared bitwise by the leakage tests."""

    imputer: object = None
    scaler: object = None
    ranking: tuple = ()
    selected: tuple = ()
    train_rows: Optional[np.ndarray] = None
    classifiers: dict = field(default_factory=dict)


def _complete_split(table: MaskedTable, train_idx, test_idx, config, seed):
    """Impute the training rows, then the test rows with the frozen training model."""
    train_t = table.take_rows(train_idx)
    test_t = table.take_rows(test_idx)
    if train_t.is_complete():
        model = None
        train_x = np.array(train_t.values)
    else:
        res = fit_impute(train_t, config.imputer, c=config.c, k=config.kmeans_k,
                         max_iter=config.imputer_max_iter, tol=config.imputer_tol, rng_seed=seed)
        model = res.model
        train_x = np.array(res.completed)
    if test_t.is_complete():
        test_x = np.array(test_t.values)
    elif model is not None:
        test_x = np.array(impute_with(model, test_t).completed)
    else:
        # complete training rows: fit on them so the test rows can be filled
        model = fit_impute(train_t, config.imputer, c=config.c, k=config.kmeans_k,
                           max_iter=config.imputer_max_iter, tol=config.imputer_tol,
                           rng_seed=seed).model
        test_x = np.array(impute_with(model, test_t).completed)
    return train_x, test_x, model


def run_fold(data: LabeledDataset, table: MaskedTable, train_idx, test_idx, config: PipelineConfig,
             seeds: dict, scorer: Callable | None = None):
    """Train on ``train_idx`` only and score ``test_idx``.

    ``table`` is the (possibly masked) view of ``data``. Returns
    ``({model_name: (scores, labels)}, artifacts, imputation_rmse)``.
    """
    art = FoldArtifacts()
    train_x, test_x, art.imputer = _complete_split(table, train_idx, test_idx, config, seeds["impute"])
    imp_rmse = None
    hidden = ~table.mask[train_idx] & data.table.mask[train_idx]
    if hidden.any():
        imp_rmse = rmse(data.table.values[train_idx], train_x, hidden)
    if config.fold_scaling:
        sc = fit_scaler(MaskedTable.from_array(train_x))
        train_x = (train_x - sc.means) / sc.stds
        test_x = (test_x - sc.means) / sc.stds
        art.scaler = sc
    y_train = data.labels[train_idx]
    y_test = data.labels[test_idx]
    if any(m.selected for m in config.models):
        art.ranking = tuple(clf.rf_feature_importance(train_x, y_train, config.rf_trees, seeds["rf"]))
        art.selected = tuple(clf.select_top_features(art.ranking, min(config.top_k, train_x.shape[1])))
    Xb, yb, wb = rebalance(train_x, y_train, config.imbalance, seeds["smote"])
    art.train_rows = Xb
    out = {}
    for spec in config.models:
        cols = list(art.selected) if spec.selected else slice(None)
        if scorer is not None:
            scores = scorer(Xb[:, cols], yb, wb, test_x[:, cols], y_test, seeds["model"])
        else:
            model = fit_classifier(spec.classifier, Xb[:, cols], yb, wb, config)
            art.classifiers[spec.name] = model
            scores = clf.score(model, test_x[:, cols])
        out[spec.name] = (np.asarray(scores, dtype=float), y_test)
    return out, art, imp_rmse


@dataclass(frozen=True)
class FoldRecord:
    repeat: int
    fold: int
    model: str
    report: EvalReport


@dataclass(eq=False)
class CvResult:
    records: list
    artifacts: dict = field(default_factory=dict)

    def models(self):
        return sorted({r.model for r in self.records})

    def per_repeat(self, model: str) -> list:
        """Fold-averaged measures for each repeat of one model."""
        reps = sorted({r.repeat for r in self.records if r.model == model})
        rows = []
        for rep in reps:
            recs = [r.report for r in self.records if r.model == model and r.repeat == rep]
            rows.append({key: _nanmean([getattr(x, key) for x in recs])
                         for key in ("accuracy", "auc", "sensitivity", "specificity", "rmse")})
        return rows

    def aggregate(self, model: str) -> dict:
        """Mean and sample standard deviation over repeats."""
        reps = self.per_repeat(model)
        out = {}
        for key in ("accuracy", "auc", "sensitivity", "specificity", "rmse"):
            vals = [r[key] for r in reps if r[key] is not None]
            out[key] = _nanmean(vals)
            out[key + "_std"] = float(np.std(vals, ddof=1)) if len(vals) > 1 else None
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["kind", "model", "repeat", "fold", "accuracy", "auc", "sensitivity",
                "specificity", "tn", "fn", "fp", "tp", "rmse"]
        w = csv.DictWriter(buf, cols, lineterminator="\n")
        w.writeheader()
        for r in sorted(self.records, key=lambda r: (r.model, r.repeat, r.fold)):
            w.writerow(_fmt_row({"kind": "fold", "model": r.model, "repeat": r.repeat,
                                 "fold": r.fold, **r.report.as_row()}))
        for model in self.models():
            agg = self.aggregate(model)
            w.writerow(_fmt_row({"kind": "mean", "model": model,
                                 **{k: agg[k] for k in ("accuracy", "auc", "sensitivity",
                                                        "specificity", "rmse")}}))
            w.writerow(_fmt_row({"kind": "std", "model": model,
                                 **{k: agg[k + "_std"] for k in ("accuracy", "auc", "sensitivity",
                                                                 "specificity", "rmse")}}))
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "folds": [{"model": r.model, "repeat": r.repeat, "fold": r.fold, **r.report.as_row()}
                      for r in sorted(self.records, key=lambda r: (r.model, r.repeat, r.fold))],
            "aggregate": {m: self.aggregate(m) for m in self.models()},
        }
        return json.dumps(_json_safe(doc), indent=2, sort_keys=True)


def _nanmean(vals):
    vals = [v for v in vals if v is not None and not (isinstance(v, float) and math.isnan(v))]
    return float(np.mean(vals)) if vals else None


def _fmt_row(row):
    out = {}
    for k, v in row.items():
        if v is None or (isinstance(v, float) and math.isnan(v)):
            out[k] = ""
        elif isinstance(v, float):
            out[k] = format_value(v)
        else:
            out[k] = v
    return out


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def run_cv(data: LabeledDataset, config: PipelineConfig, k: int = 10, repeats: int = 5,
           rng_seed: int = 0, keep_artifacts: bool = False, scorer: Callable | None = None,
           threshold: float = 0.0) -> CvResult:
    """Repeated stratified k-fold CV of one pipeline.

    Per repeat the MCAR mask (if ``missing_ratio`` > 0) covers the whole
    table; within each fold imputation, feature ranking, rebalancing and
    classifier fitting only see training rows. Every (repeat, fold) draws
    its own seeds from (rng_seed, repeat, fold), so results do not depend on
    execution order.

    ``scorer(X_train, y_train, w_train, X_test, y_test, seed)`` replaces the
    classifier, for harness checks.
    """
    if repeats < 1:
        raise InvalidConfig("repeats must be >= 1")
    records = []
    artifacts = {}
    for rep in range(repeats):
        table = data.table
        if config.missing_ratio > 0:
            mask = generate_mcar_mask(*table.shape, config.missing_ratio, derive_seed(rng_seed, rep, 1))
            table = apply_mask(table, mask)
        folds = kfold(data.labels, k, True, derive_seed(rng_seed, rep, 2))
        for f, (train_idx, test_idx) in enumerate(folds):
            seeds = {name: derive_seed(rng_seed, rep, 3, f, i)
                     for i, name in enumerate(("impute", "rf", "smote", "model"))}
            try:
                out, art, imp_rmse = run_fold(data, table, train_idx, test_idx, config, seeds, scorer)
            except CrashImputeError as exc:
                exc.args = (f"repeat {rep}, fold {f}: {exc}",)
                raise
            for name, (scores, labels) in out.items():
                records.append(FoldRecord(rep, f, name, evaluate_scores(scores, labels, threshold, imp_rmse)))
            if keep_artifacts:
                artifacts[(rep, f)] = art
    return CvResult(records, artifacts)
