"""Sensitivity-analysis experiments and their reports.

Every experiment expands its grids into independent cells. A cell's seeds are
derived from (base seed, repeat[, ...]) only, so cells can run in any order or
in a process pool and the sorted report is byte-identical either way.
Wall-clock timings are the one non-deterministic output and live in a
separate ``*_timing.csv`` sidecar.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import classifiers as clf
from .data import (LabeledDataset, MaskedTable, apply_mask, fit_scaler, format_value,
                   load_dataset, transform)
from .errors import InvalidConfig
from .evaluation import (CLASSIFIERS, ModelSpec, PipelineConfig, derive_seed, evaluate_scores,
                         fit_classifier, generate_mcar_mask, rmse, run_cv)
from .imbalance import COST, COST_SMOTE, MODES, SMOTE, ImbalanceConfig, rebalance
from .imputers import IMPUTERS, KMEANS, LSPCA, MEAN, PPCA, VBPCA, fit_impute, impute_with
from .synth import GeneratorConfig, generate

IMBALANCE_SWEEP = "imbalance_sweep"
IMPUTER_DIM_SWEEP = "imputer_dim_sweep"
IMPUTER_RATIO_SWEEP = "imputer_ratio_sweep"
MISSING_VS_AUC = "missing_vs_auc"
VALIDATION = "validation"
EXPERIMENTS = (IMBALANCE_SWEEP, IMPUTER_DIM_SWEEP, IMPUTER_RATIO_SWEEP, MISSING_VS_AUC, VALIDATION)

RATIO_GRID = tuple(round(0.05 * i, 2) for i in range(13))
GAMMA_GRID = (1.0, 5.0, 10.0, 20.0, 30.0)

# imputation experiments run on a small table; classification ones on the 1:10 table
IMPUTATION_DATASET = {"n_crash": 18, "n_noncrash": 182}
CLASSIFICATION_DATASET = {"n_crash": 123, "n_noncrash": 1230}

_DEFAULT_RATIOS = {
    IMPUTER_DIM_SWEEP: (0.2, 0.4, 0.6),
    IMPUTER_RATIO_SWEEP: RATIO_GRID,
    MISSING_VS_AUC: RATIO_GRID,
}
_DEFAULT_IMPUTERS = {
    IMPUTER_DIM_SWEEP: (LSPCA, PPCA, VBPCA),
    IMPUTER_RATIO_SWEEP: (MEAN, KMEANS, LSPCA, PPCA, VBPCA),
    MISSING_VS_AUC: (PPCA, LSPCA, MEAN, KMEANS),
    IMBALANCE_SWEEP: (PPCA,),
    VALIDATION: (PPCA,),
}

METRICS = ("accuracy", "auc", "sensitivity", "specificity")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to re-run an experiment; see ``from_dict`` for JSON input.

    ``dataset`` is either a generator-config mapping (missing ``rng_seed``
    defaults to ``seed``) or a path to a dataset CSV. Grids left as ``None``
    take the experiment's defaults.
    """

    experiment: str
    dataset: object = None
    seed: int = 0
    repeats: int = 5
    folds: int = 10
    gammas: tuple = GAMMA_GRID
    modes: tuple = (COST, SMOTE, COST_SMOTE)
    classifiers: tuple = CLASSIFIERS
    models: Optional[tuple] = None
    c_grid: tuple = (1, 2, 4, 6, 8, 10, 12, 15)
    ratios: Optional[tuple] = None
    imputers: Optional[tuple] = None
    c: int = 6
    kmeans_k: int = 5
    gamma: float = 10.0
    mode: str = COST
    C: float = 1.0
    bandwidth: float = 1.0
    adaboost_T: int = 100
    top_k: int = 8
    rf_trees: int = 100
    imputer_max_iter: int = 500
    imputer_tol: float = 1e-5
    fold_scaling: bool = False
    validation_ratio: float = 0.21
    validation_dataset: object = None
    validation_scaling: str = "train"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidConfig(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.repeats < 1:
            raise InvalidConfig("repeats must be >= 1")
        for name in ("gammas", "modes", "classifiers", "c_grid", "ratios", "imputers", "models"):
            val = getattr(self, name)
            if val is None:
                continue
            val = tuple(val)
            if not val:
                raise InvalidConfig(f"grid {name!r} must be non-empty")
            object.__setattr__(self, name, val)
        if self.ratios is None and self.experiment in _DEFAULT_RATIOS:
            object.__setattr__(self, "ratios", _DEFAULT_RATIOS[self.experiment])
        if self.imputers is None:
            object.__setattr__(self, "imputers", _DEFAULT_IMPUTERS[self.experiment])
        if self.models is None:
            models = ALL_MODEL_NAMES if self.experiment == MISSING_VS_AUC else \
                tuple(ModelSpec(c).name for c in self.classifiers)
            object.__setattr__(self, "models", models)
        object.__setattr__(self, "models", tuple(_parse_model(m).name for m in self.models))
        for m in self.modes:
            if m not in MODES:
                raise InvalidConfig(f"unknown mode {m!r}")
        for c in self.classifiers:
            if c not in CLASSIFIERS:
                raise InvalidConfig(f"unknown classifier {c!r}")
        for imp in self.imputers:
            if imp not in IMPUTERS:
                raise InvalidConfig(f"unknown imputer {imp!r}")
        for r in self.ratios or ():
            if not 0 <= r < 1:
                raise InvalidConfig(f"missing ratio {r} outside [0, 1)")
        if any(g < 1 for g in self.gammas):
            raise InvalidConfig("gammas must be >= 1")
        if any(int(c) != c or c < 1 for c in self.c_grid):
            raise InvalidConfig("c_grid entries must be positive integers")
        if self.validation_scaling not in ("train", "separate"):
            raise InvalidConfig("validation_scaling must be 'train' or 'separate'")
        if not 0 <= self.validation_ratio < 1:
            raise InvalidConfig("validation_ratio must lie in [0, 1)")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise InvalidConfig(f"unknown experiment fields: {sorted(unknown)}")
        if "experiment" not in doc:
            raise InvalidConfig("experiment id is required")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from exc

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


ALL_MODEL_NAMES = tuple(ModelSpec(c, s).name for c in CLASSIFIERS for s in (False, True))


def _parse_model(m) -> ModelSpec:
    """Accept 'svm_linear', 'svm_linear(selected)' or {'classifier':..., 'selected':...}."""
    if isinstance(m, ModelSpec):
        return m
    if isinstance(m, dict):
        return ModelSpec(**m)
    name = str(m)
    if name.endswith("(selected)"):
        return ModelSpec(name[:-len("(selected)")], True)
    if name.endswith("(full)"):
        name = name[:-len("(full)")]
    return ModelSpec(name, False)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# --- datasets --------------------------------------------------------------------

def _generator_config(spec: ExperimentSpec, source, defaults: dict) -> GeneratorConfig:
    doc = dict(defaults)
    doc.update(source or {})
    doc.setdefault("rng_seed", spec.seed)
    return GeneratorConfig.from_dict(doc)


def load_experiment_dataset(spec: ExperimentSpec) -> LabeledDataset:
    if isinstance(spec.dataset, (str, Path)):
        return load_dataset(spec.dataset)
    if spec.dataset is not None and not isinstance(spec.dataset, dict):
        raise InvalidConfig("dataset must be a generator config object or a CSV path")
    imputation = spec.experiment in (IMPUTER_DIM_SWEEP, IMPUTER_RATIO_SWEEP)
    defaults = IMPUTATION_DATASET if imputation else CLASSIFICATION_DATASET
    return generate(_generator_config(spec, spec.dataset, defaults))


def dataset_fingerprint(spec: ExperimentSpec) -> dict:
    if isinstance(spec.dataset, (str, Path)):
        digest = hashlib.sha256(Path(spec.dataset).read_bytes()).hexdigest()
        return {"source": "csv", "path": str(spec.dataset), "sha256": digest}
    return {"source": "synthetic"}


# --- cells -----------------------------------------------------------------------

def _pipeline(spec: ExperimentSpec, imputer: str, ratio: float, imbalance: ImbalanceConfig, models):
    return PipelineConfig(
        imputer=imputer, c=spec.c, kmeans_k=spec.kmeans_k, missing_ratio=ratio,
        imbalance=imbalance, models=tuple(_parse_model(m) for m in models), C=spec.C,
        bandwidth=spec.bandwidth, adaboost_T=spec.adaboost_T, top_k=spec.top_k,
        rf_trees=spec.rf_trees, fold_scaling=spec.fold_scaling,
        imputer_max_iter=spec.imputer_max_iter, imputer_tol=spec.imputer_tol,
    )


def _cv_rows(result, base: dict):
    rows = []
    for model in result.models():
        (rep,) = result.per_repeat(model)
        recs = [r.report.confusion for r in result.records if r.model == model]
        row = dict(base, model=model, **{k: rep[k] for k in METRICS})
        row.update(tn=sum(c.tn for c in recs), fn=sum(c.fn for c in recs),
                   fp=sum(c.fp for c in recs), tp=sum(c.tp for c in recs), rmse=rep["rmse"])
        rows.append(row)
    return rows


def _imbalance_cell(spec, data, gamma, mode, repeat):
    config = _pipeline(spec, spec.imputers[0], 0.0, ImbalanceConfig(gamma, mode),
                       [ModelSpec(c) for c in spec.classifiers])
    # the fold split depends on the repeat only, so gammas and modes are paired
    res = run_cv(data, config, spec.folds, 1, derive_seed(spec.seed, repeat))
    base = {"experiment": spec.experiment, "seed": spec.seed, "repeat": repeat,
            "gamma": gamma, "mode": mode}
    return _cv_rows(res, base), []


def _missing_auc_cell(spec, data, ratio, imputer, repeat):
    config = _pipeline(spec, imputer, ratio, ImbalanceConfig(spec.gamma, spec.mode), spec.models)
    res = run_cv(data, config, spec.folds, 1, derive_seed(spec.seed, repeat))
    base = {"experiment": spec.experiment, "seed": spec.seed, "repeat": repeat,
            "ratio": ratio, "imputer": imputer}
    return _cv_rows(res, base), []


def _masked(data, ratio, spec, repeat):
    # masks depend on (seed, repeat) only; with a shared uniform draw they nest across ratios
    mask = generate_mcar_mask(*data.table.shape, ratio, derive_seed(spec.seed, repeat, 1))
    return apply_mask(data.table, mask)


def _imputation_cell(spec, data, ratio, c, imputer, repeat):
    base = {"experiment": spec.experiment, "seed": spec.seed, "repeat": repeat, "ratio": ratio}
    if spec.experiment == IMPUTER_DIM_SWEEP:
        base["c"] = c
    base["imputer"] = imputer
    if ratio == 0:
        return [dict(base, rmse=None, iterations=0, converged=None)], []
    table = _masked(data, ratio, spec, repeat)
    t0 = time.perf_counter()
    res = fit_impute(table, imputer, c=c, k=spec.kmeans_k, max_iter=spec.imputer_max_iter,
                     tol=spec.imputer_tol, rng_seed=derive_seed(spec.seed, repeat, 2))
    elapsed = time.perf_counter() - t0
    probe = ~table.mask & data.table.mask
    row = dict(base, rmse=rmse(data.table.values, res.completed, probe),
               iterations=res.iterations, converged=res.converged)
    return [row], [dict(base, seconds=elapsed)]


def _run_cell(args):
    kind, spec, data, coords = args
    return _CELL_FUNCS[kind](spec, data, *coords)


_CELL_FUNCS = {
    IMBALANCE_SWEEP: _imbalance_cell,
    MISSING_VS_AUC: _missing_auc_cell,
    IMPUTER_DIM_SWEEP: _imputation_cell,
    IMPUTER_RATIO_SWEEP: _imputation_cell,
}


def _cells(spec: ExperimentSpec):
    reps = range(spec.repeats)
    if spec.experiment == IMBALANCE_SWEEP:
        return [(g, m, r) for g in spec.gammas for m in spec.modes for r in reps]
    if spec.experiment == MISSING_VS_AUC:
        return [(x, i, r) for x in spec.ratios for i in spec.imputers for r in reps]
    if spec.experiment == IMPUTER_DIM_SWEEP:
        return [(x, int(c), i, r) for x in spec.ratios for c in spec.c_grid
                for i in spec.imputers for r in reps]
    if spec.experiment == IMPUTER_RATIO_SWEEP:
        return [(x, spec.c, i, r) for x in spec.ratios for i in spec.imputers for r in reps]
    raise InvalidConfig(f"{spec.experiment} is not a grid experiment")


# --- validation ------------------------------------------------------------------

def _validation_split(spec: ExperimentSpec):
    """(train, validation) datasets, both standardized."""
    if isinstance(spec.dataset, (str, Path)):
        if spec.validation_dataset is None:
            raise InvalidConfig("a CSV training dataset needs validation_dataset")
        train, val = load_dataset(spec.dataset), load_dataset(spec.validation_dataset)
        scaled = False
    else:
        src = dict(CLASSIFICATION_DATASET)
        src.update(spec.dataset or {})
        val_src = {"n_crash": 120, "n_noncrash": 1200}
        val_src.update(spec.validation_dataset or {})
        cfg = _generator_config(spec, dict(src, n_crash=src["n_crash"] + val_src["n_crash"],
                                           n_noncrash=src["n_noncrash"] + val_src["n_noncrash"],
                                           standardize=False), {})
        full = generate(cfg)
        pos = np.flatnonzero(full.labels == 1)
        neg = np.flatnonzero(full.labels == -1)
        train_idx = np.r_[pos[:src["n_crash"]], neg[:src["n_noncrash"]]]
        val_idx = np.r_[pos[src["n_crash"]:], neg[src["n_noncrash"]:]]
        train, val = full.subset(train_idx), full.subset(val_idx)
        scaled = not src.get("standardize", True)
    if not scaled:
        train_scaler = fit_scaler(train.table)
        val_scaler = train_scaler if spec.validation_scaling == "train" else fit_scaler(val.table)
        train = LabeledDataset(transform(train.table, train_scaler), train.labels, train.weights)
        val = LabeledDataset(transform(val.table, val_scaler), val.labels, val.weights)
    return train, val


def run_validation(spec: ExperimentSpec):
    """Fit imputer and classifiers on the training set, freeze, score the validation set.

    Each row also carries the same classifier's measures on the complete
    (unmasked) validation rows, the ``*_complete`` columns.
    """
    train, val = _validation_split(spec)
    imputer = spec.imputers[0]
    train_t = train.table
    res = fit_impute(train_t, imputer, c=spec.c, k=spec.kmeans_k, max_iter=spec.imputer_max_iter,
                     tol=spec.imputer_tol, rng_seed=derive_seed(spec.seed, 0, 2))
    train_x = np.array(res.completed)
    val_t = val.table
    if spec.validation_ratio > 0:
        mask = generate_mcar_mask(*val_t.shape, spec.validation_ratio, derive_seed(spec.seed, 0, 1))
        val_t = apply_mask(val_t, mask)
    val_x = np.array(impute_with(res.model, val_t).completed)
    probe = ~val_t.mask & val.table.mask
    val_rmse = rmse(val.table.values, val_x, probe) if probe.any() else None
    complete_x = np.array(impute_with(res.model, val.table).completed)

    models = [_parse_model(m) for m in spec.models]
    selected = ()
    if any(m.selected for m in models):
        ranking = clf.rf_feature_importance(train_x, train.labels, spec.rf_trees, derive_seed(spec.seed, 0, 4))
        selected = clf.select_top_features(ranking, min(spec.top_k, train_x.shape[1]))
    Xb, yb, wb = rebalance(train_x, train.labels, ImbalanceConfig(spec.gamma, spec.mode),
                           derive_seed(spec.seed, 0, 3), train.weights)
    config = _pipeline(spec, imputer, 0.0, ImbalanceConfig(spec.gamma, spec.mode), models)
    rows = []
    for m in models:
        cols = list(selected) if m.selected else slice(None)
        model = fit_classifier(m.classifier, Xb[:, cols], yb, wb, config)
        rep = evaluate_scores(clf.score(model, val_x[:, cols]), val.labels, imputation_rmse=val_rmse)
        full = evaluate_scores(clf.score(model, complete_x[:, cols]), val.labels)
        row = {"experiment": spec.experiment, "seed": spec.seed, "repeat": 0,
               "ratio": spec.validation_ratio, "imputer": imputer, "model": m.name}
        row.update(rep.as_row())
        row.update({k + "_complete": getattr(full, k) for k in METRICS})
        rows.append(row)
    return rows, []


# --- reports ---------------------------------------------------------------------

_COORDS = {
    IMBALANCE_SWEEP: ("gamma", "mode", "model"),
    IMPUTER_DIM_SWEEP: ("ratio", "c", "imputer"),
    IMPUTER_RATIO_SWEEP: ("ratio", "imputer"),
    MISSING_VS_AUC: ("ratio", "imputer", "model"),
    VALIDATION: ("ratio", "imputer", "model"),
}
_CONFUSION = ("tn", "fn", "fp", "tp")
_VALUES = {
    IMBALANCE_SWEEP: METRICS + _CONFUSION,
    IMPUTER_DIM_SWEEP: ("rmse", "iterations", "converged"),
    IMPUTER_RATIO_SWEEP: ("rmse", "iterations", "converged"),
    MISSING_VS_AUC: METRICS + _CONFUSION + ("rmse",),
    VALIDATION: METRICS + _CONFUSION + ("rmse",) + tuple(k + "_complete" for k in METRICS),
}
_SUMMARY_VALUES = {
    IMBALANCE_SWEEP: METRICS,
    IMPUTER_DIM_SWEEP: ("rmse",),
    IMPUTER_RATIO_SWEEP: ("rmse",),
    MISSING_VS_AUC: METRICS + ("rmse",),
    VALIDATION: METRICS + tuple(k + "_complete" for k in METRICS),
}


@dataclass(eq=False)
class ExperimentReport:
    spec: ExperimentSpec
    rows: list
    timings: list = field(default_factory=list)

    @property
    def columns(self):
        return ("experiment", "seed", "repeat") + _COORDS[self.spec.experiment] + _VALUES[self.spec.experiment]

    def sorted_rows(self):
        coords = _COORDS[self.spec.experiment]
        return sorted(self.rows, key=lambda r: tuple(r[c] for c in coords) + (r["repeat"],))

    def summary(self):
        """Mean, sample std and count over repeats for every grid point."""
        exp = self.spec.experiment
        coords = _COORDS[exp]
        groups = {}
        for row in self.sorted_rows():
            groups.setdefault(tuple(row[c] for c in coords), []).append(row)
        out = []
        for key, rows in groups.items():
            s = {"experiment": exp, "seed": self.spec.seed, **dict(zip(coords, key)), "n": len(rows)}
            for v in _SUMMARY_VALUES[exp]:
                vals = [r[v] for r in rows if r[v] is not None and not _isnan(r[v])]
                s[v + "_mean"] = float(np.mean(vals)) if vals else None
                s[v + "_std"] = float(np.std(vals, ddof=1)) if len(vals) > 1 else None
            out.append(s)
        return out

    def summary_columns(self):
        exp = self.spec.experiment
        cols = ["experiment", "seed", *_COORDS[exp], "n"]
        for v in _SUMMARY_VALUES[exp]:
            cols += [v + "_mean", v + "_std"]
        return cols

    def timing_summary(self):
        coords = _COORDS[self.spec.experiment]
        groups = {}
        for row in self.timings:
            groups.setdefault(tuple(row[c] for c in coords), []).append(row["seconds"])
        return [{**dict(zip(coords, k)), "n": len(v), "seconds_median": float(np.median(v)),
                 "seconds_mean": float(np.mean(v))} for k, v in sorted(groups.items())]

    def to_csv(self) -> str:
        return _csv(self.sorted_rows(), self.columns)

    def summary_csv(self) -> str:
        return _csv(self.summary(), self.summary_columns())

    def timing_csv(self) -> str:
        coords = _COORDS[self.spec.experiment]
        return _csv(self.timing_summary(), (*coords, "n", "seconds_median", "seconds_mean"))

    def to_json(self) -> str:
        doc = {"rows": [{c: r.get(c) for c in self.columns} for r in self.sorted_rows()],
               "summary": self.summary()}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"

    def manifest(self) -> dict:
        return {
            "experiment": self.spec.experiment,
            "version": __version__,
            "seed": self.spec.seed,
            "repeat_seeds": [derive_seed(self.spec.seed, r) for r in range(self.spec.repeats)],
            "config": self.spec.to_dict(),
            "dataset": dataset_fingerprint(self.spec),
            "rows": len(self.rows),
        }

    def write(self, out_dir, fmt: str = "csv") -> list:
        """Write the report, its summary, the manifest and (if any) the timing sidecar."""
        if fmt not in ("csv", "json"):
            raise InvalidConfig(f"unknown format {fmt!r}")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = self.spec.experiment
        written = []

        def put(fname, text):
            path = out / fname
            path.write_text(text)
            written.append(path)

        if fmt == "csv":
            put(f"{name}.csv", self.to_csv())
            put(f"{name}_summary.csv", self.summary_csv())
        else:
            put(f"{name}.json", self.to_json())
        put(f"{name}_manifest.json", json.dumps(_jsonable(self.manifest()), indent=2, sort_keys=True) + "\n")
        if self.timings:
            put(f"{name}_timing.csv", self.timing_csv())
        return written


def _isnan(v):
    return isinstance(v, float) and math.isnan(v)


def _cell_text(v):
    if v is None or _isnan(v):
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_value(float(v))
    return str(v)


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell_text(r.get(c)) for c in columns])
    return buf.getvalue()


# --- runner ----------------------------------------------------------------------

def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentReport:
    """Run every cell of ``spec`` (optionally in ``jobs`` worker processes)."""
    if spec.experiment == VALIDATION:
        rows, timings = run_validation(spec)
        return ExperimentReport(spec, rows, timings)
    data = load_experiment_dataset(spec)
    tasks = [(spec.experiment, spec, data, coords) for coords in _cells(spec)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    rows = [r for res in results for r in res[0]]
    timings = [t for res in results for t in res[1]]
    return ExperimentReport(spec, rows, timings)


def run_imbalance_sweep(spec: ExperimentSpec, jobs: int = 1) -> ExperimentReport:
    return run_experiment(_as(spec, IMBALANCE_SWEEP), jobs)


def run_imputer_dim_sweep(spec: ExperimentSpec, jobs: int = 1) -> ExperimentReport:
    return run_experiment(_as(spec, IMPUTER_DIM_SWEEP), jobs)


def run_imputer_ratio_sweep(spec: ExperimentSpec, jobs: int = 1) -> ExperimentReport:
    return run_experiment(_as(spec, IMPUTER_RATIO_SWEEP), jobs)


def run_missing_vs_auc(spec: ExperimentSpec, jobs: int = 1) -> ExperimentReport:
    return run_experiment(_as(spec, MISSING_VS_AUC), jobs)


def _as(spec, experiment):
    if spec.experiment != experiment:
        raise InvalidConfig(f"spec is for {spec.experiment!r}, not {experiment!r}")
    return spec


def adjacent_agreement(values, increasing: bool = True) -> float:
    """Fraction of adjacent pairs ordered in the expected direction (ties count as agreeing)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 1.0
    diff = np.diff(v)
    ok = diff >= 0 if increasing else diff <= 0
    return float(ok.mean())
