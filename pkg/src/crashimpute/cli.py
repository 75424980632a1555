"""Command-line front end: ``crashimpute <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import classifiers as clf
from . import imputers as imp
from .data import LabeledDataset, MaskedTable, dataset_to_csv, format_value, load_dataset, save_dataset
from .errors import ConfigError, InvalidConfig, NumericalError
from .evaluation import CLASSIFIERS, PipelineConfig, evaluate_scores, fit_classifier
from .experiments import (IMBALANCE_SWEEP, IMPUTER_DIM_SWEEP, IMPUTER_RATIO_SWEEP, MISSING_VS_AUC,
                          VALIDATION, ExperimentSpec, run_experiment)
from .imbalance import MODES, ImbalanceConfig, load_records, match_controls, rebalance
from .synth import GeneratorConfig, generate_with_truth

EXPERIMENT_COMMANDS = {
    "imbalance-sweep": IMBALANCE_SWEEP,
    "dim-sweep": IMPUTER_DIM_SWEEP,
    "ratio-sweep": IMPUTER_RATIO_SWEEP,
    "missing-auc": MISSING_VS_AUC,
    "validate": VALIDATION,
}


def _read_config(path):
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidConfig("config must be a JSON object")
    return doc


def _write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- subcommands -------------------------------------------------------------------

def cmd_gen_data(args):
    doc = _read_config(args.config)
    if args.seed is not None:
        doc["rng_seed"] = args.seed
    config = GeneratorConfig.from_dict(doc)
    data, truth = generate_with_truth(config)
    out = _out_dir(args)
    save_dataset(data, out / "dataset.csv")
    _write_json(out / "gen-data_manifest.json", {
        "experiment": "gen_data", "version": __version__, "seed": config.rng_seed,
        "config": json.loads(config.to_json()), "bayes_auc": truth.bayes_auc,
    })
    if args.format == "json":
        _write_json(out / "bayes_scores.json", {"bayes_scores": [float(format_value(s)) for s in truth.bayes_scores]})
    else:
        lines = ["row,bayes_score"] + [f"{i},{format_value(s)}" for i, s in enumerate(truth.bayes_scores)]
        (out / "bayes_scores.csv").write_text("\n".join(lines) + "\n")
    return 0


def cmd_experiment(args):
    doc = _read_config(args.config)
    experiment = EXPERIMENT_COMMANDS[args.command]
    if doc.setdefault("experiment", experiment) != experiment:
        raise InvalidConfig(f"config is for {doc['experiment']!r}, subcommand runs {experiment!r}")
    overrides = {"seed": args.seed, "repeats": args.repeats, "dataset": args.dataset,
                 "bandwidth": args.bandwidth, "imputer_max_iter": args.max_iter,
                 "imputer_tol": args.tol}
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if args.fold_scaling:
        doc["fold_scaling"] = True
    spec = ExperimentSpec.from_dict(doc)
    report = run_experiment(spec, jobs=args.jobs)
    for path in report.write(args.out, args.format):
        print(path)
    return 0


def cmd_impute(args):
    data = load_dataset(args.input)
    if args.model:
        model = imp.loads_model(Path(args.model).read_text())
        result = imp.impute_with(model, data.table)
    else:
        seed = 0 if args.seed is None else args.seed
        result = imp.fit_impute(data.table, args.imputer, c=args.c, k=args.k, max_iter=args.max_iter,
                                tol=args.tol, rng_seed=seed)
    out = _out_dir(args)
    completed = LabeledDataset(MaskedTable.from_array(result.completed, data.table.column_names),
                               data.labels, data.weights)
    (out / "completed.csv").write_text(dataset_to_csv(completed))
    (out / "imputer.json").write_text(imp.dumps_model(result.model) + "\n")
    _write_json(out / "impute_manifest.json", {
        "version": __version__, "input": str(args.input), "imputer": args.imputer,
        "iterations": result.iterations, "converged": result.converged, "flags": list(result.flags),
    })
    return 0


def cmd_train(args):
    data = load_dataset(args.input)
    seed = 0 if args.seed is None else args.seed
    imputer = None
    X = np.array(data.table.values)
    if not data.table.is_complete():
        res = imp.fit_impute(data.table, args.imputer, c=args.c, k=args.k, max_iter=args.max_iter,
                             tol=args.tol, rng_seed=seed)
        imputer, X = res.model, np.array(res.completed)
    features = None
    if args.top_k is not None:
        ranking = clf.rf_feature_importance(X, data.labels, args.rf_trees, seed)
        features = clf.select_top_features(ranking, args.top_k)
        X = X[:, features]
    Xb, yb, wb = rebalance(X, data.labels, ImbalanceConfig(args.gamma, args.mode), seed, data.weights)
    config = PipelineConfig(C=args.C, bandwidth=args.bandwidth, adaboost_T=args.T)
    model = fit_classifier(args.classifier, Xb, yb, wb, config)
    bundle = {
        "version": __version__,
        "column_names": list(data.table.column_names),
        "features": features,
        "imputer": None if imputer is None else imp.model_to_dict(imputer),
        "classifier": clf.model_to_dict(model),
    }
    _write_json(_out_dir(args) / "model.json", bundle)
    return 0


def cmd_score(args):
    bundle = json.loads(Path(args.model).read_text())
    data = load_dataset(args.input)
    table = data.table
    if len(bundle["column_names"]) != table.shape[1]:
        raise InvalidConfig(f"model expects {len(bundle['column_names'])} features, input has {table.shape[1]}")
    if table.is_complete():
        X = np.array(table.values)
    elif bundle["imputer"] is not None:
        X = np.array(imp.impute_with(imp.model_from_dict(bundle["imputer"]), table).completed)
    elif args.imputer_model:
        X = np.array(imp.impute_with(imp.loads_model(Path(args.imputer_model).read_text()), table).completed)
    else:
        raise InvalidConfig("input has missing cells but the model carries no imputer; pass --imputer-model")
    if bundle["features"] is not None:
        X = X[:, bundle["features"]]
    scores = clf.score(clf.model_from_dict(bundle["classifier"]), X)
    out = _out_dir(args)
    lines = ["row,score,label"] + [f"{i},{format_value(s)},{int(y)}" for i, (s, y) in enumerate(zip(scores, data.labels))]
    (out / "scores.csv").write_text("\n".join(lines) + "\n")
    if len(np.unique(data.labels)) == 2:
        report = evaluate_scores(scores, data.labels, args.threshold)
        _write_json(out / "metrics.json", {k: v for k, v in report.as_row().items() if k != "rmse"})
    return 0


def cmd_match_controls(args):
    crashes, names = load_records(args.crashes)
    archive, archive_names = load_records(args.archive)
    if names != archive_names:
        raise InvalidConfig("crash and archive files have different feature columns")
    result = match_controls(crashes, archive, args.ratio, 0 if args.seed is None else args.seed, names)
    out = _out_dir(args)
    save_dataset(result.dataset, out / "matched.csv")
    _write_json(out / "match_manifest.json", {
        "version": __version__, "ratio": args.ratio,
        "underfilled": {str(k): v for k, v in sorted(result.underfilled.items())},
        "control_sources": list(result.control_sources),
    })
    return 0


# --- parser --------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="base random seed")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="report format")


def _imputer_opts(p):
    p.add_argument("--imputer", choices=imp.IMPUTERS, default=imp.PPCA)
    p.add_argument("--c", type=int, default=6, help="latent dimensionality")
    p.add_argument("--k", type=int, default=5, help="k-means clusters")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-5)


def build_parser():
    parser = argparse.ArgumentParser(prog="crashimpute", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic dataset")
    _common(p)
    p.set_defaults(func=cmd_gen_data)

    for name, exp in EXPERIMENT_COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {exp} experiment")
        _common(p)
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--repeats", type=int)
        p.add_argument("--dataset", help="dataset CSV instead of synthetic data")
        p.add_argument("--bandwidth", type=float, help="Gaussian kernel bandwidth")
        p.add_argument("--max-iter", type=int, help="imputer iteration cap")
        p.add_argument("--tol", type=float, help="imputer convergence tolerance")
        p.add_argument("--fold-scaling", action="store_true", help="standardize on training folds only")
        p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("impute", help="fill missing cells of a dataset CSV")
    _common(p)
    _imputer_opts(p)
    p.add_argument("--input", required=True)
    p.add_argument("--model", help="frozen imputer JSON to apply instead of fitting")
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("train", help="train a classifier on a dataset CSV")
    _common(p)
    _imputer_opts(p)
    p.add_argument("--input", required=True)
    p.add_argument("--classifier", choices=CLASSIFIERS, default="svm_linear")
    p.add_argument("--gamma", type=float, default=10.0)
    p.add_argument("--mode", choices=MODES, default="cost")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--T", type=int, default=100, help="AdaBoost rounds")
    p.add_argument("--top-k", type=int, help="keep the k most important features")
    p.add_argument("--rf-trees", type=int, default=100)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a dataset CSV with a trained model")
    _common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--imputer-model", help="imputer JSON for incomplete input")
    p.add_argument("--threshold", type=float, default=0.0)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("match-controls", help="build a matched case-control dataset")
    _common(p)
    p.add_argument("--crashes", required=True)
    p.add_argument("--archive", required=True)
    p.add_argument("--ratio", type=int, default=10)
    p.set_defaults(func=cmd_match_controls)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
