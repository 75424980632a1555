import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crashimpute.data import LabeledDataset, MaskedTable
from crashimpute.errors import (EmptyProbe, InfeasibleRatio, InvalidConfig, NumericalError, SingleClass,
                                TooFewPerClass)
from crashimpute.evaluation import (ALL_MODELS, ModelSpec, PipelineConfig, confusion, derive_seed,
                                    evaluate_scores, generate_mcar_mask, kfold, mann_whitney_auc, rmse,
                                    roc_auc, run_cv)
from crashimpute.imbalance import ImbalanceConfig
from crashimpute.synth import GeneratorConfig, generate, generate_with_truth

from oracles import mann_whitney


def null_auc_sd(result, model):
    """Standard deviation of the fold-averaged AUC of one repeat under the null.

    Mann-Whitney null variance per fold is (n1 + n0 + 1) / (12 n1 n0).
    """
    recs = [r.report.confusion for r in result.records if r.model == model and r.repeat == 0]
    var = [(c.tp + c.fn + c.tn + c.fp + 1) / (12 * (c.tp + c.fn) * (c.tn + c.fp)) for c in recs]
    return math.sqrt(sum(var)) / len(var)


# --- masks -------------------------------------------------------------------------

def test_mask_ratio_zero_is_all_observed():
    assert generate_mcar_mask(30, 5, 0.0, 1).all()


def test_mask_hidden_count_near_expectation():
    mask = generate_mcar_mask(200, 24, 0.4, 7)
    n = 200 * 24
    sd = math.sqrt(n * 0.4 * 0.6)
    assert abs((~mask).sum() - 0.4 * n) < 3 * sd


def test_mask_deterministic():
    np.testing.assert_array_equal(generate_mcar_mask(20, 6, 0.3, 5), generate_mcar_mask(20, 6, 0.3, 5))


@pytest.mark.parametrize("ratio", [1.0, 1.5, -0.1])
def test_mask_infeasible_ratio(ratio):
    with pytest.raises(InfeasibleRatio):
        generate_mcar_mask(10, 4, ratio, 0)


@given(st.integers(1, 12), st.integers(1, 12), st.floats(0.0, 0.8), st.integers(0, 2**31))
def test_mask_rows_and_columns_keep_an_observation(m, d, ratio, seed):
    mask = generate_mcar_mask(m, d, ratio, seed)
    assert mask.shape == (m, d)
    assert mask.any(axis=1).all() and mask.any(axis=0).all()


def test_derive_seed_stable_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert len({derive_seed(0, r, f) for r in range(5) for f in range(10)}) == 50


# --- rmse --------------------------------------------------------------------------

def test_rmse_examples():
    real = np.zeros((2, 2))
    assert rmse(real, real, np.ones((2, 2), bool)) == 0.0
    assert rmse(real, real + 1, np.ones((2, 2), bool)) == 1.0
    r = np.array([0.0, 0.0, 2.0, 5.0])
    i = np.array([1.0, -1.0, 2.0, 100.0])
    assert rmse(r, i, [True, True, True, False]) == pytest.approx(math.sqrt(2 / 3), abs=1e-12)


def test_rmse_empty_probe():
    with pytest.raises(EmptyProbe):
        rmse(np.zeros(3), np.ones(3), np.zeros(3, bool))


# --- confusion ---------------------------------------------------------------------

def test_confusion_extreme_thresholds():
    rng = np.random.default_rng(0)
    s = rng.standard_normal(20)
    y = np.where(rng.random(20) < 0.3, 1, -1)
    lo = confusion(s, y, -np.inf)
    assert lo.fp + lo.tp == 20 and lo.tn == lo.fn == 0
    hi = confusion(s, y, np.inf)
    assert hi.tn + hi.fn == 20


def test_confusion_small_example():
    cm = confusion([-1.0, 1.0], [-1, 1], 0.0)
    assert (cm.tn, cm.tp, cm.fp, cm.fn) == (1, 1, 0, 0)


def test_score_equal_to_threshold_predicts_crash():
    cm = confusion([0.0], [1], 0.0)
    assert cm.tp == 1


@given(st.lists(st.tuples(st.floats(-5, 5), st.sampled_from([-1, 1])), min_size=2, max_size=40),
       st.floats(-5, 5))
def test_confusion_identities(pairs, threshold):
    s, y = map(np.array, zip(*pairs))
    cm = confusion(s, y, threshold)
    assert cm.total == len(s)
    assert cm.accuracy == pytest.approx((cm.tp + cm.tn) / len(s))
    if cm.tn + cm.fp:
        assert cm.specificity == pytest.approx(1 - cm.fpr)


# --- ROC / AUC ---------------------------------------------------------------------

def test_auc_examples():
    y = np.array([-1, -1, 1, 1])
    assert roc_auc(y.astype(float), y).auc == 1.0
    assert roc_auc([0.1, 0.4, 0.35, 0.8], y).auc == pytest.approx(0.75, abs=1e-12)
    assert roc_auc([0.3] * 4, y).auc == 0.5


def test_auc_single_class():
    with pytest.raises(SingleClass):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(SingleClass):
        mann_whitney_auc([0.1, 0.2], [-1, -1])


def test_roc_curve_shape():
    rng = np.random.default_rng(3)
    s = np.round(rng.standard_normal(60), 1)
    y = np.where(rng.random(60) < 0.4, 1, -1)
    curve = roc_auc(s, y)
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0)
    assert (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
    assert len(curve.thresholds) == len(np.unique(s)) + 1
    assert np.all(np.diff(curve.thresholds) < 0)
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
    # each point equals the confusion matrix at that threshold
    for t, f, p in zip(curve.thresholds[1:], curve.fpr[1:], curve.tpr[1:]):
        cm = confusion(s, y, t)
        assert (cm.fpr, cm.tpr) == pytest.approx((f, p))


@given(st.lists(st.tuples(st.integers(-4, 4), st.booleans()), min_size=2, max_size=50))
def test_auc_equals_pairwise_statistic(pairs):
    s = np.array([p[0] for p in pairs], dtype=float) / 2
    y = np.where([p[1] for p in pairs], 1, -1)
    if len(set(y)) < 2:
        y[0] = -y[0]
    expected = mann_whitney(s, y)
    assert abs(roc_auc(s, y).auc - expected) < 1e-9
    assert abs(mann_whitney_auc(s, y) - expected) < 1e-9


def test_evaluate_scores_report():
    rep = evaluate_scores([2.0, -1.0, 0.5, -3.0], [1, -1, -1, 1], imputation_rmse=0.3)
    assert rep.confusion.tp == 1 and rep.confusion.fp == 1
    assert rep.accuracy == 0.5 and rep.sensitivity == 0.5 and rep.specificity == 0.5
    assert rep.auc == 0.5
    assert rep.as_row()["rmse"] == 0.3


# --- folds -------------------------------------------------------------------------

def test_leave_one_out():
    y = np.array([1, -1] * 5)
    folds = kfold(y, k=10, stratified=False, rng_seed=0)
    assert all(len(te) == 1 for _, te in folds)


def test_stratified_fold_counts_at_one_to_ten():
    y = np.r_[np.ones(123, int), -np.ones(1230, int)]
    for _, te in kfold(y, 10, True, 4):
        assert 12 <= (y[te] == 1).sum() <= 13
        assert 123 <= (y[te] == -1).sum() <= 123


@given(st.integers(2, 8), st.integers(0, 30), st.integers(0, 2**31), st.booleans())
def test_folds_partition_indices(k, extra, seed, stratified):
    y = np.r_[np.ones(k + extra // 3, int), -np.ones(k + extra, int)]
    folds = kfold(y, k, stratified, seed)
    tests = np.concatenate([te for _, te in folds])
    assert sorted(tests) == list(range(len(y)))
    for tr, te in folds:
        assert not set(tr) & set(te)
        assert len(tr) + len(te) == len(y)


def test_kfold_deterministic():
    y = np.r_[np.ones(10, int), -np.ones(40, int)]
    a = kfold(y, 5, True, 9)
    b = kfold(y, 5, True, 9)
    assert all(np.array_equal(x[1], z[1]) for x, z in zip(a, b))


def test_kfold_errors():
    y = np.r_[np.ones(3, int), -np.ones(30, int)]
    with pytest.raises(TooFewPerClass):
        kfold(y, 5, True, 0)
    with pytest.raises(InvalidConfig):
        kfold(y, 1)


# --- cross validation --------------------------------------------------------------

@pytest.fixture(scope="module")
def small_data():
    return generate(GeneratorConfig(n_crash=30, n_noncrash=300, rng_seed=2))


def label_scorer(Xtr, ytr, wtr, Xte, yte, seed):
    return yte.astype(float)


def random_scorer(Xtr, ytr, wtr, Xte, yte, seed):
    return np.random.default_rng(seed).random(len(Xte))


@pytest.mark.parametrize("imputer", ["mean", "kmeans", "lspca", "ppca", "vbpca"])
def test_true_label_scorer_gives_auc_one(small_data, imputer):
    cfg = PipelineConfig(imputer=imputer, missing_ratio=0.2, c=3)
    res = run_cv(small_data, cfg, k=5, repeats=1, rng_seed=0, scorer=label_scorer)
    assert res.aggregate(res.models()[0])["auc"] == 1.0


def test_random_scorer_auc_near_half():
    data = generate(GeneratorConfig())
    res = run_cv(data, PipelineConfig(), k=10, repeats=5, rng_seed=1, scorer=random_scorer)
    name = res.models()[0]
    sd = null_auc_sd(res, name) / math.sqrt(5)
    assert abs(res.aggregate(name)["auc"] - 0.5) < 3 * sd


def test_no_signal_classifier_at_chance():
    data = generate(GeneratorConfig(class_shift=0.0, rng_seed=3))
    res = run_cv(data, PipelineConfig(), k=10, repeats=1, rng_seed=0)
    name = res.models()[0]
    assert res.aggregate(name)["auc"] <= 0.5 + 3 * null_auc_sd(res, name)


def test_gaussian_pipeline_on_low_dimensional_generator():
    # bandwidth-1 kernels need a low intrinsic dimension; see README
    data, truth = generate_with_truth(GeneratorConfig(latent_rank=3, strong_rank=3, noise_std=0.3))
    assert truth.bayes_auc == pytest.approx(0.9, abs=0.03)
    cfg = PipelineConfig(imputer="ppca", imbalance=ImbalanceConfig(10.0, "cost"),
                         models=(ModelSpec("svm_gaussian"),))
    res = run_cv(data, cfg, k=10, repeats=5, rng_seed=0)
    assert res.aggregate("svm_gaussian(full)")["auc"] > 0.8


def test_cv_is_deterministic_and_serializes(small_data):
    cfg = PipelineConfig(missing_ratio=0.1, models=(ModelSpec("svm_linear"), ModelSpec("adaboost", True)),
                         adaboost_T=10, rf_trees=10)
    a = run_cv(small_data, cfg, k=3, repeats=2, rng_seed=5)
    b = run_cv(small_data, cfg, k=3, repeats=2, rng_seed=5)
    assert a.to_csv() == b.to_csv()
    lines = a.to_csv().strip().split("\n")
    assert len(lines) == 1 + 2 * 3 * 2 + 2 * 2
    doc = json.loads(a.to_json())
    assert len(doc["folds"]) == 12
    agg = doc["aggregate"]["svm_linear(full)"]
    assert agg["rmse"] is not None and agg["auc_std"] is not None
    reps = a.per_repeat("svm_linear(full)")
    assert agg["auc"] == pytest.approx(np.mean([r["auc"] for r in reps]))
    assert agg["auc_std"] == pytest.approx(np.std([r["auc"] for r in reps], ddof=1))


def test_complete_data_reports_no_rmse(small_data):
    res = run_cv(small_data, PipelineConfig(), k=3, repeats=1)
    assert res.aggregate(res.models()[0])["rmse"] is None


def test_errors_carry_fold_context(small_data):
    def failing(*args):
        raise NumericalError("boom")

    with pytest.raises(NumericalError, match=r"repeat 0, fold 0: boom"):
        run_cv(small_data, PipelineConfig(), k=3, repeats=1, scorer=failing)


def test_model_catalogue():
    assert [m.name for m in ALL_MODELS] == [
        "svm_linear(full)", "svm_linear(selected)", "svm_gaussian(full)", "svm_gaussian(selected)",
        "svm_polynomial(full)", "svm_polynomial(selected)", "adaboost(full)", "adaboost(selected)",
    ]


@pytest.mark.parametrize("kwargs", [{"imputer": "median"}, {"missing_ratio": 1.0}, {"models": ()}])
def test_pipeline_config_validation(kwargs):
    with pytest.raises(InvalidConfig):
        PipelineConfig(**kwargs)


def test_repeats_must_be_positive(small_data):
    with pytest.raises(InvalidConfig):
        run_cv(small_data, PipelineConfig(), repeats=0)
