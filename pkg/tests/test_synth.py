import json

import numpy as np
import pytest

from crashimpute import classifiers as clf
from crashimpute import imputers as imp
from crashimpute.data import MaskedTable
from crashimpute.errors import InvalidConfig
from crashimpute.evaluation import generate_mcar_mask, roc_auc, rmse
from crashimpute.imbalance import cost_weights
from crashimpute.synth import FEATURE_NAMES, GeneratorConfig, generate, generate_with_truth

from oracles import mann_whitney


def test_feature_names():
    assert len(FEATURE_NAMES) == 24
    assert FEATURE_NAMES[:2] == ("f-m1-t3", "f-m1-t2")
    assert FEATURE_NAMES[-1] == "s-m4-t2"
    assert generate(GeneratorConfig(n_crash=5, n_noncrash=50)).table.column_names == FEATURE_NAMES


def test_default_class_ratio_is_one_to_ten():
    data = generate(GeneratorConfig())
    n_pos, n_neg = data.class_counts()
    assert (n_pos, n_neg) == (123, 1230)
    assert n_neg == 10 * n_pos


def test_standardized_columns():
    data = generate(GeneratorConfig(rng_seed=4))
    X = data.table.values
    np.testing.assert_allclose(X.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(X.std(axis=0), 1, atol=1e-12)


def test_zero_shift_has_chance_bayes_auc():
    data, truth = generate_with_truth(GeneratorConfig(class_shift=0.0))
    assert truth.bayes_auc == 0.5
    np.testing.assert_array_equal(truth.bayes_scores, 0.0)


def test_noise_free_rank():
    data, truth = generate_with_truth(GeneratorConfig(latent_rank=2, strong_rank=2, noise_std=0.0,
                                                      standardize=False))
    raw = truth.raw_values
    # centred on the common mean: rank 2 from the factors, at most 1 more from the class shift
    rank = np.linalg.matrix_rank(raw - truth.mu, tol=1e-9 * np.abs(raw).max())
    assert 2 <= rank <= 3


def test_noise_free_ppca_recovers_hidden_cells():
    cfg = GeneratorConfig(n_crash=20, n_noncrash=180, latent_rank=2, strong_rank=2, noise_std=0.0,
                          rng_seed=7)
    X = generate(cfg).table.values
    mask = generate_mcar_mask(*X.shape, 0.2, 1)
    res = imp.fit_impute(MaskedTable(X, mask), "ppca", c=2, rng_seed=0, max_iter=2000, tol=1e-12)
    assert rmse(X, res.completed, ~mask) < 1e-6


def test_bayes_auc_matches_closed_form():
    data, truth = generate_with_truth(GeneratorConfig(n_crash=2000, n_noncrash=20000, rng_seed=1))
    empirical = mann_whitney(truth.bayes_scores, data.labels)
    assert abs(empirical - truth.bayes_auc) < 0.01
    assert 0.88 < truth.bayes_auc < 0.95


def test_bayes_scores_are_likelihood_ratio():
    from scipy.stats import multivariate_normal
    data, truth = generate_with_truth(GeneratorConfig(n_crash=3, n_noncrash=30, rng_seed=2))
    pos = multivariate_normal(truth.mu + truth.shift, truth.covariance)
    neg = multivariate_normal(truth.mu, truth.covariance)
    llr = pos.logpdf(truth.raw_values) - neg.logpdf(truth.raw_values)
    np.testing.assert_allclose(truth.bayes_scores, llr, rtol=1e-8, atol=1e-8)


def test_bayes_score_beats_trained_models():
    data, truth = generate_with_truth(GeneratorConfig(n_crash=300, n_noncrash=3000, rng_seed=5))
    rng = np.random.default_rng(0)
    order = rng.permutation(data.n_samples)
    tr, te = order[:1100], order[1100:]
    X, y = data.table.values, data.labels
    w = cost_weights(y[tr], 10.0)
    bayes = roc_auc(truth.bayes_scores[te], y[te]).auc
    models = {
        "linear": clf.svm_fit(X[tr], y[tr], clf.LINEAR, 1.0, w),
        "gaussian": clf.svm_fit(X[tr], y[tr], clf.GAUSSIAN, 1.0, w),
        "adaboost": clf.adaboost_fit(X[tr], y[tr], 50, w),
    }
    for name, model in models.items():
        assert roc_auc(clf.score(model, X[te]), y[te]).auc <= bayes, name


def test_deterministic_under_seed():
    a = generate(GeneratorConfig(rng_seed=11))
    b = generate(GeneratorConfig(rng_seed=11))
    c = generate(GeneratorConfig(rng_seed=12))
    np.testing.assert_array_equal(a.table.values, b.table.values)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert not np.array_equal(a.table.values, c.table.values)


@pytest.mark.parametrize("doc", [
    {"latent_rank": 24},
    {"latent_rank": 3, "strong_rank": 4},
    {"noise_std": -1.0},
    {"tail_decay": 0.0},
    {"n_crash": 0, "n_noncrash": 1},
    {"colour": "red"},
])
def test_invalid_config(doc):
    with pytest.raises(InvalidConfig):
        GeneratorConfig.from_dict(doc)


def test_config_json_round_trip():
    cfg = GeneratorConfig(n_crash=9, noise_std=0.25, rng_seed=3)
    assert GeneratorConfig.from_dict(json.loads(cfg.to_json())) == cfg
