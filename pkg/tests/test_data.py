import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from crashimpute.data import (
    LabeledDataset, MaskedTable, Scaler, apply_mask, dataset_from_csv, dataset_to_csv,
    fit_scaler, inverse_transform, standardize, transform,
)
from crashimpute.errors import (
    DimensionMismatch, EmptyRowOrColumn, InvalidConfig, TooFewObserved, ZeroVariance,
)

NAN = np.nan


def test_scaler_two_point_column():
    sc = fit_scaler(MaskedTable.from_array([[2.0], [4.0]]))
    assert sc.means[0] == 3.0
    assert sc.stds[0] == 1.0


def test_scaler_ignores_missing_cells():
    t = MaskedTable.from_array([[1.0, 0.0], [2.0, 1.0], [3.0, 0.0], [NAN, 1.0]])
    sc = fit_scaler(t)
    assert sc.means[0] == pytest.approx(2.0)
    assert sc.stds[0] == pytest.approx(math.sqrt(2 / 3), abs=1e-12)


def test_scaler_on_standardized_column_is_identity():
    x = np.random.default_rng(0).standard_normal((50, 3))
    t = transform(MaskedTable.from_array(x), fit_scaler(MaskedTable.from_array(x)))
    sc = fit_scaler(t)
    np.testing.assert_allclose(sc.means, 0, atol=1e-9)
    np.testing.assert_allclose(sc.stds, 1, atol=1e-9)


def test_scaler_errors():
    with pytest.raises(ZeroVariance):
        fit_scaler(MaskedTable.from_array([[1.0, 0.0], [1.0, 2.0]]))
    with pytest.raises(TooFewObserved):
        fit_scaler(MaskedTable.from_array([[1.0, 0.0], [NAN, 2.0]]))
    with pytest.raises(ZeroVariance):
        Scaler(np.zeros(2), np.array([1.0, 0.0]))


def test_transform_examples():
    t = MaskedTable.from_array([[5.0, NAN], [1.0, 2.0]])
    same = transform(t, Scaler.identity(2))
    np.testing.assert_array_equal(same.mask, t.mask)
    np.testing.assert_array_equal(same.values[t.mask], t.values[t.mask])
    out = transform(t, Scaler(np.array([3.0, 0.0]), np.array([2.0, 1.0])))
    assert out.values[0, 0] == 1.0
    assert not out.mask[0, 1]
    with pytest.raises(DimensionMismatch):
        transform(t, Scaler.identity(3))


def _tables(draw, min_rows=2, max_rows=12, max_cols=6):
    m = draw(st.integers(min_rows, max_rows))
    d = draw(st.integers(1, max_cols))
    vals = draw(arrays(float, (m, d), elements=st.floats(-1e3, 1e3, allow_nan=False)))
    mask = draw(arrays(bool, (m, d)))
    mask[np.arange(m), np.arange(m) % d] = True
    mask[np.arange(d) % m, np.arange(d)] = True
    return MaskedTable(vals, mask)


tables = st.composite(_tables)


@given(tables())
def test_round_trip_transform(t):
    sc = Scaler(np.linspace(-2, 2, t.shape[1]), np.linspace(0.5, 3, t.shape[1]))
    back = inverse_transform(transform(t, sc), sc)
    np.testing.assert_allclose(back.values[t.mask], t.values[t.mask], atol=1e-9, rtol=1e-12)
    np.testing.assert_array_equal(back.mask, t.mask)


@given(tables(min_rows=3))
def test_standardized_columns_have_zero_mean_unit_std(t):
    try:
        sc = fit_scaler(t)
    except (ZeroVariance, TooFewObserved):
        return
    # near-constant columns lose relative precision; skip them
    if np.any(sc.stds < 1e-6 * (1 + np.abs(sc.means))):
        return
    out = transform(t, sc)
    for j in range(t.shape[1]):
        col = out.values[out.mask[:, j], j]
        assert abs(col.mean()) < 1e-9
        assert abs(col.std() - 1) < 1e-9


def test_apply_mask_examples():
    t = MaskedTable.from_array(np.arange(6.0).reshape(2, 3))
    same = apply_mask(t, np.ones((2, 3), bool))
    np.testing.assert_array_equal(same.values, t.values)
    hide = np.ones((2, 3), bool)
    hide[0, 0] = False
    out = apply_mask(t, hide)
    assert not out.mask[0, 0]
    assert out.mask.sum() == 5
    np.testing.assert_array_equal(out.values[out.mask], t.values[hide])
    bad = np.ones((2, 3), bool)
    bad[1] = False
    with pytest.raises(EmptyRowOrColumn):
        apply_mask(t, bad)
    with pytest.raises(DimensionMismatch):
        apply_mask(t, np.ones((3, 2), bool))


@given(tables(), st.integers(0, 2 ** 32 - 1))
def test_apply_mask_never_adds_observed_cells(t, seed):
    extra = np.random.default_rng(seed).random(t.shape) > 0.3
    try:
        out = apply_mask(t, extra)
    except EmptyRowOrColumn:
        return
    assert out.mask.sum() <= t.mask.sum()
    assert not np.any(out.mask & ~t.mask)


def test_construction_enforces_invariants():
    with pytest.raises(EmptyRowOrColumn):
        MaskedTable.from_array([[NAN, NAN], [1.0, 2.0]])
    with pytest.raises(EmptyRowOrColumn):
        MaskedTable.from_array([[NAN, 1.0], [NAN, 2.0]])
    with pytest.raises(DimensionMismatch):
        MaskedTable(np.zeros((2, 2)), np.ones((2, 3), bool))
    with pytest.raises(DimensionMismatch):
        MaskedTable(np.zeros((0, 2)), np.ones((0, 2), bool))
    with pytest.raises(InvalidConfig):
        MaskedTable(np.array([[np.inf]]), np.array([[True]]))
    t = MaskedTable(np.ones((2, 2)), np.array([[True, False], [True, True]]))
    assert np.isnan(t.values[0, 1])
    with pytest.raises(ValueError):
        t.values[0, 0] = 3.0


def test_labeled_dataset_validation():
    t = MaskedTable.from_array(np.zeros((3, 2)) + np.arange(3)[:, None])
    with pytest.raises(InvalidConfig):
        LabeledDataset(t, [1, 0, -1])
    with pytest.raises(DimensionMismatch):
        LabeledDataset(t, [1, -1])
    with pytest.raises(InvalidConfig):
        LabeledDataset(t, [1, -1, 1], [1.0, 0.0, 1.0])
    ds = LabeledDataset(t, [1, -1, -1], [2.0, 1.0, 1.0])
    assert ds.class_counts() == (1, 2)
    sub = ds.subset([0, 2])
    assert sub.labels.tolist() == [1, -1]
    assert sub.weights.tolist() == [2.0, 1.0]


def test_standardize_returns_scaler():
    x = np.random.default_rng(1).normal(5, 3, size=(30, 4))
    ds, sc = standardize(LabeledDataset(MaskedTable.from_array(x), np.where(np.arange(30) < 5, 1, -1)))
    np.testing.assert_allclose(sc.means, x.mean(axis=0))
    np.testing.assert_allclose(ds.table.values, (x - x.mean(axis=0)) / x.std(axis=0))


def test_csv_round_trip_is_byte_stable():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((6, 3))
    x[1, 2] = NAN
    ds = LabeledDataset(MaskedTable.from_array(x, ("a", "b", "c")), [1, -1, -1, 1, -1, -1],
                        [1.5, 1, 1, 1, 1, 1])
    text = dataset_to_csv(ds)
    assert text.splitlines()[0] == "a,b,c,label,weight"
    assert ",," in text.splitlines()[2]
    again = dataset_from_csv(text)
    assert dataset_to_csv(again) == text
    np.testing.assert_array_equal(again.table.mask, ds.table.mask)
    np.testing.assert_allclose(again.table.values[ds.table.mask], x[ds.table.mask], rtol=1e-8)


def test_csv_errors():
    with pytest.raises(InvalidConfig):
        dataset_from_csv("a,b\n1,2\n")
    with pytest.raises(InvalidConfig):
        dataset_from_csv("a,label\n1\n")
    with pytest.raises(InvalidConfig):
        dataset_from_csv("")
