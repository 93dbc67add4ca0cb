import doctest
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import stratboot.summary
from stratboot.errors import ConfigError, DataError
from stratboot.ingest import GroupPartition, ResponseMatrix
from stratboot.summary import (
    SummaryStatistic,
    group_means,
    rank_items,
    rank_matrix,
    strictly_greater,
    top_i_set,
)

NAN = float("nan")


def test_doctests():
    assert doctest.testmod(stratboot.summary).failed == 0


@pytest.mark.parametrize(
    "means, decreasing, expected",
    [
        ([1.0, 3.0, 2.0], True, [1, 2, 0]),
        ([2.0, 2.0, 1.0], True, [0, 1, 2]),
        ([1.0, NAN, 2.0], True, [2, 0, 1]),
        ([1.0, 3.0, 2.0], False, [0, 2, 1]),
        ([NAN, 1.0, 1.0], False, [1, 2, 0]),
    ],
)
def test_rank_items(means, decreasing, expected):
    assert rank_items(means, decreasing) == expected


def test_rank_items_all_undefined():
    with pytest.raises(DataError):
        rank_items([NAN, NAN])


def test_near_equal_means_are_ties():
    # 0.1 + 0.2 != 0.3 in binary floating point
    assert rank_items([0.3, 0.1 + 0.2]) == [0, 1]
    assert rank_items([0.1 + 0.2, 0.3]) == [0, 1]
    assert not strictly_greater(0.1 + 0.2, 0.3)
    assert strictly_greater(0.31, 0.3)
    assert not strictly_greater(NAN, 0.0)


def test_top_i_set_examples():
    assert set(top_i_set([1, 3, 2], 2).indices) == {1, 2}
    assert set(top_i_set([1, 3, 2], 3).indices) == {0, 1, 2}
    assert top_i_set([2, 2, 2], 1).indices == (0,)


@pytest.mark.parametrize("i", [0, 4])
def test_top_i_set_out_of_range(i):
    with pytest.raises(ConfigError):
        top_i_set([1, 2, 3], i)


means_lists = st.lists(
    st.one_of(st.integers(-5, 5).map(float), st.just(NAN)), min_size=1, max_size=8
).filter(lambda m: not all(math.isnan(x) for x in m))


@given(means_lists, st.booleans())
def test_rank_is_permutation(means, decreasing):
    assert sorted(rank_items(means, decreasing)) == list(range(len(means)))


@given(means_lists)
def test_rank_orders_defined_means_and_puts_nan_last(means):
    order = rank_items(means)
    values = [means[j] for j in order]
    defined = [v for v in values if not math.isnan(v)]
    assert values[: len(defined)] == defined
    assert all(a >= b for a, b in zip(defined, defined[1:]))


@given(means_lists)
def test_top_sets_nest(means):
    k = len(means)
    for i in range(1, k):
        assert set(top_i_set(means, i).indices) < set(top_i_set(means, i + 1).indices)


@given(means_lists, st.floats(-100, 100), st.floats(0.01, 100))
def test_rank_invariant_under_translation_and_scaling(means, shift, scale):
    base = rank_items(means)
    shifted = [m + shift for m in means]
    scaled = [m * scale for m in means]
    assert rank_items(shifted) == base
    assert rank_items(scaled) == base


def test_rank_matrix_rows_match_rank_items():
    rng = np.random.default_rng(0)
    m = rng.integers(0, 4, size=(50, 6)).astype(float)
    m[rng.random(m.shape) < 0.1] = np.nan
    m[0] = np.nan
    got = rank_matrix(m)
    for row, order in zip(m[1:], got[1:]):
        assert order.tolist() == rank_items(row)
    assert got[0].tolist() == list(range(6))


def _matrix_and_partition():
    values = np.array([[2, 1], [4, 5], [1, np.nan], [np.nan, np.nan]], dtype=float)
    return (
        ResponseMatrix(values, ("x", "y")),
        GroupPartition(("g1", "g2", "g3"), ([0, 1], [2], [3]), n_rows=4),
    )


def test_group_means_examples():
    m, p = _matrix_and_partition()
    table = group_means(m, p)
    assert table.means[0].tolist() == [3.0, 3.0]
    assert table.means[1, 0] == 1.0 and math.isnan(table.means[1, 1])
    assert np.isnan(table.means[2]).all()


def test_group_means_keep_na_makes_entry_undefined():
    m, p = _matrix_and_partition()
    values = m.values.copy()
    values[0, 1] = np.nan
    table = group_means(ResponseMatrix(values, m.item_names), p, SummaryStatistic(na_rm=False))
    assert table.means[0, 0] == 3.0 and math.isnan(table.means[0, 1])


def test_binary_means_are_proportions():
    m = ResponseMatrix.from_array([[1, 0], [0, 0], [1, 1], [1, 0]])
    p = GroupPartition.from_labels("aabb")
    table = group_means(m, p)
    assert table.means.tolist() == [[0.5, 0.0], [1.0, 0.5]]


@given(
    st.lists(st.lists(st.integers(1, 5), min_size=3, max_size=3), min_size=2, max_size=30),
    st.data(),
)
def test_group_means_equal_plain_mean(rows, data):
    labels = data.draw(st.lists(st.sampled_from("ab"), min_size=len(rows), max_size=len(rows)))
    m = ResponseMatrix.from_array(rows)
    p = GroupPartition.from_labels(labels)
    table = group_means(m, p)
    arr = np.array(rows, dtype=float)
    for g, level in enumerate(p.levels):
        mask = np.array([lab == level for lab in labels])
        np.testing.assert_allclose(table.means[g], arr[mask].mean(axis=0), rtol=1e-12)


def test_median_and_custom_statistics():
    values = np.array([[1.0, 10.0], [2.0, np.nan], [9.0, 30.0]])
    med = SummaryStatistic("median")
    assert med.columns(values).tolist() == [2.0, 20.0]
    rng = SummaryStatistic.custom(lambda x: x.max() - x.min())
    assert rng.columns(values).tolist() == [8.0, 20.0]
    assert math.isnan(SummaryStatistic.custom(np.max, na_rm=False).columns(values)[1])
    batched = np.stack([values, values + 1], axis=1)  # (rows, 2, cols)
    assert rng.columns(batched).shape == (2, 2)


def test_unknown_statistic():
    with pytest.raises(ConfigError):
        SummaryStatistic("mode")
    with pytest.raises(ConfigError):
        SummaryStatistic("custom")
