import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gini_mds.data import (
    ContaminationSpec,
    Dataset,
    SimSpec,
    contaminate,
    gen_heavy_tailed,
    load_csv,
    standardize,
    write_csv,
)
from gini_mds.errors import DataParseError, DegenerateInputError, InvalidConfigError


def _write(tmp_path, text, name="in.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_plain(tmp_path):
    ds = load_csv(_write(tmp_path, "1,2\n3,4\n5,6\n"), has_header=False)
    np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4], [5, 6]])
    assert ds.labels is None


def test_load_header_and_labels(tmp_path):
    ds = load_csv(_write(tmp_path, "a,b,y\n1,2,pos\n3,4,neg\n"), label_column="y")
    np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4]])
    assert ds.labels.tolist() == [0, 1]
    assert ds.label_names == ["pos", "neg"]
    assert ds.feature_names == ["a", "b"]
    by_index = load_csv(_write(tmp_path, "a,b,y\n1,2,pos\n3,4,neg\n5,6,pos\n"), label_column=2)
    assert by_index.labels.tolist() == [0, 1, 0]


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("a,b\n1,2\n3,NaN\n", "row 3, column 2"),
        ("a,b\n1,2\n3,x\n", "row 3, column 2"),
        ("a,b\n1,2\n3\n", "row 3"),
        ("", "empty"),
        ("a,b\n", "no data"),
    ],
)
def test_load_errors_name_location(tmp_path, text, fragment):
    with pytest.raises(DataParseError) as info:
        load_csv(_write(tmp_path, text))
    assert fragment in str(info.value)


def test_missing_label_column(tmp_path):
    with pytest.raises(DataParseError):
        load_csv(_write(tmp_path, "a,b\n1,2\n"), label_column="y")


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_csv_round_trip_is_bit_exact(tmp_path_factory, X):
    path = tmp_path_factory.mktemp("rt") / "x.csv"
    labels = np.arange(X.shape[0]) % 2
    write_csv(Dataset(X, labels, label_names=["a", "b"], label_column="cls"), path)
    back = load_csv(path, label_column="cls")
    assert back.X.tobytes() == X.astype(np.float64).tobytes()
    assert back.labels.tolist() == labels.tolist()


def test_standardize_idempotent_on_standardized(rng):
    X = rng.normal(size=(50, 3))
    once = standardize(Dataset(X), "mean_unit")
    twice = standardize(once, "mean_unit")
    np.testing.assert_allclose(twice.X, once.X, atol=1e-12)
    np.testing.assert_allclose(once.X.std(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(once.X * once.scales + once.centers, X, atol=1e-12)


def test_standardize_median(rng):
    X = rng.lognormal(0, 1.5, size=(51, 4))
    out = standardize(Dataset(X), "median_unit")
    assert np.all(np.median(out.X, axis=0) == 0.0)


def test_standardize_constant_feature():
    X = np.column_stack([np.arange(5.0), np.full(5, 3.0)])
    with pytest.raises(DegenerateInputError, match="flat"):
        standardize(Dataset(X, feature_names=["ok", "flat"]), "mean_unit")
    out = standardize(Dataset(X), "mean_unit", skip_zero_scale=True)
    assert np.all(out.X[:, 1] == 0.0)


def test_contaminate_examples(rng):
    ds = Dataset(rng.normal(size=(100, 3)))
    same, rows = contaminate(ds, ContaminationSpec(0.0, seed=1))
    np.testing.assert_array_equal(same.X, ds.X)
    assert rows.size == 0

    unit = Dataset(np.array([[1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [-1.0, -1.0]]))
    out, rows = contaminate(unit, ContaminationSpec(1.0, factor=1.0))
    np.testing.assert_array_equal(out.X, unit.X)
    assert rows.tolist() == [0, 1, 2, 3]

    a, rows_a = contaminate(ds, ContaminationSpec(0.02, seed=7))
    b, rows_b = contaminate(ds, ContaminationSpec(0.02, seed=7))
    assert rows_a.size == 2
    np.testing.assert_array_equal(rows_a, rows_b)
    np.testing.assert_array_equal(a.X, b.X)


@given(st.floats(0, 1), st.integers(0, 2**32), st.integers(3, 60))
@settings(max_examples=60, deadline=None)
def test_contaminate_alters_exactly_selected_rows(fraction, seed, n):
    X = np.random.default_rng(n).normal(size=(n, 3)) + 5.0
    ds = Dataset(X)
    out, rows = contaminate(ds, ContaminationSpec(fraction, seed=seed))
    assert rows.size == math.floor(fraction * n + 0.5)
    untouched = np.setdiff1d(np.arange(n), rows)
    np.testing.assert_array_equal(out.X[untouched], X[untouched])
    sigma = X.std(axis=0)
    np.testing.assert_array_equal(out.X[rows], X[rows] * (10.0 * sigma))


def test_contaminate_additive_mode(rng):
    ds = Dataset(rng.normal(size=(20, 2)))
    out, rows = contaminate(ds, ContaminationSpec(0.1, seed=0, mode="add_factor_sigma"))
    np.testing.assert_allclose(out.X[rows], ds.X[rows] + 10 * ds.X.std(axis=0))


def test_contamination_spec_validation():
    with pytest.raises(InvalidConfigError):
        ContaminationSpec(1.5)
    with pytest.raises(InvalidConfigError):
        ContaminationSpec(0.1, mode="shift")


@pytest.mark.parametrize("n", [500, 501, 37])
def test_heavy_tailed_labels_balanced(n):
    ds = gen_heavy_tailed(SimSpec(n=n, seed=3))
    ones = int(ds.labels.sum())
    assert sorted([ones, n - ones]) == [n // 2, n - n // 2]
    assert ds.X.shape == (n, 6)


def test_heavy_tailed_deterministic():
    a = gen_heavy_tailed(SimSpec(seed=12, replication=4))
    b = gen_heavy_tailed(SimSpec(seed=12, replication=4))
    c = gen_heavy_tailed(SimSpec(seed=12, replication=5))
    assert a.X.tobytes() == b.X.tobytes()
    assert not np.array_equal(a.X, c.X)


def test_heavy_tailed_first_column_outliers():
    ds = gen_heavy_tailed(SimSpec(n=2000, seed=1))
    x = ds.X[:, 0]
    # 100 wide draws from N(0, 10^2): well over a handful land beyond |x| > 5.
    assert 40 < np.sum(np.abs(x) > 5) <= 100


def test_pareto_mean_monte_carlo():
    x = gen_heavy_tailed(SimSpec(n=10**6, seed=2)).X[:, 3]
    assert x.min() >= 1.0
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 2.0) < 3 * se


def test_weibull_median_monte_carlo():
    n = 10**5
    x = gen_heavy_tailed(SimSpec(n=n, seed=5)).X[:, 2]
    m = math.log(2) ** 2
    density = 0.5 * m**-0.5 * math.exp(-math.sqrt(m))
    se = 1.0 / (2 * density * math.sqrt(n))
    assert abs(np.median(x) - m) < 3 * se


def test_other_marginals_sanity():
    X = gen_heavy_tailed(SimSpec(n=10**5, seed=8)).X
    assert abs(np.median(X[:, 1])) < 0.02          # Cauchy(0, 1)
    assert abs(np.median(X[:, 4])) < 0.02          # Student-t, 2 df
    assert abs(np.median(np.log(X[:, 5]))) < 0.03  # log-normal(0, 1.5^2)
    assert abs(np.std(np.log(X[:, 5])) - 1.5) < 0.02


def test_sim_spec_validation():
    with pytest.raises(InvalidConfigError):
        SimSpec(d=5)
