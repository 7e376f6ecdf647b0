import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import write_long_csv
from topoprune.exceptions import DatasetError
from topoprune.mts import (
    MtsDataset,
    compute_correlation,
    correlation_to_distance,
    distance_to_correlation,
    dumps_long_csv,
    dumps_wide_csv,
    load_dataset,
)


def _pearson_two_pass(a, b):
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / math.sqrt(va * vb)


@pytest.fixture
def long_rows():
    rows = []
    for inst in ("a", "b"):
        for t in range(4):
            rows.append([inst, t, "x" if inst == "a" else "y", t + 1, (t * 7) % 5, -t])
    return rows


class TestLoading:
    def test_well_formed_long(self, tmp_path, long_rows):
        p = write_long_csv(tmp_path / "d.csv", ["instance", "timestep", "label", "u", "v", "w"], long_rows)
        ds = load_dataset(p, "long_csv")
        assert (ds.n_instances, ds.n_vars, ds.n_timesteps) == (2, 3, 4)
        assert ds.variable_names == ("u", "v", "w")
        assert ds.labels == ("x", "y")
        assert ds.values[0, 0].tolist() == [1, 2, 3, 4]

    def test_unlabeled(self, tmp_path):
        p = write_long_csv(tmp_path / "d.csv", ["instance", "timestep", "u"], [[0, 0, 1], [0, 1, 2]])
        ds = load_dataset(p, "long")
        assert not ds.is_labeled

    def test_nan_cell(self, tmp_path, long_rows):
        long_rows[5][4] = "nan"
        p = write_long_csv(tmp_path / "d.csv", ["instance", "timestep", "label", "u", "v", "w"], long_rows)
        with pytest.raises(DatasetError, match=r"non-finite value at \(b,v,1\)"):
            load_dataset(p)

    def test_ragged(self, tmp_path, long_rows):
        p = write_long_csv(tmp_path / "d.csv", ["instance", "timestep", "label", "u", "v", "w"], long_rows[:-1])
        with pytest.raises(DatasetError, match="ragged"):
            load_dataset(p)

    def test_duplicate_row(self, tmp_path, long_rows):
        rows = long_rows + [long_rows[0]]
        p = write_long_csv(tmp_path / "d.csv", ["instance", "timestep", "label", "u", "v", "w"], rows)
        with pytest.raises(DatasetError, match="duplicate"):
            load_dataset(p)

    def test_non_numeric(self, tmp_path, long_rows):
        long_rows[2][3] = "abc"
        p = write_long_csv(tmp_path / "d.csv", ["instance", "timestep", "label", "u", "v", "w"], long_rows)
        with pytest.raises(DatasetError, match="non-numeric"):
            load_dataset(p)

    @pytest.mark.parametrize("content", ["", "instance,timestep,u\n"])
    def test_empty(self, tmp_path, content):
        p = tmp_path / "d.csv"
        p.write_text(content)
        with pytest.raises(DatasetError):
            load_dataset(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            load_dataset(tmp_path / "nope.csv")

    def test_inconsistent_label(self, tmp_path, long_rows):
        long_rows[1][2] = "other"
        p = write_long_csv(tmp_path / "d.csv", ["instance", "timestep", "label", "u", "v", "w"], long_rows)
        with pytest.raises(DatasetError, match="label"):
            load_dataset(p)

    def test_unknown_format(self, tmp_path, long_rows):
        p = write_long_csv(tmp_path / "d.csv", ["instance", "timestep", "label", "u", "v", "w"], long_rows)
        with pytest.raises(DatasetError, match="format"):
            load_dataset(p, "parquet")

    def test_round_trips_are_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        ds = MtsDataset(rng.standard_normal((3, 2, 5)), ("p", "q"), ("i0", "i1", "i2"), ("a", "b", "a"))
        (tmp_path / "l.csv").write_text(dumps_long_csv(ds))
        (tmp_path / "w.csv").write_text(dumps_wide_csv(ds))
        for path, fmt in ((tmp_path / "l.csv", "long"), (tmp_path / "w.csv", "wide")):
            back = load_dataset(path, fmt)
            assert np.array_equal(back.values, ds.values)
            assert back.labels == ds.labels and back.instance_ids == ds.instance_ids


class TestDataset:
    def test_values_frozen(self):
        ds = MtsDataset(np.zeros((1, 2, 3)), ("a", "b"))
        with pytest.raises(ValueError):
            ds.values[0, 0, 0] = 1.0

    def test_duplicate_names(self):
        with pytest.raises(DatasetError, match="unique"):
            MtsDataset(np.zeros((1, 2, 3)), ("a", "a"))

    def test_select_variables_preserves_order(self):
        ds = MtsDataset(np.arange(12.0).reshape(1, 4, 3), ("a", "b", "c", "d"))
        sub = ds.select_variables([0, 2, 3])
        assert sub.variable_names == ("a", "c", "d")
        assert np.array_equal(sub.values[0, 1], [6, 7, 8])


class TestCorrelation:
    def test_affine_dependence(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        ds = MtsDataset(np.stack([a, 2 * a + 1])[None], ("A", "B"))
        c = compute_correlation(ds)
        assert c[0, 1] == 1.0
        assert correlation_to_distance(c)[0, 1] == 0.0

    def test_anticorrelation(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        ds = MtsDataset(np.stack([a, -a])[None], ("A", "B"))
        assert compute_correlation(ds)[0, 1] == -1.0

    def test_average_over_instances(self):
        # instance 0 is built to give exactly 0.6 under the two-pass oracle
        a0 = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]
        e0 = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0]
        b0 = [0.6 * x + 0.8 * y for x, y in zip(a0, e0)]
        a1 = [0.0, 1.0, 5.0, 2.0, 3.0, 1.0, 4.0, 2.0]
        b1 = [3 * x - 2 for x in a1]
        r0, r1 = _pearson_two_pass(a0, b0), _pearson_two_pass(a1, b1)
        assert r0 == pytest.approx(0.6, abs=1e-15)
        assert r1 == pytest.approx(1.0, abs=1e-15)
        ds = MtsDataset(np.array([[a0, b0], [a1, b1]]), ("A", "B"))
        assert compute_correlation(ds)[0, 1] == pytest.approx(0.8, abs=1e-12)
        assert compute_correlation(ds)[0, 1] == pytest.approx((r0 + r1) / 2, abs=1e-12)

    def test_matches_two_pass_oracle_on_random_data(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 4, 20))
        ds = MtsDataset(x, tuple("abcd"))
        c = compute_correlation(ds)
        for u in range(4):
            for v in range(4):
                want = 1.0 if u == v else np.mean([_pearson_two_pass(x[i, u], x[i, v]) for i in range(3)])
                assert c[u, v] == pytest.approx(want, abs=1e-12)

    def test_invariants(self):
        rng = np.random.default_rng(1)
        c = compute_correlation(MtsDataset(rng.standard_normal((4, 5, 30)), tuple("abcde")))
        assert np.array_equal(c, c.T)
        assert np.all(np.diag(c) == 1.0)
        assert np.all(np.abs(c) <= 1.0)

    def test_zero_variance_variable_warns(self):
        x = np.array([[[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]])
        with pytest.warns(RuntimeWarning, match="zero-variance"):
            c = compute_correlation(MtsDataset(x, ("a", "b")))
        assert c[0, 1] == 0.0

    def test_constant_in_one_instance_only_is_skipped(self):
        x = np.array([
            [[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]],
            [[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]],
        ])
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            c = compute_correlation(MtsDataset(x, ("a", "b")))
        assert c[0, 1] == -1.0

    def test_needs_two_timesteps(self):
        with pytest.raises(DatasetError):
            compute_correlation(MtsDataset(np.zeros((1, 2, 1)), ("a", "b")))

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((2, 5, 12))
        perm = [3, 0, 4, 1, 2]
        c = compute_correlation(MtsDataset(x, tuple("abcde")))
        cp = compute_correlation(MtsDataset(x[:, perm], tuple("abcde")))
        assert np.allclose(cp, c[np.ix_(perm, perm)], atol=1e-14)


class TestDistance:
    @pytest.mark.parametrize("c, d", [(1.0, 0.0), (-1.0, 2.0), (0.0, math.sqrt(2))])
    def test_endpoints(self, c, d):
        corr = np.array([[1.0, c], [c, 1.0]])
        assert correlation_to_distance(corr)[0, 1] == pytest.approx(d, abs=1e-12)

    def test_diagonal_zero(self):
        assert np.all(np.diag(correlation_to_distance(np.eye(3))) == 0.0)

    def test_rejects_invalid(self):
        with pytest.raises(ValueError):
            correlation_to_distance(np.array([[1.0, 0.2], [0.3, 1.0]]))
        with pytest.raises(ValueError):
            correlation_to_distance(np.array([[1.0, 1.5], [1.5, 1.0]]))

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-1, 1), st.floats(-1, 1))
    def test_strictly_decreasing(self, c1, c2):
        d = correlation_to_distance(np.array([[1.0, c1, c2], [c1, 1.0, 0.0], [c2, 0.0, 1.0]]))
        if c1 > c2:
            assert d[0, 1] <= d[0, 2]
        if c1 - c2 > 1e-12:
            assert d[0, 1] < d[0, 2]

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-1, 1))
    def test_inverse(self, c):
        corr = np.array([[1.0, c], [c, 1.0]])
        assert distance_to_correlation(correlation_to_distance(corr))[0, 1] == pytest.approx(c, abs=1e-12)

    def test_bit_determinism(self):
        rng = np.random.default_rng(5)
        ds = MtsDataset(rng.standard_normal((3, 4, 10)), tuple("abcd"))
        d1 = correlation_to_distance(compute_correlation(ds))
        d2 = correlation_to_distance(compute_correlation(ds))
        assert d1.tobytes() == d2.tobytes()
