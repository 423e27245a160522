import math

import numpy as np
import pytest

from onlinenp import npnn
from onlinenp.core import Hyperparams
from onlinenp.data import (Dataset, Normalizer, TwoGaussianOracle, concat_epochs, gen_ring, gen_two_gaussians,
                           load_delimited, load_sparse, minority_positive, permute_and_split, stratified_folds,
                           write_delimited, write_sparse)
from onlinenp.errors import DataError, InvalidArgumentError, ParseError, SchemaError

from conftest import quiet_params


@pytest.fixture
def write(tmp_path):
    def _write(text, name="data.txt"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write


class TestLoadDelimited:
    def test_three_lines(self, write):
        ds = load_delimited(write("1,2,+1\n3,4,−1\n5,6,+1\n"))
        assert ds.dim == 2 and ds.n_pos == 2 and ds.n_neg == 1
        np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4], [5, 6]])
        np.testing.assert_array_equal(ds.y, [1, -1, 1])

    def test_bad_cell_cites_line(self, write):
        with pytest.raises(ParseError) as exc:
            load_delimited(write("1,2,1\n3,abc,-1\n"))
        assert exc.value.line == 2 and "line 2" in str(exc.value)

    def test_zero_one_labels(self, write):
        ds = load_delimited(write("0.5,0\n1.5,1\n2.5,0\n"))
        np.testing.assert_array_equal(ds.y, [-1, 1, -1])

    def test_label_column_header_delimiter(self, write):
        ds = load_delimited(write("label;a;b\n-1;1;2\n1;3;4\n"), label_column=0, delimiter=";", header=True)
        np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4]])
        np.testing.assert_array_equal(ds.y, [-1, 1])

    def test_whitespace_delimiter_and_comments(self, write):
        ds = load_delimited(write("# note\n1 2 1\n\n3  4 -1\n"), delimiter=" ")
        assert len(ds) == 2 and ds.dim == 2

    def test_mixed_widths(self, write):
        with pytest.raises(SchemaError):
            load_delimited(write("1,2,1\n3,4,5,-1\n"))

    def test_bad_labels(self, write):
        with pytest.raises(SchemaError):
            load_delimited(write("1,2\n3,7\n"))

    def test_errors_are_data_errors(self, write):
        with pytest.raises(DataError):
            load_delimited(write(""))


class TestLoadSparse:
    def test_example(self, write):
        ds = load_sparse(write("+1 1:0.5 3:2.0\n"))
        np.testing.assert_array_equal(ds.X, [[0.5, 0.0, 2.0]])
        assert ds.y.tolist() == [1]

    def test_empty_feature_list(self, write):
        ds = load_sparse(write("+1 2:1\n−1\n"))
        np.testing.assert_array_equal(ds.X[1], [0.0, 0.0])
        assert ds.y[1] == -1

    @pytest.mark.parametrize("line", ["+1 1:1 1:2", "+1 0:1", "+1 3:1 2:1", "+1 2", "x 1:1"])
    def test_bad_lines(self, write, line):
        with pytest.raises(ParseError) as exc:
            load_sparse(write("-1 1:3\n" + line + "\n"))
        assert exc.value.line == 2


class TestRoundTrip:
    def test_delimited(self, write, tmp_path):
        text = "0.5,-1.25,+1\n3.0,4.0,-1\n"
        ds = load_delimited(write(text))
        out = tmp_path / "out.csv"
        write_delimited(ds, out)
        assert out.read_text() == text

    def test_sparse(self, write, tmp_path):
        text = "+1 1:0.5 3:2.0\n-1\n-1 2:-7.5\n"
        ds = load_sparse(write(text))
        out = tmp_path / "out.svm"
        write_sparse(ds, out)
        assert out.read_text() == text

    def test_generated_data_survive(self, tmp_path):
        ds, _ = gen_two_gaussians(50, 3, 1.0, seed=0)
        write_delimited(ds, tmp_path / "a.csv")
        back = load_delimited(tmp_path / "a.csv")
        np.testing.assert_array_equal(back.X, ds.X)
        np.testing.assert_array_equal(back.y, ds.y)


class TestNormalizer:
    def test_zscore_train_statistics(self, rng):
        X = rng.normal(3.0, 5.0, size=(200, 4))
        Z = Normalizer("zscore").fit_transform(X)
        np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-9)

    def test_unitnorm(self, rng):
        X = rng.normal(size=(50, 3))
        X[7] = 0.0
        U = Normalizer("unitnorm").fit_transform(X)
        norms = np.linalg.norm(U, axis=1)
        np.testing.assert_allclose(np.delete(norms, 7), 1.0, atol=1e-12)
        assert norms[7] == 0.0

    def test_zero_variance_feature(self):
        X = np.array([[1.0, 2.0], [1.0, 4.0], [1.0, 6.0]])
        Z = Normalizer("zscore").fit_transform(X)
        np.testing.assert_array_equal(Z[:, 0], 0.0)

    def test_fit_on_train_only(self, rng):
        ds, _ = gen_two_gaussians(400, 2, 1.0, seed=1)
        train, test = permute_and_split(ds, seed=3)
        norm = Normalizer("zscore").fit(train.X)
        Zt = norm.transform(test.X)
        np.testing.assert_array_equal(norm.mean, train.X.mean(axis=0))
        assert np.all(np.abs(Zt.mean(axis=0)) > 1e-6)

    def test_dict_round_trip(self, rng):
        norm = Normalizer("zscore").fit(rng.normal(size=(20, 3)))
        back = Normalizer.from_dict(norm.to_dict())
        np.testing.assert_array_equal(back.mean, norm.mean)
        np.testing.assert_array_equal(back.std, norm.std)

    def test_unknown_kind_and_unfitted(self):
        with pytest.raises(InvalidArgumentError):
            Normalizer("minmax")
        with pytest.raises(InvalidArgumentError):
            Normalizer("zscore").transform(np.zeros((2, 2)))


class TestSplitting:
    def test_deterministic_and_sizes(self):
        ds, _ = gen_two_gaussians(101, 2, 1.0, seed=0)
        a_tr, a_te = permute_and_split(ds, seed=5)
        b_tr, b_te = permute_and_split(ds, seed=5)
        np.testing.assert_array_equal(a_tr.X, b_tr.X)
        assert len(a_tr) + len(a_te) == 101 and len(a_tr) == 76

    def test_distinct_seeds_distinct_permutations(self):
        ds = Dataset(np.arange(20.0)[:, None], np.ones(20))
        orders = {tuple(permute_and_split(ds, seed=s)[0].X[:, 0]) for s in range(100)}
        assert len(orders) == 100

    def test_bad_fraction(self):
        ds = Dataset(np.zeros((4, 1)), [1, 1, -1, -1])
        with pytest.raises(InvalidArgumentError):
            permute_and_split(ds, 0, train_fraction=1.0)

    def test_concat_epochs(self):
        ds = Dataset(np.arange(6.0)[:, None], [1, -1] * 3)
        out = concat_epochs(ds, 3, seed=1)
        assert len(out) == 18
        np.testing.assert_array_equal(out.X[:6, 0], np.arange(6.0))
        np.testing.assert_array_equal(np.sort(out.X[6:12, 0]), np.arange(6.0))
        assert concat_epochs(ds, 1, seed=1) is ds

    def test_stratified_folds(self):
        y = np.array([1] * 9 + [-1] * 21)
        folds = stratified_folds(y, 3, seed=0)
        np.testing.assert_array_equal(np.sort(np.concatenate(folds)), np.arange(30))
        assert [int(np.sum(y[f] == 1)) for f in folds] == [3, 3, 3]

    def test_minority_positive(self):
        ds = Dataset(np.zeros((3, 1)), [1, 1, -1])
        np.testing.assert_array_equal(minority_positive(ds).y, [-1, -1, 1])


class TestTwoGaussians:
    # Reference values computed with mpmath at 30 digits.
    @pytest.mark.parametrize("sep, tau, expected", [
        (2.0, 0.1, 0.76375958410588313461),
        (2.0, 0.5, 0.97724986805182079282),
        (0.0, 0.3, 0.3),
    ])
    def test_oracle_tpr(self, sep, tau, expected):
        assert TwoGaussianOracle(sep).tpr(tau) == pytest.approx(expected, abs=1e-12)

    def test_threshold_attains_target(self):
        ds, oracle = gen_two_gaussians(200000, 2, 2.0, seed=0)
        decide = ds.X[:, 0] > oracle.threshold(0.1)
        assert np.mean(decide[ds.y == -1]) == pytest.approx(0.1, abs=0.005)
        assert np.mean(decide[ds.y == 1]) == pytest.approx(oracle.tpr(0.1), abs=0.005)

    def test_balanced_and_seeded(self):
        a, _ = gen_two_gaussians(1001, 3, 1.0, seed=4)
        b, _ = gen_two_gaussians(1001, 3, 1.0, seed=4)
        np.testing.assert_array_equal(a.X, b.X)
        assert a.n_pos == 500 and a.dim == 3

    def test_bad_args(self):
        with pytest.raises(InvalidArgumentError):
            gen_two_gaussians(0, 2, 1.0, seed=0)


class TestRing:
    def test_no_linear_separator_does_well(self):
        ds = gen_ring(10000, 1.0, 2.0, 0.05, seed=0)
        rng = np.random.default_rng(123)
        theta = rng.uniform(0, 2 * np.pi, 10000)
        offset = rng.uniform(-2.5, 2.5, 10000)
        best = 0.0
        for chunk in np.array_split(np.arange(10000), 20):
            proj = ds.X @ np.vstack([np.cos(theta[chunk]), np.sin(theta[chunk])]) - offset[chunk]
            acc = np.mean(np.where(proj > 0, 1, -1) == ds.y[:, None], axis=0)
            best = max(best, float(np.max(np.maximum(acc, 1 - acc))))
        assert best <= 0.75

    def test_nonlinear_model_separates(self):
        train, test = permute_and_split(gen_ring(10000, seed=3), seed=1)
        norm = Normalizer("zscore").fit(train.X)
        state, _ = npnn.run_stream(quiet_params(tau=0.05), norm.apply(train), seed=0)
        assert np.mean(npnn.predict_many(state, norm.transform(test.X)) == test.y) >= 0.95

    def test_geometry(self):
        ds = gen_ring(4000, 1.0, 2.0, 0.0, seed=2)
        r = np.linalg.norm(ds.X, axis=1)
        assert r[ds.y == 1].max() <= 1.0 and r[ds.y == -1].min() >= 1.0
        assert ds.n_pos == ds.n_neg

    @pytest.mark.parametrize("kw", [dict(n=0), dict(n=10, inner_radius=2.0, outer_radius=1.0), dict(n=10, noise=-1)])
    def test_bad_args(self, kw):
        with pytest.raises(InvalidArgumentError):
            gen_ring(**kw)
