import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from onlinenp.errors import InvalidArgumentError
from onlinenp.rff import (FrequencyBank, kernel_estimate, kernel_estimate_diff, rbf_kernel, sample_bank,
                          transform, transform_many)

finite = st.floats(-10, 10, allow_nan=False)


class TestSampleBank:
    def test_shape_and_determinism(self):
        a = sample_bank(3, 5, 1.0, seed=7)
        b = sample_bank(3, 5, 1.0, seed=7)
        assert a.freqs.shape == (5, 3)
        assert a.num_pairs == 5 and a.dim_in == 3
        assert np.array_equal(a.freqs, b.freqs)
        assert a == b

    def test_other_seed_differs(self):
        assert sample_bank(3, 5, 1.0, seed=7) != sample_bank(3, 5, 1.0, seed=8)

    def test_coordinate_variance_is_2g(self):
        # Oracle: law of large numbers on the drawn bank.
        bank = sample_bank(2, 10000, 0.5, seed=1)
        var = bank.freqs.var(axis=0, ddof=1)
        np.testing.assert_allclose(var, 1.0, rtol=0.05)
        np.testing.assert_allclose(bank.freqs.mean(axis=0), 0.0, atol=0.05)

    @pytest.mark.parametrize("d, D, g", [(1, 1, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -2.0), (1.5, 2, 1.0)])
    def test_invalid_arguments(self, d, D, g):
        with pytest.raises(InvalidArgumentError):
            sample_bank(d, D, g, seed=0)

    def test_bank_is_read_only(self):
        bank = sample_bank(2, 3, 1.0, seed=0)
        with pytest.raises(ValueError):
            bank.freqs[0, 0] = 1.0

    def test_bank_rejects_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            FrequencyBank(np.array([[np.nan, 1.0]]), 1.0)


class TestTransform:
    def test_zero_input(self):
        bank = sample_bank(4, 6, 2.0, seed=3)
        phi = transform(bank, np.zeros(4))
        assert phi.shape == (12,)
        np.testing.assert_allclose(phi[0::2], math.sqrt(1 / 6))
        np.testing.assert_array_equal(phi[1::2], 0.0)
        assert phi @ phi == pytest.approx(1.0, abs=1e-12)

    def test_interleaved_order(self):
        bank = FrequencyBank(np.array([[1.0, 0.0], [0.0, 2.0]]), 1.0)
        x = np.array([0.3, -0.4])
        s = math.sqrt(0.5)
        expected = [s * math.cos(0.3), s * math.sin(0.3), s * math.cos(-0.8), s * math.sin(-0.8)]
        np.testing.assert_allclose(transform(bank, x), expected, rtol=0, atol=1e-15)

    def test_dimension_mismatch(self):
        bank = sample_bank(3, 2, 1.0, seed=0)
        with pytest.raises(InvalidArgumentError):
            transform(bank, np.zeros(2))
        with pytest.raises(InvalidArgumentError):
            transform_many(bank, np.zeros((4, 2)))

    def test_many_matches_single(self, rng):
        bank = sample_bank(3, 7, 0.7, seed=2)
        X = rng.normal(size=(20, 3))
        rows = np.array([transform(bank, x) for x in X])
        np.testing.assert_allclose(transform_many(bank, X), rows, atol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, 5, elements=finite), st.integers(1, 40), st.integers(0, 2**31))
    def test_unit_norm(self, x, D, seed):
        phi = transform(sample_bank(5, D, 1.3, seed), x)
        assert phi.shape == (2 * D,)
        assert phi @ phi == pytest.approx(1.0, abs=1e-10)

    def test_approximates_rbf(self, rng):
        # Oracle: the exact rbf kernel per pair.
        g = 0.5
        bank = sample_bank(10, 4096, g, seed=11)
        X = rng.normal(scale=0.4, size=(1000, 10))
        Y = X + rng.normal(scale=0.4, size=(1000, 10))
        est = np.sum(transform_many(bank, X) * transform_many(bank, Y), axis=1)
        exact = np.exp(-g * np.sum((X - Y) ** 2, axis=1))
        assert np.mean(np.abs(est - exact) <= 0.05) >= 0.99


class TestKernelEstimate:
    def test_self_similarity(self, rng):
        bank = sample_bank(3, 17, 0.9, seed=5)
        x = rng.normal(size=3)
        assert kernel_estimate(bank, x, x) == pytest.approx(1.0, abs=1e-12)

    def test_single_frequency_closed_form(self):
        bank = FrequencyBank(np.array([[math.pi, 0.0]]), 1.0)
        assert kernel_estimate(bank, np.array([1.5, 0.2]), np.array([0.5, 0.2])) == pytest.approx(-1.0, abs=1e-12)

    def test_against_exact_value(self):
        bank = sample_bank(2, 8192, 1.0, seed=9)
        x = np.array([0.1, -0.2])
        y = x + np.array([0.3, 0.4])  # squared distance 0.25
        assert rbf_kernel(x, y, 1.0) == pytest.approx(0.77880078307140486825, abs=1e-15)
        assert kernel_estimate(bank, x, y) == pytest.approx(0.77880078307140486825, abs=0.04)

    def test_dimension_mismatch(self):
        bank = sample_bank(2, 3, 1.0, seed=0)
        with pytest.raises(InvalidArgumentError):
            kernel_estimate(bank, np.zeros(2), np.zeros(3))

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, 3, elements=finite), arrays(np.float64, 3, elements=finite),
           arrays(np.float64, 3, elements=finite), st.integers(0, 2**31))
    def test_shift_invariance_and_two_formulas(self, x, y, c, seed):
        bank = sample_bank(3, 16, 0.5, seed)
        k = kernel_estimate(bank, x, y)
        assert kernel_estimate(bank, x + c, y + c) == pytest.approx(k, abs=1e-10)
        assert kernel_estimate_diff(bank, x, y) == pytest.approx(k, abs=1e-10)

    @pytest.mark.parametrize("D", [16, 64, 256])
    def test_concentration(self, D):
        x = np.array([0.2, -0.5, 0.1])
        y = np.array([-0.4, 0.3, 0.6])
        ests = [kernel_estimate(sample_bank(3, D, 0.5, seed), x, y) for seed in range(300)]
        assert np.std(ests) <= 1.0 / math.sqrt(D)
        assert np.mean(ests) == pytest.approx(rbf_kernel(x, y, 0.5), abs=3 / math.sqrt(300 * D))
