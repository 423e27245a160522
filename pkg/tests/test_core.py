import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onlinenp import core
from onlinenp.core import FprWindow, Hyperparams, LabeledSample, RunTrace, loss_slope, sigmoid_loss
from onlinenp.errors import InvalidArgumentError
from onlinenp.evaluate import rates_from_decisions

from conftest import quiet_params


class TestSigmoidLoss:
    def test_origin(self):
        assert sigmoid_loss(0.0) == 0.5

    def test_large_positive_no_overflow(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert sigmoid_loss(50.0) == pytest.approx(1.928749847963917783e-22, rel=1e-12)
            assert 0.0 < sigmoid_loss(700.0) < 1e-300

    def test_large_negative(self):
        assert 1.0 - sigmoid_loss(-50.0) == pytest.approx(0.0, abs=1e-16)
        assert sigmoid_loss(-700.0) == 1.0

    @settings(max_examples=200)
    @given(st.floats(-700, 700))
    def test_symmetry_and_range(self, m):
        assert 0.0 <= sigmoid_loss(m) <= 1.0
        assert sigmoid_loss(m) + sigmoid_loss(-m) == pytest.approx(1.0, abs=1e-15)

    def test_monotone_decreasing(self):
        m = np.linspace(-30, 30, 5001)
        assert np.all(np.diff(sigmoid_loss(m)) < 0)

    def test_compiled_twin_agrees(self):
        for m in np.linspace(-60, 60, 241):
            assert core._nb_loss(m) == pytest.approx(sigmoid_loss(m), rel=1e-14, abs=1e-300)

    @pytest.mark.parametrize("m", [-8.0, -1.3, 0.0, 0.4, 5.0])
    def test_slope_is_derivative(self, m):
        h = 1e-6
        fd = (sigmoid_loss(m + h) - sigmoid_loss(m - h)) / (2 * h)
        assert loss_slope(m) == pytest.approx(fd, rel=1e-5)
        assert loss_slope(m) == pytest.approx(-sigmoid_loss(m) ** 2 * math.exp(m), rel=1e-12)


class TestFprWindow:
    def test_fills_then_slides(self):
        win = FprWindow(3)
        assert win.estimate() == 0.0 and len(win) == 0
        for bit in (1, 0, 1):
            win.push(bit)
        assert len(win) == 3 and win.estimate() == pytest.approx(2 / 3)
        win.push(0)  # evicts the oldest 1
        assert list(win.ordered()) == [0, 1, 0]
        assert win.estimate() == pytest.approx(1 / 3)

    @settings(max_examples=100)
    @given(st.integers(1, 12), st.lists(st.booleans(), max_size=60))
    def test_matches_tail_mean(self, cap, bits):
        win = FprWindow(cap)
        for b in bits:
            win.push(b)
        tail = bits[-cap:]
        assert len(win) == len(tail)
        assert win.estimate() == (sum(tail) / len(tail) if tail else 0.0)
        assert list(win.ordered()) == [int(b) for b in tail]
        assert FprWindow.from_ordered(cap, win.ordered()) == win

    def test_invalid_capacity(self):
        with pytest.raises(InvalidArgumentError):
            FprWindow(0)


class TestHyperparams:
    def test_defaults(self):
        p = Hyperparams(tau=0.1)
        assert (p.eta1, p.gamma1, p.window, p.min_window, p.lam) == (0.01, 1.0, 200, 20, 0.0)
        assert p.beta1 / p.eta1 == pytest.approx(0.05)

    def test_min_window_follows_small_window(self):
        assert Hyperparams(tau=0.1, window=7).min_window == 7

    @pytest.mark.parametrize("kw", [dict(tau=0.0), dict(tau=1.0), dict(tau=0.1, g=0), dict(tau=0.1, D=0),
                                    dict(tau=0.1, eta1=0), dict(tau=0.1, lam=-1), dict(tau=0.1, window=0),
                                    dict(tau=0.1, gamma_update="bogus"), dict(tau=0.1, min_window=500)])
    def test_rejects(self, kw):
        with pytest.raises(InvalidArgumentError):
            quiet_params(**kw)

    def test_warns_outside_gain_ratio(self):
        with pytest.warns(UserWarning, match="beta1/eta1"):
            Hyperparams(tau=0.1, beta1=0.03)


class TestLabeledSample:
    def test_rejects_bad_label(self):
        with pytest.raises(InvalidArgumentError):
            LabeledSample(np.zeros(2), 0)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            LabeledSample(np.array([np.inf, 0.0]), 1)


class TestRunTrace:
    def test_cumulative_rates(self):
        tr = RunTrace([1, -1, -1, 1, -1], [1, 1, -1, -1, -1])
        np.testing.assert_allclose(tr.cumulative_fpr(), [np.nan, 1.0, 0.5, 0.5, 1 / 3])
        np.testing.assert_allclose(tr.cumulative_tpr(), [1.0, 1.0, 1.0, 0.5, 0.5])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from([-1, 1]), st.sampled_from([-1, 1])), min_size=1, max_size=40))
    def test_prefix_rates_agree_with_direct_count(self, pairs):
        labels, decisions = zip(*pairs)
        tr = RunTrace(labels, decisions)
        fpr, tpr = tr.cumulative_fpr(), tr.cumulative_tpr()
        for t in range(len(pairs)):
            r = rates_from_decisions(labels[: t + 1], decisions[: t + 1])
            assert (math.isnan(fpr[t]) if r.fpr is None else fpr[t] == pytest.approx(r.fpr, abs=1e-12))
            assert (math.isnan(tpr[t]) if r.tpr is None else tpr[t] == pytest.approx(r.tpr, abs=1e-12))

    def test_rows_thinning_keeps_last(self):
        tr = RunTrace([1, -1] * 5, [1, -1] * 5)
        steps = [r[0] for r in tr.rows(every=4)]
        assert steps == [4, 8, 10]


class _State:
    def __init__(self, params):
        self.params = params
        self.t = self.n_pos = self.n_neg = 0
        self.gamma, self.eta, self.beta = params.gamma1, params.eta1, params.beta1
        self.b = 0.0
        self.window = FprWindow(params.window)


@pytest.mark.parametrize("update", ["window", "stochastic"])
def test_bookkeeping_paths_agree(update):
    """Python reference bookkeeping and its compiled twin track each other exactly."""
    p = quiet_params(tau=0.1, window=5, min_window=2, beta1=0.3, gamma_update=update, lam=0.01)
    ref = _State(p)
    rng = np.random.default_rng(3)
    cnt, scal, bits = core.pack_state(ref)
    hyper = core.pack_hyper(p)
    for _ in range(200):
        y = int(rng.choice([-1, 1]))
        decision = int(rng.choice([-1, 1]))
        margin = float(rng.normal())
        core.register(ref, y, decision)
        mu = core.sample_weight(ref, y)
        core.update_multiplier(ref, y, margin)
        core.decay_rates(ref)
        core._nb_register(cnt, bits, y, decision)
        assert core._nb_weight(cnt, scal, y) == pytest.approx(mu, rel=1e-15)
        core._nb_finish(cnt, scal, hyper, y, margin)
        assert scal[core.GAMMA] == pytest.approx(ref.gamma, rel=1e-12)
        assert (cnt[core.T], cnt[core.NPOS], cnt[core.NNEG]) == (ref.t, ref.n_pos, ref.n_neg)
        assert cnt[core.WSUM] == ref.window.total and cnt[core.WCOUNT] == len(ref.window)
        assert scal[core.ETA] == ref.eta and scal[core.BETA] == ref.beta
