"""OLNP: the linear online Neyman-Pearson baseline.

Same Lagrangian loop as :mod:`onlinenp.npnn` with the identity feature map,
``f(x) = w.x + b``, and nothing to learn in a hidden layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import core
from .core import B, ETA, LAM, FprWindow, Hyperparams, LabeledSample, RunTrace
from .errors import InvalidArgumentError
from .npnn import _as_arrays
from .seeds import derive_seed, make_rng


@dataclass
class LinearState:
    params: Hyperparams
    w: np.ndarray
    b: float
    gamma: float
    t: int
    n_pos: int
    n_neg: int
    eta: float
    beta: float
    window: FprWindow
    seed: int | None = None

    kind = "olnp"

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def copy(self) -> "LinearState":
        return LinearState(self.params, self.w.copy(), self.b, self.gamma, self.t, self.n_pos,
                           self.n_neg, self.eta, self.beta, self.window.copy(), self.seed)

    def __eq__(self, other):
        if not isinstance(other, LinearState):
            return NotImplemented
        return (self.params == other.params and np.array_equal(self.w, other.w) and self.b == other.b
                and self.gamma == other.gamma and (self.t, self.n_pos, self.n_neg) == (other.t, other.n_pos, other.n_neg)
                and self.eta == other.eta and self.beta == other.beta
                and self.window == other.window and self.seed == other.seed)

    __hash__ = None


def init_state(params: Hyperparams, d: int, seed: int) -> LinearState:
    if int(d) != d or d < 1:
        raise InvalidArgumentError(f"d must be a positive integer, got {d!r}")
    rng = make_rng(derive_seed(seed, "init"))
    init = rng.uniform(-params.init_scale, params.init_scale, size=int(d) + 1)
    return LinearState(
        params=params, w=init[:-1].copy(), b=float(init[-1]), gamma=params.gamma1,
        t=0, n_pos=0, n_neg=0, eta=params.eta1, beta=params.beta1,
        window=FprWindow(params.window), seed=int(seed),
    )


def _check(state, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != state.dim:
        raise InvalidArgumentError(f"expected a vector of dimension {state.dim}, got shape {x.shape}")
    return x


def forward(state: LinearState, x) -> float:
    return float(_check(state, x) @ state.w + state.b)


def predict(state: LinearState, x) -> int:
    return 1 if forward(state, x) > 0 else -1


def decision_function(state: LinearState, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != state.dim:
        raise InvalidArgumentError(f"expected shape (n, {state.dim}), got {X.shape}")
    return X @ state.w + state.b


def predict_many(state: LinearState, X) -> np.ndarray:
    return np.where(decision_function(state, X) > 0, 1, -1).astype(np.int8)


def loss(state: LinearState, x, y: int) -> float:
    return core.sigmoid_loss(y * forward(state, x))


def gradients(state: LinearState, sample: LabeledSample):
    """Gradients of ``l(y f(x))`` with respect to ``w`` and ``b``."""
    x = _check(state, sample.x)
    s = core.loss_slope(sample.y * forward(state, x)) * sample.y
    return s * x, s


def linear_step(state: LinearState, sample: LabeledSample) -> int:
    """One prequential step, in place.  Returns the pre-update decision."""
    x, y = sample.x, sample.y
    decision = predict(state, x)
    core.register(state, y, decision)
    mu = core.sample_weight(state, y)
    grad_w, grad_b = gradients(state, sample)
    margin = y * forward(state, x)
    state.w = state.w - state.eta * (state.params.lam * state.w + mu * grad_w)
    state.b = state.b - state.eta * mu * grad_b
    core.update_multiplier(state, y, margin)
    core.decay_rates(state)
    return decision


@njit(cache=True)
def _linear_pass(X, Y, w, cnt, scal, bits, hyper, decisions):
    n, d = X.shape
    for k in range(n):
        x = X[k]
        y = Y[k]
        f = scal[B]
        for j in range(d):
            f += w[j] * x[j]
        decision = 1 if f > 0.0 else -1
        decisions[k] = decision
        core._nb_register(cnt, bits, y, decision)
        mu = core._nb_weight(cnt, scal, y)
        margin = y * f
        s = -core._nb_loss(margin) * core._nb_loss(-margin) * y
        step = scal[ETA] * mu * s
        shrink = 1.0 - scal[ETA] * hyper[LAM]
        for j in range(d):
            w[j] = shrink * w[j] - step * x[j]
        scal[B] -= step
        core._nb_finish(cnt, scal, hyper, y, margin)


def partial_fit(state: LinearState, stream) -> np.ndarray:
    X, y = _as_arrays(stream, state.dim)
    cnt, scal, bits = core.pack_state(state)
    w = state.w.copy()
    decisions = np.empty(len(y), dtype=np.int8)
    _linear_pass(X, y, w, cnt, scal, bits, core.pack_hyper(state.params), decisions)
    core.unpack_state(state, cnt, scal, bits)
    state.w = w
    return decisions


def run_stream(params: Hyperparams, stream, seed: int):
    X, y = _as_arrays(stream)
    state = init_state(params, X.shape[1], seed)
    decisions = partial_fit(state, (X, y))
    return state, RunTrace(y, decisions)
