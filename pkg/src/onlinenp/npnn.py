"""NP-NN: a single-hidden-layer network with a random-Fourier-feature hidden
layer, trained online on the Lagrangian Neyman-Pearson objective.

The decision at step ``t`` is taken before any parameter moves (prequential
order).  Per sample the update is::

    m   = y * f(x)
    s   = -l(m)^2 exp(m) * y                      # slope of the sigmoid loss
    w  <- w - eta * (lam * w + mu * s * phi(x))
    b  <- b - eta * mu * s
    a_i <- a_i - eta * mu * s / sqrt(D) * (-w_cos_i sin(a_i.x) + w_sin_i cos(a_i.x)) * x

where ``mu`` is ``t/n_pos`` or ``gamma * t/n_neg``.  The ``1/sqrt(D)`` in the
frequency gradient comes from the feature scaling and is required by the
chain rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import core
from .core import B, ETA, LAM, FprWindow, Hyperparams, LabeledSample, RunTrace
from .errors import InvalidArgumentError
from .rff import FrequencyBank, sample_bank, transform, transform_many
from .seeds import derive_seed, make_rng


@dataclass
class ModelState:
    params: Hyperparams
    bank: FrequencyBank
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

    kind = "npnn"

    @property
    def dim(self) -> int:
        return self.bank.dim_in

    def copy(self) -> "ModelState":
        return ModelState(self.params, self.bank, self.w.copy(), self.b, self.gamma, self.t,
                          self.n_pos, self.n_neg, self.eta, self.beta, self.window.copy(), self.seed)

    def __eq__(self, other):
        if not isinstance(other, ModelState):
            return NotImplemented
        return (self.params == other.params and self.bank == other.bank
                and np.array_equal(self.w, other.w) and self.b == other.b
                and self.gamma == other.gamma and (self.t, self.n_pos, self.n_neg) == (other.t, other.n_pos, other.n_neg)
                and self.eta == other.eta and self.beta == other.beta
                and self.window == other.window and self.seed == other.seed)

    __hash__ = None


def init_state(params: Hyperparams, d: int, seed: int) -> ModelState:
    """Fresh model: frequencies from ``N(0, 2g I)``; ``w``, ``b`` uniform in ``[-init_scale, init_scale]``."""
    bank = sample_bank(d, params.D, params.g, derive_seed(seed, "bank"))
    rng = make_rng(derive_seed(seed, "init"))
    init = rng.uniform(-params.init_scale, params.init_scale, size=2 * params.D + 1)
    return ModelState(
        params=params, bank=bank, w=init[:-1].copy(), b=float(init[-1]),
        gamma=params.gamma1, t=0, n_pos=0, n_neg=0,
        eta=params.eta1, beta=params.beta1, window=FprWindow(params.window), seed=int(seed),
    )


def forward(state: ModelState, x) -> float:
    return float(transform(state.bank, x) @ state.w + state.b)


def predict(state: ModelState, x) -> int:
    """``+1`` iff ``f(x) > 0``; a tie at zero is ``-1``."""
    return 1 if forward(state, x) > 0 else -1


def decision_function(state: ModelState, X) -> np.ndarray:
    return transform_many(state.bank, X) @ state.w + state.b


def predict_many(state: ModelState, X) -> np.ndarray:
    return np.where(decision_function(state, X) > 0, 1, -1).astype(np.int8)


def loss(state: ModelState, x, y: int) -> float:
    """Sigmoid surrogate ``l(y f(x))`` of the 0-1 error on one sample."""
    return core.sigmoid_loss(y * forward(state, x))


def gradients(state: ModelState, sample: LabeledSample):
    """Gradients of ``l(y f(x))`` with respect to ``w``, ``b`` and each frequency row.

    Regularization and the ``mu`` weight are not included.
    """
    x, y = sample.x, sample.y
    bank = state.bank
    if x.shape[0] != bank.dim_in:
        raise InvalidArgumentError(f"expected a vector of dimension {bank.dim_in}, got {x.shape[0]}")
    phi = transform(bank, x)
    f = phi @ state.w + state.b
    s = core.loss_slope(y * f) * y
    z = bank.freqs @ x
    coef = (-state.w[0::2] * np.sin(z) + state.w[1::2] * np.cos(z)) * math.sqrt(1.0 / bank.num_pairs)
    return s * phi, s, s * np.outer(coef, x)


def sgd_step(state: ModelState, sample: LabeledSample) -> int:
    """One prequential step, in place.  Returns the decision made before the update.

    This is the readable reference path; :func:`partial_fit` runs the same
    recursion compiled.
    """
    x, y = sample.x, sample.y
    decision = predict(state, x)
    core.register(state, y, decision)
    mu = core.sample_weight(state, y)
    grad_w, grad_b, grad_a = gradients(state, sample)
    margin = y * forward(state, x)
    p = state.params
    state.w = state.w - state.eta * (p.lam * state.w + mu * grad_w)
    state.b = state.b - state.eta * mu * grad_b
    if p.train_hidden:
        state.bank = FrequencyBank(state.bank.freqs - state.eta * mu * grad_a, state.bank.g)
    core.update_multiplier(state, y, margin)
    core.decay_rates(state)
    return decision


@njit(cache=True)
def _npnn_pass(X, Y, freqs, w, cnt, scal, bits, hyper, train_hidden, decisions):
    n, d = X.shape
    D = freqs.shape[0]
    scale = math.sqrt(1.0 / D)
    z = np.empty(D)
    coef = np.empty(D)
    for k in range(n):
        x = X[k]
        y = Y[k]
        f = scal[B]
        for i in range(D):
            a = 0.0
            for j in range(d):
                a += freqs[i, j] * x[j]
            z[i] = a
            f += scale * (w[2 * i] * math.cos(a) + w[2 * i + 1] * math.sin(a))
        decision = 1 if f > 0.0 else -1
        decisions[k] = decision
        core._nb_register(cnt, bits, y, decision)
        mu = core._nb_weight(cnt, scal, y)
        margin = y * f
        s = -core._nb_loss(margin) * core._nb_loss(-margin) * y
        step = scal[ETA] * mu * s
        shrink = 1.0 - scal[ETA] * hyper[LAM]
        for i in range(D):
            c = math.cos(z[i])
            sn = math.sin(z[i])
            coef[i] = scale * (-w[2 * i] * sn + w[2 * i + 1] * c)
            w[2 * i] = shrink * w[2 * i] - step * scale * c
            w[2 * i + 1] = shrink * w[2 * i + 1] - step * scale * sn
        scal[B] -= step
        if train_hidden:
            for i in range(D):
                g = step * coef[i]
                for j in range(d):
                    freqs[i, j] -= g * x[j]
        core._nb_finish(cnt, scal, hyper, y, margin)


def _as_arrays(stream, d=None):
    """Accept ``(X, y)``, a Dataset-like object with ``X``/``y``, or a sequence of LabeledSample."""
    if isinstance(stream, tuple) and len(stream) == 2:
        X, y = stream
    elif hasattr(stream, "X") and hasattr(stream, "y"):
        X, y = stream.X, stream.y
    else:
        samples = list(stream)
        if not samples:
            raise InvalidArgumentError("stream is empty")
        width = d if d is not None else samples[0].x.shape[0]
        for i, s in enumerate(samples):
            if s.x.shape[0] != width:
                raise InvalidArgumentError(f"sample {i} has dimension {s.x.shape[0]}, expected {width}")
        X = np.array([s.x for s in samples])
        y = np.array([s.y for s in samples])
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidArgumentError("stream is empty")
    if d is not None and X.shape[1] != d:
        raise InvalidArgumentError(f"sample 0 has dimension {X.shape[1]}, expected {d}")
    if y.shape != (X.shape[0],) or not np.all((y == 1) | (y == -1)):
        raise InvalidArgumentError("labels must be a vector of -1/+1 matching X")
    if not np.all(np.isfinite(X)):
        bad = int(np.argwhere(~np.isfinite(X))[0, 0])
        raise InvalidArgumentError(f"sample {bad} has non-finite features")
    return X, y


def partial_fit(state: ModelState, stream) -> np.ndarray:
    """Run the compiled recursion over ``stream`` in place; returns the decisions."""
    X, y = _as_arrays(stream, state.dim)
    cnt, scal, bits = core.pack_state(state)
    freqs = state.bank.freqs.copy()
    w = state.w.copy()
    decisions = np.empty(len(y), dtype=np.int8)
    _npnn_pass(X, y, freqs, w, cnt, scal, bits, core.pack_hyper(state.params),
               bool(state.params.train_hidden), decisions)
    core.unpack_state(state, cnt, scal, bits)
    state.w = w
    state.bank = FrequencyBank(freqs, state.bank.g)
    return decisions


def run_stream(params: Hyperparams, stream, seed: int):
    """Initialize from ``seed`` and make one prequential pass.  Returns ``(state, trace)``."""
    X, y = _as_arrays(stream)
    state = init_state(params, X.shape[1], seed)
    decisions = partial_fit(state, (X, y))
    return state, RunTrace(y, decisions)
