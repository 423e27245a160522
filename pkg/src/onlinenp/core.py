"""Lagrangian Neyman-Pearson training machinery shared by NP-NN and OLNP.

Both models run the same per-sample loop and differ only in the feature map
``f(x)``.  The bookkeeping that does not depend on the map lives here:
class counters, the sliding false-positive window, the per-sample weight
``mu``, the multiplier update and the learning-rate schedule.

Two implementations exist side by side.  The plain Python functions operate
on state objects and accept any window object (tests stub it).  The
``_nb_*`` functions are numba-compiled twins over packed arrays, used by the
model kernels for whole-stream passes.  The test suite checks the two paths
against each other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np
from numba import njit

from .errors import InvalidArgumentError

GAMMA_UPDATES = ("window", "stochastic")


@dataclass(frozen=True)
class Hyperparams:
    """Training hyperparameters.

    ``g`` and ``D`` only matter for NP-NN.  ``min_window`` defaults to
    ``min(window, 20)``: the multiplier is not touched until that many
    negatives have been seen.
    """

    tau: float
    g: float = 1.0
    D: int = 50
    lam: float = 0.0
    eta1: float = 0.01
    beta1: float = 0.0005
    gamma1: float = 1.0
    window: int = 200
    train_hidden: bool = True
    min_window: int | None = None
    gamma_min: float = 1e-6
    factor_floor: float = 0.1
    gamma_update: str = "window"
    init_scale: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise InvalidArgumentError(f"tau must lie in (0, 1), got {self.tau}")
        if not self.g > 0:
            raise InvalidArgumentError(f"g must be positive, got {self.g}")
        if int(self.D) != self.D or self.D < 1:
            raise InvalidArgumentError(f"D must be a positive integer, got {self.D}")
        if not self.lam >= 0:
            raise InvalidArgumentError(f"lam must be non-negative, got {self.lam}")
        for name in ("eta1", "beta1", "gamma1", "gamma_min"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive, got {getattr(self, name)}")
        if int(self.window) != self.window or self.window < 1:
            raise InvalidArgumentError(f"window must be a positive integer, got {self.window}")
        if not 0.0 < self.factor_floor <= 1.0:
            raise InvalidArgumentError(f"factor_floor must lie in (0, 1], got {self.factor_floor}")
        if self.gamma_update not in GAMMA_UPDATES:
            raise InvalidArgumentError(f"gamma_update must be one of {GAMMA_UPDATES}, got {self.gamma_update!r}")
        if not self.init_scale >= 0:
            raise InvalidArgumentError(f"init_scale must be non-negative, got {self.init_scale}")
        if self.min_window is None:
            object.__setattr__(self, "min_window", min(int(self.window), 20))
        elif int(self.min_window) != self.min_window or not 1 <= self.min_window <= self.window:
            raise InvalidArgumentError(f"min_window must lie in [1, window], got {self.min_window}")
        object.__setattr__(self, "D", int(self.D))
        object.__setattr__(self, "window", int(self.window))
        object.__setattr__(self, "min_window", int(self.min_window))
        ratio = self.beta1 / self.eta1
        if not 0.01 <= ratio <= 0.1:
            warnings.warn(
                f"beta1/eta1 = {ratio:.4g} is outside the usual [0.01, 0.1] range",
                stacklevel=3,
            )

    def replace(self, **changes) -> "Hyperparams":
        """Copy with ``changes``; the rate-ratio warning fires only if a rate changed."""
        if "eta1" in changes or "beta1" in changes:
            return replace(self, **changes)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            return replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class FprWindow:
    """Ring buffer of 0-1 false-positive outcomes on recent negatives."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidArgumentError(f"window capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.bits = np.zeros(self.capacity, dtype=np.uint8)
        self.pos = 0
        self.count = 0
        self.total = 0

    def push(self, error: bool) -> None:
        bit = 1 if error else 0
        if self.count == self.capacity:
            self.total -= int(self.bits[self.pos])
        else:
            self.count += 1
        self.bits[self.pos] = bit
        self.total += bit
        self.pos = (self.pos + 1) % self.capacity

    def estimate(self) -> float:
        """Fraction of stored negatives that were called positive (0 when empty)."""
        return self.total / self.count if self.count else 0.0

    def __len__(self) -> int:
        return self.count

    def ordered(self) -> np.ndarray:
        """Stored bits from oldest to newest."""
        if self.count < self.capacity:
            return self.bits[: self.count].copy()
        return np.concatenate([self.bits[self.pos :], self.bits[: self.pos]])

    @classmethod
    def from_ordered(cls, capacity: int, bits) -> "FprWindow":
        win = cls(capacity)
        for b in np.asarray(bits, dtype=np.uint8):
            win.push(bool(b))
        return win

    def copy(self) -> "FprWindow":
        other = FprWindow.__new__(FprWindow)
        other.capacity = self.capacity
        other.bits = self.bits.copy()
        other.pos, other.count, other.total = self.pos, self.count, self.total
        return other

    def __eq__(self, other):
        if not isinstance(other, FprWindow):
            return NotImplemented
        return self.capacity == other.capacity and np.array_equal(self.ordered(), other.ordered())

    __hash__ = None


@dataclass(frozen=True)
class LabeledSample:
    x: np.ndarray
    y: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise InvalidArgumentError("sample features must be a finite 1-d vector")
        if self.y not in (-1, 1):
            raise InvalidArgumentError(f"label must be -1 or +1, got {self.y!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", int(self.y))


def sigmoid_loss(m):
    """``1 / (1 + exp(m))`` without overflow; works on scalars and arrays."""
    m = np.asarray(m, dtype=np.float64)
    e = np.exp(-np.abs(m))
    out = np.where(m >= 0, e / (1.0 + e), 1.0 / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def loss_slope(m: float) -> float:
    """Derivative of :func:`sigmoid_loss`: ``-l(m)^2 exp(m) = -l(m) l(-m)``."""
    return -sigmoid_loss(m) * sigmoid_loss(-m)


# Python reference path. ``state`` is any object with the common fields
# (params, gamma, t, n_pos, n_neg, eta, beta, window).


def register(state, y: int, decision: int) -> None:
    """Count the incoming sample and log its false-positive outcome."""
    state.t += 1
    if y == 1:
        state.n_pos += 1
    else:
        state.n_neg += 1
        state.window.push(decision == 1)


def sample_weight(state, y: int) -> float:
    """``t / n_pos`` for positives and ``gamma * t / n_neg`` for negatives."""
    if y == 1:
        if state.n_pos == 0:
            raise RuntimeError("positive counter is zero; register() must run first")
        return state.t / state.n_pos
    if state.n_neg == 0:
        raise RuntimeError("negative counter is zero; register() must run first")
    return state.gamma * state.t / state.n_neg


def update_multiplier(state, y: int, margin: float) -> None:
    p = state.params
    if p.gamma_update == "window":
        if y != -1 or len(state.window) < p.min_window:
            return
        factor = 1.0 + state.beta * (state.window.estimate() - p.tau)
        state.gamma = max(state.gamma * max(factor, p.factor_floor), p.gamma_min)
    else:
        soft_fp = state.t / state.n_neg * sigmoid_loss(margin) if y == -1 else 0.0
        state.gamma = max(state.gamma + state.beta * (soft_fp - p.tau), p.gamma_min)


def decay_rates(state) -> None:
    p = state.params
    scale = 1.0 + p.lam * state.t
    state.eta = p.eta1 / scale
    state.beta = p.beta1 / scale


# Compiled path over packed arrays.

T, NPOS, NNEG, WPOS, WCOUNT, WSUM = range(6)
B, GAMMA, ETA, BETA = range(4)
TAU, LAM, ETA1, BETA1, GAMMA_MIN, FLOOR, MIN_WINDOW, STOCHASTIC = range(8)


def pack_hyper(p: Hyperparams) -> np.ndarray:
    return np.array(
        [p.tau, p.lam, p.eta1, p.beta1, p.gamma_min, p.factor_floor, p.min_window,
         1.0 if p.gamma_update == "stochastic" else 0.0]
    )


def pack_state(state):
    win = state.window
    cnt = np.array([state.t, state.n_pos, state.n_neg, win.pos, win.count, win.total], dtype=np.int64)
    scal = np.array([state.b, state.gamma, state.eta, state.beta])
    return cnt, scal, win.bits.copy()


def unpack_state(state, cnt, scal, bits) -> None:
    state.t, state.n_pos, state.n_neg = int(cnt[T]), int(cnt[NPOS]), int(cnt[NNEG])
    win = FprWindow(len(bits))
    win.bits = bits
    win.pos, win.count, win.total = int(cnt[WPOS]), int(cnt[WCOUNT]), int(cnt[WSUM])
    state.window = win
    state.b, state.gamma, state.eta, state.beta = (float(v) for v in scal)


@njit(cache=True)
def _nb_loss(m):
    if m >= 0.0:
        e = math.exp(-m)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(m))


@njit(cache=True)
def _nb_register(cnt, bits, y, decision):
    cnt[T] += 1
    if y == 1:
        cnt[NPOS] += 1
    else:
        cnt[NNEG] += 1
        bit = 1 if decision == 1 else 0
        cap = bits.shape[0]
        if cnt[WCOUNT] == cap:
            cnt[WSUM] -= bits[cnt[WPOS]]
        else:
            cnt[WCOUNT] += 1
        bits[cnt[WPOS]] = bit
        cnt[WSUM] += bit
        cnt[WPOS] = (cnt[WPOS] + 1) % cap


@njit(cache=True)
def _nb_weight(cnt, scal, y):
    if y == 1:
        return cnt[T] / cnt[NPOS]
    return scal[GAMMA] * cnt[T] / cnt[NNEG]


@njit(cache=True)
def _nb_finish(cnt, scal, hyper, y, margin):
    """Multiplier update followed by the rate decay."""
    if hyper[STOCHASTIC] == 0.0:
        if y == -1 and cnt[WCOUNT] >= hyper[MIN_WINDOW]:
            factor = 1.0 + scal[BETA] * (cnt[WSUM] / cnt[WCOUNT] - hyper[TAU])
            if factor < hyper[FLOOR]:
                factor = hyper[FLOOR]
            scal[GAMMA] = max(scal[GAMMA] * factor, hyper[GAMMA_MIN])
    else:
        soft_fp = 0.0
        if y == -1:
            soft_fp = cnt[T] / cnt[NNEG] * _nb_loss(margin)
        scal[GAMMA] = max(scal[GAMMA] + scal[BETA] * (soft_fp - hyper[TAU]), hyper[GAMMA_MIN])
    scale = 1.0 + hyper[LAM] * cnt[T]
    scal[ETA] = hyper[ETA1] / scale
    scal[BETA] = hyper[BETA1] / scale


@dataclass
class RunTrace:
    """Prequential log of one pass: labels and the decisions made before each update."""

    labels: np.ndarray
    decisions: np.ndarray
    offset: int = field(default=0)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int8)
        self.decisions = np.asarray(self.decisions, dtype=np.int8)
        if self.labels.shape != self.decisions.shape:
            raise InvalidArgumentError("labels and decisions must have the same length")

    def __len__(self) -> int:
        return len(self.labels)

    def cumulative_fpr(self) -> np.ndarray:
        """FPR over the prefix ending at each step; NaN before the first negative."""
        neg = self.labels == -1
        fp = np.cumsum(neg & (self.decisions == 1))
        n = np.cumsum(neg)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > 0, fp / np.maximum(n, 1), np.nan)

    def cumulative_tpr(self) -> np.ndarray:
        """TPR over the prefix ending at each step; NaN before the first positive."""
        pos = self.labels == 1
        tp = np.cumsum(pos & (self.decisions == 1))
        n = np.cumsum(pos)
        return np.where(n > 0, tp / np.maximum(n, 1), np.nan)

    def rows(self, every: int = 1):
        """``(step, cum_fpr, cum_tpr)`` tuples, 1-based steps, thinned to every ``every``-th step
        (the last step is always included)."""
        fpr, tpr = self.cumulative_fpr(), self.cumulative_tpr()
        n = len(self)
        idx = list(range(every - 1, n, every))
        if n and (not idx or idx[-1] != n - 1):
            idx.append(n - 1)
        return [(self.offset + i + 1, float(fpr[i]), float(tpr[i])) for i in idx]

    def __eq__(self, other):
        if not isinstance(other, RunTrace):
            return NotImplemented
        return (self.offset == other.offset and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.decisions, other.decisions))

    __hash__ = None
