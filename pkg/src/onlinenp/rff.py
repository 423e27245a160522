"""Random Fourier features for the rbf kernel ``exp(-g * ||x - y||^2)``.

The frequency bank stores one row per cos/sin pair.  Feature vectors are
interleaved as ``(cos_1, sin_1, cos_2, sin_2, ...)`` and scaled by
``sqrt(1/D)`` so that every feature vector has unit norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .seeds import make_rng


@dataclass(frozen=True)
class FrequencyBank:
    """``D`` frequency rows of dimension ``d`` drawn for bandwidth ``g``.

    The ``freqs`` array is made read-only; training produces new banks.
    """

    freqs: np.ndarray
    g: float

    def __post_init__(self):
        freqs = np.array(self.freqs, dtype=np.float64)
        if freqs.ndim != 2 or freqs.shape[0] < 1 or freqs.shape[1] < 1:
            raise InvalidArgumentError(f"freqs must be a non-empty D x d matrix, got shape {freqs.shape}")
        if not np.all(np.isfinite(freqs)):
            raise InvalidArgumentError("freqs must be finite")
        if not self.g > 0:
            raise InvalidArgumentError(f"bandwidth g must be positive, got {self.g}")
        freqs.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "g", float(self.g))

    @property
    def num_pairs(self) -> int:
        return self.freqs.shape[0]

    @property
    def dim_in(self) -> int:
        return self.freqs.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FrequencyBank):
            return NotImplemented
        return self.g == other.g and np.array_equal(self.freqs, other.freqs)

    __hash__ = None


def sample_bank(d: int, D: int, g: float, seed: int) -> FrequencyBank:
    """Draw ``D`` i.i.d. frequencies from ``N(0, 2g I_d)``.

    Sampling uses :func:`onlinenp.seeds.make_rng` (numpy PCG64 with the
    ziggurat normal sampler), so a fixed seed gives a bit-identical bank.
    """
    if int(d) != d or d < 1:
        raise InvalidArgumentError(f"d must be a positive integer, got {d!r}")
    if int(D) != D or D < 1:
        raise InvalidArgumentError(f"D must be a positive integer, got {D!r}")
    if not (np.isfinite(g) and g > 0):
        raise InvalidArgumentError(f"bandwidth g must be positive, got {g!r}")
    rng = make_rng(seed)
    freqs = rng.standard_normal((int(D), int(d))) * np.sqrt(2.0 * g)
    return FrequencyBank(freqs, g)


def _check_vector(bank: FrequencyBank, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != bank.dim_in:
        raise InvalidArgumentError(f"expected a vector of dimension {bank.dim_in}, got shape {x.shape}")
    return x


def transform(bank: FrequencyBank, x) -> np.ndarray:
    """Map ``x`` to its ``2D`` interleaved feature vector."""
    x = _check_vector(bank, x)
    z = bank.freqs @ x
    out = np.empty(2 * bank.num_pairs)
    out[0::2] = np.cos(z)
    out[1::2] = np.sin(z)
    out *= np.sqrt(1.0 / bank.num_pairs)
    return out


def transform_many(bank: FrequencyBank, X) -> np.ndarray:
    """Row-wise :func:`transform` for an ``(n, d)`` matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != bank.dim_in:
        raise InvalidArgumentError(f"expected shape (n, {bank.dim_in}), got {X.shape}")
    z = X @ bank.freqs.T
    out = np.empty((X.shape[0], 2 * bank.num_pairs))
    out[:, 0::2] = np.cos(z)
    out[:, 1::2] = np.sin(z)
    out *= np.sqrt(1.0 / bank.num_pairs)
    return out


def kernel_estimate(bank: FrequencyBank, x, y) -> float:
    """Approximate ``k(x, y)`` by the inner product of the two feature vectors."""
    return float(transform(bank, x) @ transform(bank, y))


def kernel_estimate_diff(bank: FrequencyBank, x, y) -> float:
    """Same estimate written as the mean of ``cos(a_i . (x - y))``."""
    diff = _check_vector(bank, x) - _check_vector(bank, y)
    return float(np.mean(np.cos(bank.freqs @ diff)))


def rbf_kernel(x, y, g: float) -> float:
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.exp(-g * (diff @ diff)))
