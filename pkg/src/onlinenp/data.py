"""Datasets: loading, normalization, permutation and synthetic generators."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import InvalidArgumentError, ParseError, SchemaError
from .seeds import make_rng

_STD_NORMAL = NormalDist()


@dataclass
class Dataset:
    """Labelled samples as an ``(n, d)`` float matrix and a ``{-1, +1}`` label vector."""

    X: np.ndarray
    y: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise SchemaError(f"X must be 2-d, got shape {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise SchemaError("y must have one label per row of X")
        if not np.all((self.y == 1) | (self.y == -1)):
            raise SchemaError("labels must be -1 or +1")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.y == 1))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.y == -1))

    def subset(self, idx, provenance=None) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.provenance if provenance is None else provenance)


def minority_positive(ds: Dataset) -> Dataset:
    """Relabel so the smaller class is ``+1`` (ties keep the labels)."""
    if ds.n_pos <= ds.n_neg:
        return ds
    return Dataset(ds.X, -ds.y, ds.provenance)


_MINUS = "−"


def _parse_label(token: str):
    return float(token.strip().replace(_MINUS, "-"))


def _coerce_labels(raw, path) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    values = set(np.unique(raw).tolist())
    if values <= {-1.0, 1.0}:
        return raw.astype(np.int64)
    if values <= {0.0, 1.0}:
        return np.where(raw == 1.0, 1, -1)
    raise SchemaError(f"{path}: labels must be in {{-1, +1}} or {{0, 1}}, found {sorted(values)}")


def load_delimited(path, label_column: int = -1, delimiter: str = ",", header: bool = False) -> Dataset:
    """Read a delimited text file with one sample per line.

    Blank lines and lines starting with ``#`` are skipped.  Labels may be
    ``-1/+1`` or ``0/1`` (0 maps to -1).
    """
    rows, labels = [], []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if header and lineno == 1:
                continue
            cells = [c.strip() for c in (text.split(delimiter) if delimiter.strip() else text.split())]
            if len(cells) < 2:
                raise ParseError(path, lineno, "need at least one feature and a label")
            try:
                label = _parse_label(cells.pop(label_column))
                values = [float(c.replace(_MINUS, "-")) for c in cells]
            except (ValueError, IndexError) as exc:
                raise ParseError(path, lineno, f"non-numeric cell ({exc})") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise SchemaError(f"{path}, line {lineno}: expected {width} features, got {len(values)}")
            rows.append(values)
            labels.append(label)
    if not rows:
        raise SchemaError(f"{path}: no samples")
    return Dataset(np.array(rows), _coerce_labels(labels, path), os.fspath(path))


def load_sparse(path) -> Dataset:
    """Read ``label idx:value ...`` lines with 1-based, strictly increasing indices."""
    entries, labels = [], []
    d = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            tokens = text.split()
            try:
                label = _parse_label(tokens[0])
            except ValueError:
                raise ParseError(path, lineno, f"bad label {tokens[0]!r}") from None
            row = []
            last = 0
            for tok in tokens[1:]:
                idx_s, sep, val_s = tok.partition(":")
                try:
                    idx, val = int(idx_s), float(val_s.replace(_MINUS, "-"))
                except ValueError:
                    raise ParseError(path, lineno, f"bad feature {tok!r}") from None
                if not sep:
                    raise ParseError(path, lineno, f"bad feature {tok!r}")
                if idx < 1:
                    raise ParseError(path, lineno, f"feature index must be >= 1, got {idx}")
                if idx <= last:
                    raise ParseError(path, lineno, f"feature index {idx} not greater than {last}")
                last = idx
                row.append((idx - 1, val))
            d = max(d, last)
            entries.append(row)
            labels.append(label)
    if not entries:
        raise SchemaError(f"{path}: no samples")
    X = np.zeros((len(entries), max(d, 1)))
    for i, row in enumerate(entries):
        for j, v in row:
            X[i, j] = v
    return Dataset(X, _coerce_labels(labels, path), os.fspath(path))


def _fmt(v: float) -> str:
    return repr(float(v))


def write_delimited(ds: Dataset, path, delimiter: str = ",") -> None:
    """Write features followed by the ``+1``/``-1`` label; floats use shortest round-trip form."""
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in zip(ds.X, ds.y):
            fh.write(delimiter.join([*map(_fmt, x), "+1" if y == 1 else "-1"]) + "\n")


def write_sparse(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in zip(ds.X, ds.y):
            feats = " ".join(f"{j + 1}:{_fmt(v)}" for j, v in enumerate(x) if v != 0.0)
            fh.write(("+1" if y == 1 else "-1") + (" " + feats if feats else "") + "\n")


class Normalizer:
    """``zscore`` (per-feature, fitted) or ``unitnorm`` (per-row, stateless).

    Zero-variance features map to 0 under z-score; zero rows stay zero under
    unit-norm.
    """

    KINDS = ("zscore", "unitnorm", "none")

    def __init__(self, kind: str = "zscore"):
        if kind not in self.KINDS:
            raise InvalidArgumentError(f"unknown normalization {kind!r}")
        self.kind = kind
        self.mean = None
        self.std = None

    def fit(self, X) -> "Normalizer":
        X = np.asarray(X, dtype=np.float64)
        if self.kind == "zscore":
            self.mean = X.mean(axis=0)
            self.std = X.std(axis=0)
        return self

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.kind == "zscore":
            if self.mean is None:
                raise InvalidArgumentError("z-score normalizer used before fit()")
            safe = np.where(self.std > 0, self.std, 1.0)
            return np.where(self.std > 0, (X - self.mean) / safe, 0.0)
        if self.kind == "unitnorm":
            norms = np.linalg.norm(X, axis=1, keepdims=True)
            return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)
        return X.copy()

    def fit_transform(self, X) -> np.ndarray:
        return self.fit(X).transform(X)

    def apply(self, ds: Dataset) -> Dataset:
        return Dataset(self.transform(ds.X), ds.y, ds.provenance)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "zscore" and self.mean is not None:
            out["mean"] = [float(v).hex() for v in self.mean]
            out["std"] = [float(v).hex() for v in self.std]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Normalizer":
        norm = cls(data["kind"])
        if "mean" in data:
            norm.mean = np.array([float.fromhex(v) for v in data["mean"]])
            norm.std = np.array([float.fromhex(v) for v in data["std"]])
        return norm


def permute_and_split(ds: Dataset, seed: int, train_fraction: float = 0.75):
    """Seeded uniform permutation; the first ``ceil(fraction * n)`` samples train."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgumentError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    perm = make_rng(seed).permutation(len(ds))
    cut = math.ceil(train_fraction * len(ds))
    return ds.subset(perm[:cut]), ds.subset(perm[cut:])


def concat_epochs(ds: Dataset, epochs: int, seed: int) -> Dataset:
    """The training sequence followed by ``epochs - 1`` freshly shuffled copies."""
    if epochs < 1:
        raise InvalidArgumentError(f"epochs must be >= 1, got {epochs}")
    if epochs == 1:
        return ds
    rng = make_rng(seed)
    idx = np.concatenate([np.arange(len(ds))] + [rng.permutation(len(ds)) for _ in range(epochs - 1)])
    return ds.subset(idx)


def stratified_folds(y, k: int, seed: int):
    """Random stratified fold assignment; returns a list of ``k`` index arrays."""
    y = np.asarray(y)
    rng = make_rng(seed)
    folds = [[] for _ in range(k)]
    for label in (1, -1):
        idx = rng.permutation(np.flatnonzero(y == label))
        for f in range(k):
            folds[f].extend(idx[f::k].tolist())
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


@dataclass(frozen=True)
class TwoGaussianOracle:
    """Optimal NP test for two unit-covariance Gaussians split along the first axis."""

    separation: float

    def threshold(self, tau: float) -> float:
        """Accept ``+1`` when ``x_1`` exceeds this value."""
        return -self.separation / 2.0 + _STD_NORMAL.inv_cdf(1.0 - tau)

    def tpr(self, tau: float) -> float:
        return _STD_NORMAL.cdf(_STD_NORMAL.inv_cdf(tau) + self.separation)


def gen_two_gaussians(n: int, d: int, separation: float, seed: int):
    """Balanced classes, identity covariance, means ``+-(separation/2) e_1``, randomly interleaved.

    Returns ``(dataset, oracle)``.
    """
    if n < 2 or d < 1:
        raise InvalidArgumentError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    if not separation >= 0:
        raise InvalidArgumentError(f"separation must be non-negative, got {separation}")
    rng = make_rng(seed)
    y = np.where(rng.permutation(n) < n // 2, 1, -1)
    X = rng.standard_normal((n, d))
    X[:, 0] += y * (separation / 2.0)
    return Dataset(X, y, f"two_gaussians(n={n}, d={d}, sep={separation}, seed={seed})"), TwoGaussianOracle(separation)


def gen_ring(n: int, inner_radius: float = 1.0, outer_radius: float = 2.0, noise: float = 0.05, seed: int = 0) -> Dataset:
    """2-d disk (positives) inside an annulus (negatives), balanced, with Gaussian radial noise.

    Radii are area-uniform: positives on ``[0, inner]``, negatives on ``[inner, outer]``.
    """
    if n < 2:
        raise InvalidArgumentError(f"need n >= 2, got {n}")
    if not 0 < inner_radius < outer_radius:
        raise InvalidArgumentError("need 0 < inner_radius < outer_radius")
    if noise < 0:
        raise InvalidArgumentError("noise must be non-negative")
    rng = make_rng(seed)
    y = np.where(rng.permutation(n) < n // 2, 1, -1)
    u = rng.uniform(size=n)
    r2 = np.where(y == 1, u * inner_radius**2, inner_radius**2 + u * (outer_radius**2 - inner_radius**2))
    r = np.sqrt(r2) + noise * rng.standard_normal(n)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    X = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return Dataset(X, y, f"ring(n={n}, inner={inner_radius}, outer={outer_radius}, noise={noise}, seed={seed})")
