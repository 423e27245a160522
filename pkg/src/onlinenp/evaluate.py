"""Metrics and the permutation/split experiment protocol.

Two AUC flavours are reported for a sweep over target rates:

* ``auc`` integrates achieved TPR against the *target* FPR grid, anchored
  at (0, 0) and (1, 1).  This is the headline number.
* ``auc_achieved`` integrates achieved TPR against achieved FPR, points
  sorted by FPR, with the same anchors.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import npnn, olnp
from .core import Hyperparams, RunTrace
from .data import Dataset, Normalizer, concat_epochs, permute_and_split, stratified_folds
from .errors import InvalidArgumentError, ProtocolError
from .seeds import derive_seed, make_rng

__all__ = [
    "RunTrace", "Rates", "np_score", "rates_from_decisions", "auc_tfpr", "auc_achieved",
    "RocPoint", "RocCurve", "ModelLearner", "RandomGuessLearner", "roc_over_grid",
    "ProtocolConfig", "Summary", "protocol_run", "cross_validate", "CvLearner",
]

MODELS = {"npnn": npnn, "olnp": olnp}
RECORD_FIELDS = ("dataset", "tau", "tpr_mean", "tpr_std", "fpr_mean", "fpr_std",
                 "npscore_mean", "npscore_std", "auc_mean", "auc_std")


def np_score(fpr: float, miss: float, tau: float, kappa: float | None = None) -> float:
    """``kappa * max(fpr - tau, 0) + miss`` with ``kappa = 1/tau`` by default.  Lower is better."""
    for name, v in (("fpr", fpr), ("miss", miss)):
        if not 0.0 <= v <= 1.0:
            raise InvalidArgumentError(f"{name} must lie in [0, 1], got {v}")
    if not 0.0 < tau < 1.0:
        raise InvalidArgumentError(f"tau must lie in (0, 1), got {tau}")
    if kappa is None:
        kappa = 1.0 / tau
    if kappa < 0:
        raise InvalidArgumentError(f"kappa must be non-negative, got {kappa}")
    return kappa * max(fpr - tau, 0.0) + miss


@dataclass(frozen=True)
class Rates:
    """Empirical rates; ``None`` when the corresponding class is absent."""

    fpr: float | None
    tpr: float | None

    @property
    def miss(self) -> float | None:
        return None if self.tpr is None else 1.0 - self.tpr


def rates_from_decisions(labels, decisions) -> Rates:
    labels = np.asarray(labels)
    decisions = np.asarray(decisions)
    neg = labels == -1
    pos = labels == 1
    fpr = float(np.mean(decisions[neg] == 1)) if neg.any() else None
    tpr = float(np.mean(decisions[pos] == 1)) if pos.any() else None
    return Rates(fpr, tpr)


def _trapezoid(xs, ys) -> float:
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    return float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2.0))


def auc_tfpr(tfprs, tprs) -> float:
    """Area under achieved TPR versus target FPR, anchored at (0,0) and (1,1)."""
    order = np.argsort(tfprs, kind="stable")
    xs = np.concatenate([[0.0], np.asarray(tfprs, dtype=float)[order], [1.0]])
    ys = np.concatenate([[0.0], np.asarray(tprs, dtype=float)[order], [1.0]])
    return _trapezoid(xs, ys)


def auc_achieved(fprs, tprs) -> float:
    """Area under achieved TPR versus achieved FPR, anchored at (0,0) and (1,1)."""
    fprs, tprs = np.asarray(fprs, dtype=float), np.asarray(tprs, dtype=float)
    order = np.lexsort((tprs, fprs))
    xs = np.concatenate([[0.0], fprs[order], [1.0]])
    ys = np.concatenate([[0.0], tprs[order], [1.0]])
    return _trapezoid(xs, ys)


@dataclass(frozen=True)
class RocPoint:
    tfpr: float
    fpr: float
    tpr: float

    @property
    def npscore(self) -> float:
        return np_score(self.fpr, 1.0 - self.tpr, self.tfpr)


@dataclass(frozen=True)
class RocCurve:
    points: tuple

    @property
    def auc(self) -> float:
        return auc_tfpr([p.tfpr for p in self.points], [p.tpr for p in self.points])

    @property
    def auc_achieved(self) -> float:
        return auc_achieved([p.fpr for p in self.points], [p.tpr for p in self.points])

    def curve(self):
        """``(tfpr, tpr)`` pairs including the two anchors."""
        return [(0.0, 0.0)] + [(p.tfpr, p.tpr) for p in self.points] + [(1.0, 1.0)]


@dataclass(frozen=True)
class ModelLearner:
    """Fit NP-NN or OLNP on a training sequence (optionally repeated for several epochs)."""

    kind: str
    params: Hyperparams
    epochs: int = 1

    def __post_init__(self):
        if self.kind not in MODELS:
            raise InvalidArgumentError(f"unknown model kind {self.kind!r}")

    def fit(self, tau: float, train: Dataset, seed: int):
        module = MODELS[self.kind]
        seq = concat_epochs(train, self.epochs, derive_seed(seed, "epochs"))
        state = module.init_state(self.params.replace(tau=tau), train.dim, seed)
        module.partial_fit(state, seq)
        return state

    def __call__(self, tau: float, train: Dataset, seed: int):
        state = self.fit(tau, train, seed)
        module = MODELS[self.kind]
        return lambda X: module.predict_many(state, X)


@dataclass(frozen=True)
class RandomGuessLearner:
    """Calls ``+1`` with probability ``tau`` regardless of the input."""

    def __call__(self, tau: float, train: Dataset, seed: int):
        rng = make_rng(seed)
        return lambda X: np.where(rng.uniform(size=len(X)) < tau, 1, -1)


def _check_grid(grid):
    grid = [float(t) for t in grid]
    if not grid:
        raise InvalidArgumentError("tfpr grid is empty")
    if any(not 0.0 < t < 1.0 for t in grid):
        raise InvalidArgumentError("tfpr grid values must lie in (0, 1)")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidArgumentError("tfpr grid must be strictly increasing")
    return grid


def _check_split(ds: Dataset, name: str):
    if ds.n_pos == 0 or ds.n_neg == 0:
        raise ProtocolError(f"{name} has an empty class ({ds.n_pos} positives, {ds.n_neg} negatives)")


def roc_over_grid(learner, train: Dataset, test: Dataset, tfpr_grid, seed: int, fold: str = "fold") -> RocCurve:
    """Train one model per target rate and evaluate each on ``test``.

    Model seeds depend on the target rate's value, not its grid position.
    """
    grid = _check_grid(tfpr_grid)
    _check_split(train, f"{fold} training split")
    _check_split(test, f"{fold} test split")
    points = []
    for tau in grid:
        predict = learner(tau, train, derive_seed(seed, "model", tau))
        rates = rates_from_decisions(test.y, predict(test.X))
        points.append(RocPoint(tau, rates.fpr, rates.tpr))
    return RocCurve(tuple(points))


@dataclass(frozen=True)
class ProtocolConfig:
    permutations: int = 15
    split: float = 0.75
    tfpr_grid: tuple = (0.05, 0.1, 0.2, 0.3, 0.4)
    normalization: str = "zscore"
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.permutations < 1:
            raise InvalidArgumentError("permutations must be >= 1")
        object.__setattr__(self, "tfpr_grid", tuple(_check_grid(self.tfpr_grid)))


@dataclass
class Summary:
    dataset: str
    config: ProtocolConfig
    curves: list = field(default_factory=list)

    def records(self):
        """One record per target rate, fields as in ``RECORD_FIELDS`` (population std)."""
        aucs = np.array([c.auc for c in self.curves])
        out = []
        for i, tau in enumerate(self.config.tfpr_grid):
            pts = [c.points[i] for c in self.curves]
            tpr = np.array([p.tpr for p in pts])
            fpr = np.array([p.fpr for p in pts])
            nps = np.array([p.npscore for p in pts])
            out.append({
                "dataset": self.dataset, "tau": tau,
                "tpr_mean": float(tpr.mean()), "tpr_std": float(tpr.std()),
                "fpr_mean": float(fpr.mean()), "fpr_std": float(fpr.std()),
                "npscore_mean": float(nps.mean()), "npscore_std": float(nps.std()),
                "auc_mean": float(aucs.mean()), "auc_std": float(aucs.std()),
            })
        return out

    @property
    def auc_mean(self) -> float:
        return float(np.mean([c.auc for c in self.curves]))

    @property
    def auc_achieved_mean(self) -> float:
        return float(np.mean([c.auc_achieved for c in self.curves]))

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "protocol": asdict(self.config),
            "records": self.records(),
            "auc_achieved_mean": self.auc_achieved_mean,
            "auc_achieved_std": float(np.std([c.auc_achieved for c in self.curves])),
            "runs": [
                {"permutation": i, "auc": c.auc, "auc_achieved": c.auc_achieved,
                 "points": [asdict(p) for p in c.points]}
                for i, c in enumerate(self.curves)
            ],
        }


def _one_permutation(args):
    dataset, learner, config, p = args
    train, test = permute_and_split(dataset, derive_seed(config.seed, "perm", p), config.split)
    norm = Normalizer(config.normalization).fit(train.X)
    return roc_over_grid(learner, norm.apply(train), norm.apply(test), config.tfpr_grid,
                         derive_seed(config.seed, "run", p), fold=f"permutation {p}")


def protocol_run(dataset: Dataset, learner, config: ProtocolConfig = ProtocolConfig()) -> Summary:
    """Permute, split, normalize on the training part, sweep the target rates; repeat.

    Results are independent of ``config.jobs``.
    """
    if len(dataset) == 0:
        raise ProtocolError("dataset is empty")
    _check_split(dataset, "dataset")
    jobs = [(dataset, learner, config, p) for p in range(config.permutations)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            curves = list(pool.map(_one_permutation, jobs))
    else:
        curves = [_one_permutation(j) for j in jobs]
    return Summary(dataset.provenance, config, curves)


@dataclass
class CvResult:
    tau: float
    table: list
    best: tuple

    def to_dict(self) -> dict:
        return {"tau": self.tau, "best": {"g": self.best[0], "D": self.best[1]}, "table": self.table}


def cross_validate(train: Dataset, tau: float, learner: ModelLearner, g_grid, d_multipliers,
                   folds: int = 3, seed: int = 0, normalization: str = "none") -> CvResult:
    """Grid search over ``(g, D = m * d)`` by mean validation NP-score on stratified folds.

    Ties go to the smaller ``D``, then the smaller ``g``.
    """
    if folds < 2:
        raise InvalidArgumentError("need at least 2 folds")
    _check_split(train, "cross-validation data")
    parts = stratified_folds(train.y, folds, derive_seed(seed, "folds"))
    table = []
    for g in g_grid:
        for mult in d_multipliers:
            D = int(mult) * train.dim
            params = learner.params.replace(g=float(g), D=D)
            cand = ModelLearner(learner.kind, params, learner.epochs)
            scores = []
            for k, val_idx in enumerate(parts):
                fit_idx = np.concatenate([parts[j] for j in range(folds) if j != k])
                fit, val = train.subset(fit_idx), train.subset(val_idx)
                _check_split(fit, f"cv fold {k} training part")
                _check_split(val, f"cv fold {k} validation part")
                norm = Normalizer(normalization).fit(fit.X)
                predict = cand(tau, norm.apply(fit), derive_seed(seed, "cv-model", float(g), D, k))
                rates = rates_from_decisions(val.y, predict(norm.transform(val.X)))
                scores.append(np_score(rates.fpr, rates.miss, tau))
            table.append({"g": float(g), "D": D, "npscore_mean": float(np.mean(scores)),
                          "npscore_std": float(np.std(scores))})
    best = min(table, key=lambda r: (r["npscore_mean"], r["D"], r["g"]))
    return CvResult(tau, table, (best["g"], best["D"]))


@dataclass(frozen=True)
class CvLearner:
    """Cross-validate ``(g, D)`` on each training split, then fit the winner."""

    base: ModelLearner
    g_grid: tuple
    d_multipliers: tuple
    folds: int = 3

    def __call__(self, tau: float, train: Dataset, seed: int):
        cv = cross_validate(train, tau, self.base, self.g_grid, self.d_multipliers,
                            self.folds, derive_seed(seed, "cv"))
        g, D = cv.best
        return ModelLearner(self.base.kind, self.base.params.replace(g=g, D=D), self.base.epochs)(tau, train, seed)

