"""Command-line front end.

Every config key is also a flag (``--tau 0.05``, ``--out_dir runs/a``);
flags override the config file.  Exit codes: 0 ok, 2 config error, 3 data
error, 4 protocol error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io as _stdio
import json
import logging
import os
import sys
import warnings

import numpy as np

from . import __version__, npnn, olnp
from .data import (Normalizer, gen_ring, gen_two_gaussians, load_delimited, load_sparse,
                   minority_positive, write_delimited, write_sparse)
from .errors import ConfigError, DataError, OnlineNPError, ProtocolError
from .evaluate import (RECORD_FIELDS, CvLearner, ModelLearner, ProtocolConfig, cross_validate,
                       np_score, protocol_run)
from .io import SCHEMA, atomic_write, load_config, parse_config, read_snapshot, save_snapshot, serialize_config
from .io import state_from_dict
from .seeds import derive_seed, make_rng

MODELS = {"npnn": npnn, "olnp": olnp}
_SPARSE_EXT = (".svm", ".libsvm", ".svmlight", ".sparse")
_DELIMS = {"tab": "\t", "\\t": "\t", "whitespace": " ", "space": " "}


def _resolve(args, require=True):
    overrides = {k: getattr(args, k) for k in SCHEMA if getattr(args, k, None) is not None}
    if args.config:
        cfg = load_config(args.config, overrides, require)
    else:
        cfg = parse_config("", overrides, require)
    if cfg.seed is None:
        warnings.warn("no --seed given; using seed 0 (pass --seed for reproducible publication runs)",
                      stacklevel=2)
        cfg = cfg.replace(seed=0)
    return cfg


def load_dataset(cfg):
    """Dataset named by the config: a file, or ``synthetic:two_gaussians`` / ``synthetic:ring``."""
    source = cfg.dataset
    if source.startswith("synthetic:"):
        name = source.split(":", 1)[1]
        seed = derive_seed(cfg.seed, "data")
        if name == "two_gaussians":
            ds, _ = gen_two_gaussians(cfg.gen_n, cfg.gen_d, cfg.gen_separation, seed)
        elif name == "ring":
            ds = gen_ring(cfg.gen_n, cfg.gen_inner, cfg.gen_outer, cfg.gen_noise, seed)
        else:
            raise ConfigError("dataset", f"unknown generator {name!r}")
    else:
        if not os.path.exists(source):
            raise DataError(f"{source}: no such file")
        fmt = cfg.format
        if fmt == "auto":
            fmt = "sparse" if source.lower().endswith(_SPARSE_EXT) or _looks_sparse(source) else "delimited"
        if fmt == "sparse":
            ds = load_sparse(source)
        else:
            delim = _DELIMS.get(cfg.delimiter, cfg.delimiter)
            ds = load_delimited(source, cfg.label_column, delim, cfg.header)
    return minority_positive(ds) if cfg.minority_positive else ds


def _looks_sparse(path) -> bool:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            text = line.strip()
            if text and not text.startswith("#"):
                return ":" in text
    return False


def _learner(cfg):
    base = ModelLearner(cfg.model, cfg.hyperparams(), cfg.epochs)
    if cfg.cv and cfg.model == "npnn":
        return CvLearner(base, cfg.cv_g_grid, cfg.cv_d_grid, cfg.cv_folds)
    return base


def _protocol(cfg, grid):
    return ProtocolConfig(permutations=cfg.permutations, split=cfg.split, tfpr_grid=tuple(grid),
                          normalization=cfg.normalization, seed=cfg.seed, jobs=cfg.jobs)


def _stamp() -> str:
    return f"# onlinenp {__version__} generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}"


def _write_csv(path, header, rows):
    buf = _stdio.StringIO()
    buf.write(_stamp() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    atomic_write(path, buf.getvalue())


def _write_json(path, doc):
    atomic_write(path, json.dumps(doc, indent=1, sort_keys=False) + "\n")


def _prepare_out(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    atomic_write(os.path.join(cfg.out_dir, "config.resolved.ini"), serialize_config(cfg))


def _write_summary(cfg, summary, name):
    records = summary.records()
    _write_csv(os.path.join(cfg.out_dir, f"{name}.csv"), RECORD_FIELDS,
               [[r[k] for k in RECORD_FIELDS] for r in records])
    _write_json(os.path.join(cfg.out_dir, f"{name}.json"),
                {"seed": cfg.seed, "config": cfg.to_dict(), **summary.to_dict()})
    for r in records:
        print(f"tau={r['tau']:<6g} TPR {r['tpr_mean']:.4f}±{r['tpr_std']:.4f}  FPR {r['fpr_mean']:.4f}±{r['fpr_std']:.4f}"
              f"  NP-score {r['npscore_mean']:.4f}±{r['npscore_std']:.4f}  AUC {r['auc_mean']:.4f}±{r['auc_std']:.4f}")


def cmd_train(cfg) -> int:
    ds = load_dataset(cfg)
    _prepare_out(cfg)
    summary = protocol_run(ds, _learner(cfg), _protocol(cfg, [cfg.tau]))
    _write_summary(cfg, summary, "summary")
    norm = Normalizer(cfg.normalization).fit(ds.X)
    full = norm.apply(ds)
    params = cfg.hyperparams()
    final_seed = derive_seed(cfg.seed, "final")
    if cfg.cv and cfg.model == "npnn":
        best = cross_validate(full, cfg.tau, ModelLearner(cfg.model, params, cfg.epochs),
                              cfg.cv_g_grid, cfg.cv_d_grid, cfg.cv_folds, derive_seed(final_seed, "cv"))
        params = params.replace(g=best.best[0], D=best.best[1])
    state = ModelLearner(cfg.model, params, cfg.epochs).fit(cfg.tau, full, final_seed)
    save_snapshot(state, os.path.join(cfg.out_dir, "model.json"), norm)
    print(f"snapshot written to {os.path.join(cfg.out_dir, 'model.json')}")
    return 0


def cmd_sweep(cfg) -> int:
    ds = load_dataset(cfg)
    _prepare_out(cfg)
    summary = protocol_run(ds, _learner(cfg), _protocol(cfg, cfg.tfpr_grid))
    _write_summary(cfg, summary, "summary")
    records = summary.records()
    roc = {
        "seed": cfg.seed,
        "dataset": summary.dataset,
        "tfpr": [r["tau"] for r in records],
        "tpr_mean": [r["tpr_mean"] for r in records],
        "fpr_mean": [r["fpr_mean"] for r in records],
        "auc_mean": summary.auc_mean,
        "auc_std": records[0]["auc_std"],
        "auc_achieved_mean": summary.auc_achieved_mean,
    }
    _write_json(os.path.join(cfg.out_dir, "roc.json"), roc)
    print(f"AUC (TPR vs target FPR) {roc['auc_mean']:.4f}±{roc['auc_std']:.4f}; "
          f"AUC (TPR vs achieved FPR) {roc['auc_achieved_mean']:.4f}")
    return 0


def run_stream_experiment(cfg, ds):
    """Single-pass prequential runs over ``cfg.permutations`` seeded shuffles of ``ds``."""
    module = MODELS[cfg.model]
    params = cfg.hyperparams()
    X = Normalizer(cfg.normalization).fit_transform(ds.X)
    traces, finals = [], []
    for p in range(cfg.permutations):
        order = make_rng(derive_seed(cfg.seed, "stream-perm", p)).permutation(len(ds))
        state, trace = module.run_stream(params, (X[order], ds.y[order]), derive_seed(cfg.seed, "stream-model", p))
        fpr, tpr = trace.cumulative_fpr()[-1], trace.cumulative_tpr()[-1]
        finals.append({"permutation": p, "fpr": float(fpr), "tpr": float(tpr),
                       "npscore": np_score(float(fpr), 1.0 - float(tpr), cfg.tau), "gamma": state.gamma})
        traces.append(trace)
    return traces, finals


def cmd_stream(cfg) -> int:
    ds = load_dataset(cfg)
    if ds.n_pos == 0 or ds.n_neg == 0:
        raise ProtocolError(f"stream needs both classes ({ds.n_pos} positives, {ds.n_neg} negatives)")
    _prepare_out(cfg)
    traces, finals = run_stream_experiment(cfg, ds)
    with warnings.catch_warnings():
        # early steps may precede the first sample of a class in every run
        warnings.simplefilter("ignore", RuntimeWarning)
        fpr = np.nanmean([t.cumulative_fpr() for t in traces], axis=0)
        tpr = np.nanmean([t.cumulative_tpr() for t in traces], axis=0)
    idx = list(range(cfg.trace_every - 1, len(ds), cfg.trace_every))
    if idx[-1:] != [len(ds) - 1]:
        idx.append(len(ds) - 1)
    _write_csv(os.path.join(cfg.out_dir, "trace.csv"), ["step", "cum_fpr", "cum_tpr"],
               [[i + 1, float(fpr[i]), float(tpr[i])] for i in idx])
    keys = ("fpr", "tpr", "npscore")
    doc = {"seed": cfg.seed, "config": cfg.to_dict(), "dataset": ds.provenance, "runs": finals}
    for k in keys:
        vals = np.array([f[k] for f in finals])
        doc[f"{k}_mean"], doc[f"{k}_std"] = float(vals.mean()), float(vals.std())
    _write_json(os.path.join(cfg.out_dir, "stream.json"), doc)
    print(f"final accumulated FPR {doc['fpr_mean']:.5f}±{doc['fpr_std']:.5f} (target {cfg.tau}), "
          f"TPR {doc['tpr_mean']:.4f}±{doc['tpr_std']:.4f}, NP-score {doc['npscore_mean']:.4f}")
    return 0


def cmd_cv(cfg) -> int:
    ds = load_dataset(cfg)
    _prepare_out(cfg)
    learner = ModelLearner(cfg.model, cfg.hyperparams(), cfg.epochs)
    result = cross_validate(ds, cfg.tau, learner, cfg.cv_g_grid, cfg.cv_d_grid, cfg.cv_folds,
                            derive_seed(cfg.seed, "cv"), cfg.normalization)
    _write_csv(os.path.join(cfg.out_dir, "cv.csv"), ["g", "D", "npscore_mean", "npscore_std"],
               [[r["g"], r["D"], r["npscore_mean"], r["npscore_std"]] for r in result.table])
    _write_json(os.path.join(cfg.out_dir, "cv.json"), {"seed": cfg.seed, "config": cfg.to_dict(), **result.to_dict()})
    print(f"best g={result.best[0]:g} D={result.best[1]}")
    return 0


def cmd_gen(cfg, output, fmt) -> int:
    if not cfg.dataset or not cfg.dataset.startswith("synthetic:"):
        raise ConfigError("dataset", "gen needs dataset = synthetic:two_gaussians or synthetic:ring")
    ds = load_dataset(cfg.replace(minority_positive=False))
    if fmt == "sparse":
        write_sparse(ds, output)
    else:
        write_delimited(ds, output, _DELIMS.get(cfg.delimiter, cfg.delimiter))
    print(f"wrote {len(ds)} samples ({ds.n_pos} positive) to {output}")
    return 0


def cmd_inspect(path) -> int:
    doc = read_snapshot(path)
    state = state_from_dict(doc)
    info = {
        "kind": doc["kind"], "version": doc["version"], "seed": state.seed,
        "hyperparams": state.params.to_dict(), "t": state.t, "n_pos": state.n_pos, "n_neg": state.n_neg,
        "gamma": state.gamma, "eta": state.eta, "beta": state.beta, "b": state.b,
        "dim_in": state.dim, "num_weights": int(state.w.shape[0]), "w_norm": float(np.linalg.norm(state.w)),
        "window_fpr": state.window.estimate(), "window_count": len(state.window),
        "normalizer": doc.get("normalizer", {}).get("kind"),
    }
    if doc["kind"] == "npnn":
        info["num_pairs"] = state.bank.num_pairs
        info["g"] = state.bank.g
    print(json.dumps(info, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onlinenp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", "-c", help="config file (key = value lines)")
        for key, spec in SCHEMA.items():
            flags = [f"--{key}"]
            if "_" in key:
                flags.append(f"--{key.replace('_', '-')}")
            p.add_argument(*flags, dest=key, metavar=key.upper(), default=None, help=spec.help or None)
        return p

    with_config(sub.add_parser("train", help="permutation protocol at one target rate, then save a model snapshot"))
    with_config(sub.add_parser("stream", help="single-pass prequential run with accumulated FPR/TPR traces"))
    with_config(sub.add_parser("sweep", help="permutation protocol over the target-rate grid with ROC/AUC"))
    with_config(sub.add_parser("cv", help="cross-validate (g, D) by NP-score"))
    gen = with_config(sub.add_parser("gen", help="write a synthetic dataset to a file"))
    gen.add_argument("--output", "-o", required=True)
    gen.add_argument("--out-format", choices=("delimited", "sparse"), default="delimited")
    insp = sub.add_parser("inspect-snapshot", help="print a snapshot summary")
    insp.add_argument("path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    logging.captureWarnings(True)
    try:
        if args.command == "inspect-snapshot":
            return cmd_inspect(args.path)
        cfg = _resolve(args, require=args.command != "gen")
        if args.command == "gen":
            return cmd_gen(cfg, args.output, args.out_format)
        return {"train": cmd_train, "stream": cmd_stream, "sweep": cmd_sweep, "cv": cmd_cv}[args.command](cfg)
    except OnlineNPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
