"""Run configuration files and model snapshots.

Config files are line-oriented ``key = value`` text.  Optional ``[section]``
headers group keys but do not namespace them: every key is globally unique
and, when it appears under a header, the header must be the key's own
section.  ``#`` starts a comment.  A complete annotated example is in
the README.

Snapshots are JSON documents tagged with a format name, a version and the
model kind.  Every float is stored as a C99 hex literal (``float.hex``) so a
save/load round trip is bit-exact.
"""

from __future__ import annotations

import configparser
import json
import os
import tempfile
import warnings
from dataclasses import dataclass

import numpy as np

from .core import FprWindow, Hyperparams
from .data import Normalizer
from .errors import ConfigError, InvalidArgumentError, SnapshotError
from .npnn import ModelState
from .olnp import LinearState
from .rff import FrequencyBank

# Parsers -------------------------------------------------------------------


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _opt_int(text):
    return None if text.strip().lower() in ("", "auto", "none") else int(text)


def _opt_int_fmt(v):
    return "auto" if v is None else str(v)


def _choice(*options):
    def parse(text):
        value = text.strip()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return value
    return parse


def _between(lo, hi, lo_open=True, hi_open=True):
    def check(v):
        return (lo < v if lo_open else lo <= v) and (v < hi if hi_open else v <= hi)
    return check


_pos = lambda v: v > 0  # noqa: E731
_nonneg = lambda v: v >= 0  # noqa: E731


@dataclass(frozen=True)
class _Key:
    section: str
    parse: object
    default: object
    check: object = None
    fmt: object = None
    required: bool = False
    help: str = ""


_FLOAT_FMT = repr
_LIST_FMT = lambda vs: ",".join(repr(v) for v in vs)  # noqa: E731
_BOOL_FMT = lambda v: "true" if v else "false"  # noqa: E731

SCHEMA = {
    # run
    "model": _Key("run", _choice("npnn", "olnp"), "npnn", help="model kind"),
    "seed": _Key("run", int, None, fmt=str, help="master seed; child seeds derive from it"),
    "jobs": _Key("run", int, 1, _pos, help="worker processes for independent runs"),
    "out_dir": _Key("run", str, "results", help="output directory"),
    # data
    "dataset": _Key("data", str, None, required=True,
                    help="file path, or synthetic:two_gaussians / synthetic:ring"),
    "format": _Key("data", _choice("auto", "delimited", "sparse"), "auto"),
    "delimiter": _Key("data", str, ",", help="field delimiter for delimited files; 'whitespace' for runs of blanks"),
    "label_column": _Key("data", int, -1),
    "header": _Key("data", _bool, False, fmt=_BOOL_FMT),
    "normalization": _Key("data", _choice("zscore", "unitnorm", "none"), "zscore"),
    "minority_positive": _Key("data", _bool, True, fmt=_BOOL_FMT, help="relabel so the smaller class is +1"),
    "gen_n": _Key("data", int, 10000, lambda v: v >= 2),
    "gen_d": _Key("data", int, 2, _pos),
    "gen_separation": _Key("data", float, 2.0, _nonneg, _FLOAT_FMT),
    "gen_inner": _Key("data", float, 1.0, _pos, _FLOAT_FMT),
    "gen_outer": _Key("data", float, 2.0, _pos, _FLOAT_FMT),
    "gen_noise": _Key("data", float, 0.05, _nonneg, _FLOAT_FMT),
    # model
    "tau": _Key("model", float, None, _between(0.0, 1.0), _FLOAT_FMT, required=True, help="target false positive rate"),
    "g": _Key("model", float, 1.0, _pos, _FLOAT_FMT, help="rbf bandwidth parameter"),
    "D": _Key("model", int, 50, _pos, help="number of cos/sin feature pairs"),
    "lam": _Key("model", float, 0.0, _nonneg, _FLOAT_FMT, help="regularization weight"),
    "eta1": _Key("model", float, 0.01, _pos, _FLOAT_FMT, help="initial learning rate"),
    "beta1": _Key("model", float, 0.0005, _pos, _FLOAT_FMT, help="initial multiplier gain"),
    "gamma1": _Key("model", float, 1.0, _pos, _FLOAT_FMT, help="initial multiplier"),
    "window": _Key("model", int, 200, _pos, help="negatives kept in the FPR window"),
    "min_window": _Key("model", _opt_int, None, lambda v: v is None or v >= 1, _opt_int_fmt),
    "train_hidden": _Key("model", _bool, True, fmt=_BOOL_FMT),
    "gamma_update": _Key("model", _choice("window", "stochastic"), "window"),
    "gamma_min": _Key("model", float, 1e-6, _pos, _FLOAT_FMT),
    "factor_floor": _Key("model", float, 0.1, _between(0.0, 1.0, hi_open=False), _FLOAT_FMT),
    "init_scale": _Key("model", float, 0.01, _nonneg, _FLOAT_FMT),
    # protocol
    "permutations": _Key("protocol", int, 15, _pos),
    "split": _Key("protocol", float, 0.75, _between(0.0, 1.0), _FLOAT_FMT),
    "epochs": _Key("protocol", int, 1, _pos),
    "tfpr_grid": _Key("protocol", _floats, (0.05, 0.1, 0.2, 0.3, 0.4),
                      lambda vs: bool(vs) and all(0 < v < 1 for v in vs) and all(b > a for a, b in zip(vs, vs[1:])),
                      _LIST_FMT),
    "cv": _Key("protocol", _bool, False, fmt=_BOOL_FMT, help="cross-validate (g, D) on every training split"),
    "cv_folds": _Key("protocol", int, 3, lambda v: v >= 2),
    "cv_g_grid": _Key("protocol", _floats, (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0),
                      lambda vs: bool(vs) and all(v > 0 for v in vs), _LIST_FMT),
    "cv_d_grid": _Key("protocol", _ints, (2, 5, 10, 20, 40, 80, 100),
                      lambda vs: bool(vs) and all(v > 0 for v in vs), lambda vs: ",".join(map(str, vs)),
                      help="D candidates as multiples of the input dimension"),
    "trace_every": _Key("protocol", int, 100, _pos, help="thinning of streamed trace rows"),
}
SECTIONS = ("run", "data", "model", "protocol")
_TOP = "__top__"
_HP_KEYS = ("tau", "g", "D", "lam", "eta1", "beta1", "gamma1", "window", "min_window",
            "train_hidden", "gamma_update", "gamma_min", "factor_floor", "init_scale")


class RunConfig:
    """A fully resolved configuration: every schema key has a value."""

    def __init__(self, values: dict, explicit=frozenset()):
        self.values = dict(values)
        self.explicit = frozenset(explicit)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def __getitem__(self, key):
        return self.values[key]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.values == other.values

    __hash__ = None

    def hyperparams(self, **changes) -> Hyperparams:
        kw = {k: self.values[k] for k in _HP_KEYS}
        kw.update(changes)
        return Hyperparams(**kw)

    def replace(self, **changes) -> "RunConfig":
        raw = {k: SCHEMA[k].fmt(v) if SCHEMA[k].fmt else str(v)
               for k, v in {**self.values, **changes}.items() if v is not None}
        return resolve(raw, self.explicit | set(changes), require=False)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.values.items()}


def _read_raw(text: str) -> dict:
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, strict=True, default_section="__defaults__",
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{_TOP}]\n" + text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(exc.option, "given more than once") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(exc.section, "section given more than once") from None
    except configparser.Error as exc:
        raise ConfigError("<syntax>", str(exc).splitlines()[0]) from None
    raw = {}
    for section in parser.sections():
        if section != _TOP and section not in SECTIONS:
            raise ConfigError(f"[{section}]", "unknown section")
        for key, value in parser.items(section):
            if key not in SCHEMA:
                raise ConfigError(key, "unknown key")
            if section != _TOP and SCHEMA[key].section != section:
                raise ConfigError(key, f"belongs in [{SCHEMA[key].section}], not [{section}]")
            if key in raw:
                raise ConfigError(key, "given more than once")
            raw[key] = value
    return raw


def resolve(raw: dict, explicit=None, require: bool = True) -> RunConfig:
    """Validate raw string values and fill defaults.

    With ``require=False`` missing required keys stay ``None``.
    """
    values = {}
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
    for key, spec in SCHEMA.items():
        if key in raw:
            try:
                value = spec.parse(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, f"cannot parse {raw[key]!r} ({exc})") from None
            if spec.check is not None and not spec.check(value):
                raise ConfigError(key, f"value {raw[key]!r} out of range")
        elif spec.required and require:
            raise ConfigError(key, "required key missing")
        else:
            value = spec.default
        values[key] = value
    if values["gen_inner"] >= values["gen_outer"]:
        raise ConfigError("gen_outer", "must exceed gen_inner")
    if values["min_window"] is not None and values["min_window"] > values["window"]:
        raise ConfigError("min_window", "must not exceed window")
    return RunConfig(values, set(raw) if explicit is None else explicit)


def parse_config(text: str, overrides: dict | None = None, require: bool = True) -> RunConfig:
    """Parse config text; ``overrides`` (raw strings, e.g. from flags) win over the file."""
    raw = _read_raw(text)
    if overrides:
        for key in overrides:
            if key not in SCHEMA:
                raise ConfigError(key, "unknown key")
        raw.update({k: str(v) for k, v in overrides.items() if v is not None})
    return resolve(raw, require=require)


def load_config(path, overrides: dict | None = None, require: bool = True) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path} ({exc.strerror})") from None
    return parse_config(text, overrides, require)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text: every key, grouped by section, schema order.  Unset optional keys are omitted."""
    lines = []
    for section in SECTIONS:
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        for key, spec in SCHEMA.items():
            if spec.section != section:
                continue
            value = cfg.values[key]
            if value is None and spec.default is None:
                continue
            lines.append(f"{key} = {spec.fmt(value) if spec.fmt else value}")
    return "\n".join(lines) + "\n"


# Snapshots -----------------------------------------------------------------

SNAPSHOT_FORMAT = "onlinenp-snapshot"
SNAPSHOT_VERSION = 1


def _hex(v) -> str:
    return float(v).hex()


def _unhex(s) -> float:
    if not isinstance(s, str):
        raise SnapshotError(f"expected a hex float string, got {s!r}")
    return float.fromhex(s)


def _hp_to_json(p: Hyperparams) -> dict:
    out = {}
    for k, v in p.to_dict().items():
        out[k] = _hex(v) if isinstance(v, float) else v
    return out


def _hp_from_json(d: dict) -> Hyperparams:
    kw = {}
    for k, v in d.items():
        kw[k] = _unhex(v) if isinstance(v, str) and k != "gamma_update" else v
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return Hyperparams(**kw)


def snapshot_dict(state, normalizer: Normalizer | None = None) -> dict:
    doc = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "kind": state.kind,
        "hyperparams": _hp_to_json(state.params),
        "seed": state.seed,
        "t": state.t,
        "n_pos": state.n_pos,
        "n_neg": state.n_neg,
        "gamma": _hex(state.gamma),
        "eta": _hex(state.eta),
        "beta": _hex(state.beta),
        "b": _hex(state.b),
        "w": [_hex(v) for v in state.w],
        "window": {
            "capacity": state.window.capacity,
            "bits": "".join(str(int(b)) for b in state.window.ordered()),
        },
    }
    if state.kind == "npnn":
        doc["g"] = _hex(state.bank.g)
        doc["freqs"] = [[_hex(v) for v in row] for row in state.bank.freqs]
    if normalizer is not None:
        doc["normalizer"] = normalizer.to_dict()
    return doc


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_snapshot(state, path, normalizer: Normalizer | None = None) -> None:
    atomic_write(path, json.dumps(snapshot_dict(state, normalizer), indent=1) + "\n")


def read_snapshot(path) -> dict:
    """Parse and check the envelope of a snapshot file; returns the raw document."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"{path}: unreadable snapshot ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"{path}: not an {SNAPSHOT_FORMAT} file")
    if doc.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {doc.get('version')!r}")
    return doc


def state_from_dict(doc: dict, kind: str | None = None):
    if kind is not None and doc.get("kind") != kind:
        raise SnapshotError(f"snapshot holds a {doc.get('kind')!r} model, expected {kind!r}")
    try:
        params = _hp_from_json(doc["hyperparams"])
        win_doc = doc["window"]
        window = FprWindow.from_ordered(win_doc["capacity"], [int(c) for c in win_doc["bits"]])
        common = dict(
            params=params, w=np.array([_unhex(v) for v in doc["w"]]), b=_unhex(doc["b"]),
            gamma=_unhex(doc["gamma"]), t=int(doc["t"]), n_pos=int(doc["n_pos"]), n_neg=int(doc["n_neg"]),
            eta=_unhex(doc["eta"]), beta=_unhex(doc["beta"]), window=window, seed=doc["seed"],
        )
        if doc["kind"] == "npnn":
            bank = FrequencyBank(np.array([[_unhex(v) for v in row] for row in doc["freqs"]]), _unhex(doc["g"]))
            state = ModelState(bank=bank, **common)
            if state.w.shape[0] != 2 * bank.num_pairs:
                raise SnapshotError("weight vector does not match the frequency bank")
        elif doc["kind"] == "olnp":
            state = LinearState(**common)
        else:
            raise SnapshotError(f"unknown model kind {doc['kind']!r}")
    except SnapshotError:
        raise
    except (KeyError, TypeError, ValueError, InvalidArgumentError) as exc:
        raise SnapshotError(f"corrupt snapshot ({type(exc).__name__}: {exc})") from None
    if state.n_pos + state.n_neg != state.t:
        raise SnapshotError("class counters do not add up to t")
    return state


def load_snapshot(path, kind: str | None = None):
    """Load a model state; with ``kind`` set, a snapshot of another model kind is an error."""
    return state_from_dict(read_snapshot(path), kind)


def load_snapshot_normalizer(path) -> Normalizer | None:
    doc = read_snapshot(path)
    return Normalizer.from_dict(doc["normalizer"]) if "normalizer" in doc else None
