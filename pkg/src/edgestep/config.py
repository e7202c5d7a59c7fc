"""Run configuration: an INI-style key-value file, validated before anything runs.

Example::

    [function]
    family = power
    gamma = 0.5

    [run]
    T = 100000
    seed = 7
    replicas = 500

    [experiment]
    kind = maxdeg
    N = 5, 50, 500
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .experiments import KINDS, ExperimentConfig, default_threads
from .functions import CONVENTIONS, NEXT, EdgeStepFunction
from .rates import RateFamily


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


FUNCTION_KEYS = {
    "constant": {"p"},
    "power": {"gamma"},
    "logpower": {"beta"},
    "tabulated": {"values", "values_file", "gamma"},
}
SECTIONS = {
    "function": {"family", "convention", "p", "gamma", "beta", "values", "values_file"},
    "run": {"T", "seed", "replicas", "snapshot_times", "threads", "out", "memory_limit_mb"},
    "experiment": {
        "kind",
        "N",
        "t_grid",
        "r",
        "a_family",
        "c_list",
        "percolation_seeds",
        "vertices",
        "increment_replicas",
        "tail_horizon",
    },
}


@dataclass
class RunConfig:
    function: EdgeStepFunction
    convention: str = NEXT
    T: int | None = None
    seed: int = 0
    replicas: int = 1
    snapshot_times: tuple[int, ...] = ()
    threads: int = field(default_factory=default_threads)
    out: str = "out"
    memory_limit: int | None = None
    experiment: dict = field(default_factory=dict)
    text: str = ""

    def experiment_config(self) -> ExperimentConfig:
        e = self.experiment
        if "kind" not in e:
            raise ConfigError("experiment.kind", f"missing; expected one of {KINDS}")
        kw = dict(e)
        t_grid = kw.pop("t_grid", None)
        if t_grid is None and self.snapshot_times:
            t_grid = self.snapshot_times
        try:
            return ExperimentConfig(
                function=self.function,
                replicas=self.replicas,
                seed=self.seed,
                T=self.T,
                t_grid=tuple(t_grid or ()),
                convention=self.convention,
                threads=self.threads,
                echo={"config_text": self.text},
                **kw,
            )
        except ValueError as exc:
            raise ConfigError("experiment", str(exc)) from None


def _int(key: str, text: str, minimum: int | None = None) -> int:
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None
    if not math.isfinite(x) or x != int(x):
        raise ConfigError(key, f"expected an integer, got {text!r}")
    if minimum is not None and x < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {text}")
    return int(x)


def _float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None


def _list(key: str, text: str, conv) -> tuple:
    items = [x for x in text.replace(",", " ").split() if x]
    return tuple(conv(key, x) for x in items)


def _function(sec: configparser.SectionProxy, base: Path) -> EdgeStepFunction:
    family = sec.get("family")
    if family is None:
        raise ConfigError("function.family", "missing")
    if family not in FUNCTION_KEYS:
        raise ConfigError("function.family", f"unknown family {family!r}; expected one of {sorted(FUNCTION_KEYS)}")
    allowed = FUNCTION_KEYS[family] | {"family", "convention"}
    for k in sec:
        if k not in allowed:
            raise ConfigError(f"function.{k}", f"not a parameter of family {family!r}")

    def need(k):
        if k not in sec:
            raise ConfigError(f"function.{k}", f"required for family {family!r}")
        return _float(f"function.{k}", sec[k])

    try:
        if family == "constant":
            return EdgeStepFunction.constant(need("p"))
        if family == "power":
            return EdgeStepFunction.power(need("gamma"))
        if family == "logpower":
            return EdgeStepFunction.log_power(need("beta"))
    except ValueError as exc:
        key = {"constant": "p", "power": "gamma", "logpower": "beta"}[family]
        raise ConfigError(f"function.{key}", str(exc)) from None
    if ("values" in sec) == ("values_file" in sec):
        raise ConfigError("function.values", "give exactly one of values / values_file")
    if "values" in sec:
        vals = _list("function.values", sec["values"], _float)
    else:
        path = Path(sec["values_file"])
        path = path if path.is_absolute() else base / path
        try:
            vals = tuple(np.loadtxt(path, dtype=float, ndmin=1).tolist())
        except (OSError, ValueError) as exc:
            raise ConfigError("function.values_file", str(exc)) from None
    gamma = _float("function.gamma", sec.get("gamma", "0"))
    try:
        return EdgeStepFunction.tabulated(vals, gamma)
    except ValueError as exc:
        raise ConfigError("function.gamma" if "gamma" in str(exc) else "function.values", str(exc)) from None


def parse_config(text: str, base: Path | str = ".") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(name, "unknown section")
        for k in cp[name]:
            if k not in SECTIONS[name]:
                raise ConfigError(f"{name}.{k}", "unknown key")
    if "function" not in cp:
        raise ConfigError("function", "missing section")
    fn = cp["function"]
    f = _function(fn, Path(base))
    convention = fn.get("convention", NEXT)
    if convention not in CONVENTIONS:
        raise ConfigError("function.convention", f"expected one of {CONVENTIONS}")
    cfg = RunConfig(function=f, convention=convention, text=text)

    run = cp["run"] if "run" in cp else {}
    if "T" in run:
        cfg.T = _int("run.T", run["T"], 1)
    if "seed" in run:
        cfg.seed = _int("run.seed", run["seed"], 0)
    if "replicas" in run:
        cfg.replicas = _int("run.replicas", run["replicas"], 1)
    if "threads" in run:
        cfg.threads = _int("run.threads", run["threads"], 1)
    if "out" in run:
        cfg.out = run["out"]
    if "memory_limit_mb" in run:
        cfg.memory_limit = _int("run.memory_limit_mb", run["memory_limit_mb"], 1) << 20
    if "snapshot_times" in run:
        cfg.snapshot_times = _list("run.snapshot_times", run["snapshot_times"], _int)

    exp = cp["experiment"] if "experiment" in cp else {}
    e: dict = {}
    if "kind" in exp:
        if exp["kind"] not in KINDS:
            raise ConfigError("experiment.kind", f"unknown kind {exp['kind']!r}; expected one of {KINDS}")
        e["kind"] = exp["kind"]
    for k in ("N", "t_grid", "vertices"):
        if k in exp:
            e[k] = _list(f"experiment.{k}", exp[k], _int)
    for k in ("r", "percolation_seeds", "increment_replicas", "tail_horizon"):
        if k in exp:
            e[k] = _int(f"experiment.{k}", exp[k], 1)
    if "r" in e and e["r"] < 2:
        raise ConfigError("experiment.r", "threshold must be >= 2")
    if "c_list" in exp:
        e["c_list"] = _list("experiment.c_list", exp["c_list"], _float)
        if any(not 0.0 < c <= 1.0 for c in e["c_list"]):
            raise ConfigError("experiment.c_list", "fractions must lie in (0, 1]")
    if "a_family" in exp:
        try:
            e["a_family"] = RateFamily.parse(exp["a_family"])
        except ValueError as exc:
            raise ConfigError("experiment.a_family", str(exc)) from None
    if "t_grid" in e and any(t < 2 for t in e["t_grid"]):
        raise ConfigError("experiment.t_grid", "grid times must be >= 2")
    cfg.experiment = e
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, path.parent)
