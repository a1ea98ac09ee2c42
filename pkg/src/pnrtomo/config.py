"""Experiment configuration files (TOML).

A config names what to run and on which true object::

    kind = "state"              # state | channel | variance-curves

    [budget]
    shots = "exact"             # or a positive integer per setting
    seed = 0
    per_setting = {}            # label -> shots overrides

    [state]
    recipe = "squeezed_thermal" # squeezed_thermal | two_mode_benchmark | random | explicit
    n_th = 1.0
    s = 0.3
    beta = 0.5
    u = 0.2

    [estimator]
    root_policy = "min-norm"
    project = false

    [output]
    report = "report.json"

See the README for every recipe and its keys.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import channel as ch
from . import state as gs
from .channel_tomography import PROBE_MODES, ROOT_POLICIES
from .curves import FIG_6A, Sweep
from .errors import ConfigError, InvariantViolation
from .measurement import ShotBudget

SCHEMA_VERSION = 1
KINDS = ("state", "channel", "variance-curves")
STATE_RECIPES = ("squeezed_thermal", "two_mode_benchmark", "random", "explicit", "vacuum", "coherent")
CHANNEL_RECIPES = ("identity", "attenuator", "amplifier", "classical_noise", "random", "explicit")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    target: Mapping[str, Any]
    budget: ShotBudget
    root_policy: str = "min-norm"
    project: bool = False
    probes: str = "adaptive"
    amplitudes: Optional[tuple] = None
    sweep: Optional[Sweep] = None
    report: Optional[str] = None
    csv: Optional[str] = None
    raw: Mapping[str, Any] = field(default_factory=dict, repr=False)


def _section(doc, name) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _num(sec, key, default=None, what="") -> float:
    val = sec.get(key, default)
    if val is None:
        raise ConfigError(f"missing key {what}{key}")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{what}{key} must be a number, got {val!r}")
    return float(val)


def _int(sec, key, default=None, what="") -> int:
    val = sec.get(key, default)
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{what}{key} must be an integer, got {val!r}")
    return val


def parse_shots(value) -> Optional[int]:
    if value is None or value == "exact":
        return None
    if isinstance(value, str) and value.isdigit():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"shots must be 'exact' or a positive integer, got {value!r}")
    return value


def parse_budget(sec: Mapping[str, Any]) -> ShotBudget:
    shots = parse_shots(sec.get("shots", "exact"))
    seed = _int(sec, "seed", 0, "budget.")
    if not 0 <= seed < 2**64:
        raise ConfigError(f"budget.seed must fit in 64 unsigned bits, got {seed}")
    per = sec.get("per_setting", {})
    if not isinstance(per, dict):
        raise ConfigError("budget.per_setting must be a table of label = shots")
    per = {str(k): parse_shots(v) for k, v in per.items()}
    if any(v is None for v in per.values()):
        raise ConfigError("budget.per_setting values must be positive integers")
    return ShotBudget(shots, seed, per)


def _params(sec, prefix="") -> gs.SqueezedThermalParams:
    return gs.SqueezedThermalParams(
        n_th=_num(sec, "n_th", 0.0, prefix), s=_num(sec, "s", 0.0, prefix),
        beta=_num(sec, "beta", 0.0, prefix), u=_num(sec, "u", 0.0, prefix),
    )


def build_state(sec: Mapping[str, Any]) -> gs.GaussianState:
    """Construct the true state; physicality violations propagate as InvariantViolation."""
    recipe = sec.get("recipe")
    if recipe not in STATE_RECIPES:
        raise ConfigError(f"state.recipe must be one of {STATE_RECIPES}, got {recipe!r}")
    if recipe == "squeezed_thermal":
        return gs.squeezed_thermal(_params(sec, "state."))
    if recipe == "two_mode_benchmark":
        m1, m2 = _section(sec, "mode1"), _section(sec, "mode2")
        return gs.two_mode_benchmark(_params(m1, "state.mode1."), _params(m2, "state.mode2."),
                                     _num(sec, "u", 0.0, "state."))
    if recipe == "vacuum":
        return gs.vacuum(_int(sec, "n", 1, "state."))
    if recipe == "coherent":
        return gs.coherent(_array(sec, "d", 1))
    if recipe == "random":
        n = _int(sec, "n", None, "state.")
        if n < 1:
            raise ConfigError(f"state.n must be >= 1, got {n}")
        rng = np.random.default_rng(_int(sec, "seed", 0, "state."))
        return gs.random_state(n, rng)
    return gs.GaussianState(_array(sec, "d", 1), _array(sec, "V", 2))


def _array(sec, key, ndim) -> np.ndarray:
    if key not in sec:
        raise ConfigError(f"missing key {key}")
    try:
        arr = np.array(sec[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} is not a numeric array: {exc}") from None
    if arr.ndim != ndim:
        raise ConfigError(f"{key} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def build_channel(sec: Mapping[str, Any]) -> ch.GaussianChannel:
    recipe = sec.get("recipe")
    if recipe not in CHANNEL_RECIPES:
        raise ConfigError(f"channel.recipe must be one of {CHANNEL_RECIPES}, got {recipe!r}")
    n = _int(sec, "n", 1, "channel.")
    if n < 1:
        raise ConfigError(f"channel.n must be >= 1, got {n}")
    if recipe == "identity":
        return ch.identity_channel(n)
    if recipe == "attenuator":
        return ch.attenuator(_num(sec, "eta", None, "channel."), n)
    if recipe == "amplifier":
        return ch.amplifier(_num(sec, "g", None, "channel."), n)
    if recipe == "classical_noise":
        return ch.classical_noise(_num(sec, "c", None, "channel."), n)
    if recipe == "random":
        return ch.random_cp_channel(n, _int(sec, "seed", 0, "channel."), _num(sec, "margin", 0.05, "channel."))
    return ch.GaussianChannel(_array(sec, "A", 2), _array(sec, "B", 2), "explicit")


def parse(doc: Mapping[str, Any]) -> ExperimentConfig:
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}; this build reads {SCHEMA_VERSION}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    budget = parse_budget(_section(doc, "budget"))
    est = _section(doc, "estimator")
    policy = est.get("root_policy", "min-norm")
    if policy not in ROOT_POLICIES:
        raise ConfigError(f"estimator.root_policy must be one of {ROOT_POLICIES}, got {policy!r}")
    project = est.get("project", False)
    if not isinstance(project, bool):
        raise ConfigError("estimator.project must be true or false")
    out = _section(doc, "output")
    probes, amplitudes, sweep = "adaptive", None, None
    if kind == "state":
        target = _section(doc, "state")
    elif kind == "channel":
        target = _section(doc, "channel")
        probes = target.get("probes", "adaptive")
        if probes not in PROBE_MODES:
            raise ConfigError(f"channel.probes must be one of {PROBE_MODES}, got {probes!r}")
        if probes == "fixed":
            amplitudes = tuple(_array(target, "amplitudes", 1).tolist())
    else:
        target = _section(doc, "curves")
        sw = _section(target, "sweep")
        sweep = Sweep(str(sw.get("axis", "u")), _num(sw, "start", 0.0, "curves.sweep."),
                      _num(sw, "stop", 2.0, "curves.sweep."), _num(sw, "step", 0.05, "curves.sweep."))
        try:
            sweep.grid()
        except InvariantViolation as exc:
            raise ConfigError(f"invalid [curves.sweep]: {exc}") from None
    return ExperimentConfig(kind, target, budget, policy, project, probes, amplitudes, sweep,
                            out.get("report"), out.get("csv"), dict(doc))


def load(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from None
    return parse(doc)


def curve_recipe(target: Mapping[str, Any]):
    """``(single, two_mode, u)`` for :func:`curves.variance_curves`; defaults to the single-mode figure state."""
    recipe = target.get("recipe", "squeezed_thermal")
    if recipe == "squeezed_thermal":
        merged = {**FIG_6A, **{k: v for k, v in target.items() if k in ("n_th", "s", "beta", "u")}}
        return _params(merged, "curves."), None, 0.0
    if recipe == "two_mode_benchmark":
        m1, m2 = _section(target, "mode1"), _section(target, "mode2")
        return None, (_params(m1, "curves.mode1."), _params(m2, "curves.mode2.")), _num(target, "u", 0.0, "curves.")
    raise ConfigError(f"curves.recipe must be squeezed_thermal or two_mode_benchmark, got {recipe!r}")
