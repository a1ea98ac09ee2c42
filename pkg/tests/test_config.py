import numpy as np
import pytest

from pnrtomo import config as cfg
from pnrtomo.errors import ConfigError, InvariantViolation


def test_minimal_state_config():
    c = cfg.parse({"kind": "state", "state": {"recipe": "vacuum", "n": 2}})
    assert c.budget.exact and c.root_policy == "min-norm" and not c.project
    assert cfg.build_state(c.target).n == 2


@pytest.mark.parametrize("recipe,extra,n", [
    ("squeezed_thermal", {"n_th": 1.0, "s": 0.2}, 1),
    ("two_mode_benchmark", {"mode1": {"n_th": 0.2}, "mode2": {"s": 0.1}, "u": 0.3}, 2),
    ("random", {"n": 3, "seed": 4}, 3),
    ("coherent", {"d": [1.0, 2.0]}, 1),
    ("explicit", {"d": [0, 0], "V": [[1, 0], [0, 1]]}, 1),
])
def test_state_recipes(recipe, extra, n):
    assert cfg.build_state({"recipe": recipe, **extra}).n == n


@pytest.mark.parametrize("recipe,extra", [
    ("identity", {"n": 2}), ("attenuator", {"eta": 0.5}), ("amplifier", {"g": 1.2}),
    ("classical_noise", {"c": 0.3}), ("random", {"n": 2, "seed": 1}),
    ("explicit", {"A": [[1, 0], [0, 1]], "B": [[0, 0], [0, 0]]}),
])
def test_channel_recipes(recipe, extra):
    assert cfg.build_channel({"recipe": recipe, **extra}).cp_margin >= -1e-10


def test_unphysical_explicit_state_names_invariant():
    with pytest.raises(InvariantViolation, match="V \\+ i/2 Omega"):
        cfg.build_state({"recipe": "explicit", "d": [0, 0], "V": [[0.1, 0], [0, 0.1]]})


def test_non_cp_explicit_channel():
    with pytest.raises(InvariantViolation, match="complete positivity"):
        cfg.build_channel({"recipe": "explicit", "A": [[2, 0], [0, 2]], "B": [[0, 0], [0, 0]]})


@pytest.mark.parametrize("doc,msg", [
    ({"kind": "nope"}, "kind"),
    ({"kind": "state", "schema_version": 9}, "schema_version"),
    ({"kind": "state", "budget": {"shots": -3}}, "shots"),
    ({"kind": "state", "budget": {"shots": 10, "seed": 2**64}}, "seed"),
    ({"kind": "state", "budget": {"per_setting": {"N": "exact"}}}, "per_setting"),
    ({"kind": "state", "estimator": {"root_policy": "biggest"}}, "root_policy"),
    ({"kind": "state", "estimator": {"project": "yes"}}, "project"),
    ({"kind": "channel", "channel": {"probes": "loud"}}, "probes"),
    ({"kind": "variance-curves", "curves": {"sweep": {"step": -1}}}, "sweep"),
    ({"kind": "state", "state": "flat"}, "table"),
])
def test_config_errors(doc, msg):
    with pytest.raises(ConfigError, match=msg):
        c = cfg.parse(doc)
        cfg.build_state(c.target)


@pytest.mark.parametrize("sec,msg", [
    ({"recipe": "mystery"}, "recipe"),
    ({"recipe": "squeezed_thermal", "n_th": "hot"}, "n_th"),
    ({"recipe": "explicit", "d": [0, 0]}, "missing key V"),
    ({"recipe": "explicit", "d": [[0]], "V": [[1, 0], [0, 1]]}, "1-dimensional"),
    ({"recipe": "random"}, "n"),
])
def test_state_section_errors(sec, msg):
    with pytest.raises(ConfigError, match=msg):
        cfg.build_state(sec)


def test_attenuator_missing_eta():
    with pytest.raises(ConfigError, match="eta"):
        cfg.build_channel({"recipe": "attenuator"})


def test_shots_parsing():
    assert cfg.parse_shots("exact") is None
    assert cfg.parse_shots("250") == 250
    assert cfg.parse_shots(7) == 7
    for bad in ("many", 0, 1.5, True):
        with pytest.raises(ConfigError):
            cfg.parse_shots(bad)


def test_fixed_probe_amplitudes():
    c = cfg.parse({"kind": "channel", "channel": {"recipe": "identity", "probes": "fixed", "amplitudes": [1, 0.5]}})
    assert c.amplitudes == (1.0, 0.5)


def test_curve_recipe_defaults_to_figure_state():
    single, two, u = cfg.curve_recipe({})
    assert two is None and u == 0.0
    assert single.n_th == 1.0 and np.isclose(single.beta, np.pi / 3)
    with pytest.raises(ConfigError):
        cfg.curve_recipe({"recipe": "random"})


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        cfg.load(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("kind = = 1")
    with pytest.raises(ConfigError, match="not valid TOML"):
        cfg.load(bad)
