import json

import pytest
from hypothesis import given, settings, strategies as st

from semijulia.config import ConfigError, ExperimentConfig, bundled_names, load_config, loads_config
from semijulia.gridscan import COMPLEX_SLICE

BASE = {
    "seed": 3,
    "generators": [{"label": "f", "components": ["z1^2", "z2^2"]}],
    "region": {"mode": "ModulusPlane", "bounds": [[0, 3], [0, 2]], "resolution": [20, 10],
               "phase_samples": 2},
}


def test_bundled_configs_load():
    names = bundled_names()
    for name in ("example1_a2", "single_squaring", "chebyshev_N4", "recurrent_origin",
                 "henon_volume"):
        assert name in names
    for name in names:
        cfg = load_config(name)
        assert loads_config(cfg.dumps()) == cfg


def test_alias():
    assert load_config("example_single_squaring") == load_config("single_squaring")


def test_chebyshev_config():
    cfg = load_config("chebyshev_N4")
    G = cfg.semigroup()
    assert G.m == 5
    reg = cfg.region_obj()
    assert reg.mode == COMPLEX_SLICE and reg.slice_fixture == (0j, 0.5 + 0j)
    assert cfg.caveats() and "truncated" in cfg.caveats()[0]


def test_seed_mandatory_and_unknown_keys():
    d = dict(BASE)
    del d["seed"]
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(d)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**BASE, "colour": "red"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**BASE, "classifier": {"kapa": 3}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**BASE, "region": {**BASE["region"], "mode": "Polar"}})


def test_parse_error_position_in_file():
    text = json.dumps({**BASE, "generators": [{"label": "f", "components": ["z1^^2", "z2"]}]},
                      indent=2)
    with pytest.raises(ConfigError) as info:
        loads_config(text)
    line = text.splitlines()[info.value.line - 1]
    assert line[info.value.column - 1] == "^"
    assert line[info.value.column - 2] == "^"


def test_json_error_position():
    with pytest.raises(ConfigError) as info:
        loads_config('{\n  "seed": 1,\n  oops\n}')
    assert info.value.line == 3


def test_complex_values_as_strings():
    d = {**BASE, "region": {"mode": "ComplexSlice", "bounds": [[-1, 1], [-1, 1]],
                            "resolution": [4, 4], "slice_fixture": ["0", "0.5-0.25i"]}}
    assert ExperimentConfig.from_dict(d).region_obj().slice_fixture == (0j, 0.5 - 0.25j)
    d["region"]["slice_fixture"] = ["z1", 0]
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(d)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.floats(1.5, 1e8), st.integers(1, 16),
       st.sampled_from(["z1^2 - (0.5+1i)*z2", "z2", "3*z1*z2^4"]))
def test_round_trip(seed, R, L, expr):
    cfg = ExperimentConfig.from_dict({**BASE, "seed": seed, "classifier": {"R": R, "L": L},
                                      "generators": [{"label": "h", "components": [expr, "z1"]}]})
    back = loads_config(cfg.dumps())
    assert back == cfg and back.digest() == cfg.digest()
    assert back.classifier_config().R == R and back.classifier_config().seed == seed
