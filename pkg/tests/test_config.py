import json

import numpy as np
import pytest

from quadsmc.config import ConfigError, load_config, loads_ini, loads_json, merged


def test_ini_and_json_equivalent():
    ini = loads_ini("[run]\nscenario = gimbal1  ; comment\ncontroller = aqsmc\n"
                    "[gains.qsmc.attitude]\nK_q = 300, 300, 300\n[adapt.q]\nepsilon = 0.5\n")
    js = loads_json(json.dumps({"run": {"scenario": "gimbal1", "controller": "aqsmc"},
                                "gains": {"qsmc": {"attitude": {"K_q": [300, 300, 300]}}},
                                "adapt": {"q": {"epsilon": 0.5}}}))
    assert ini.to_dict() == js.to_dict()


@pytest.mark.parametrize("text, field", [
    ("[run]\nseed = abc\n", "run.seed"),
    ("[run]\nfoo = 1\n", "run.foo"),
    ("[run]\nscenario = nowhere\n", "run.scenario"),
])
def test_errors_name_line_and_field(text, field):
    with pytest.raises(ConfigError) as err:
        cfg = loads_ini(text, source="bad.ini")
        cfg.build_scenario()
    assert f"field '{field}'" in str(err.value)
    assert "bad.ini" in str(err.value)


def test_invalid_gain_rejected_at_build():
    cfg = loads_ini("[gains.qsmc.attitude]\nK_q = -1, 1, 1\n", source="neg.ini")
    with pytest.raises(ConfigError) as err:
        cfg.build_controller("qsmc", cfg.build_scenario())
    assert "K_q" in str(err.value)


def test_overrides_apply():
    cfg = loads_ini("[gains.qsmc.attitude]\nK_q = 300, 300, 300\n")
    gains = cfg.controller_gains("qsmc", cfg.build_scenario("gimbal1"))
    assert np.array_equal(gains["attitude"].K_q, [300.0, 300.0, 300.0])
    m = merged(cfg, seed=4, scenario="hover")
    assert m.seed == 4 and m.scenario == "hover"


def test_load_from_file(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[run]\nscenario = hover\nseed = 2\n[sim]\nattitude_rate = 1000\n")
    cfg = load_config(path)
    assert cfg.seed == 2 and cfg.sim_config().attitude_rate == 1000
