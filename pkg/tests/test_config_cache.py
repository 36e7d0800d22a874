import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpjacobi.cache import ResultCache, inputs_digest
from qpjacobi.config import ConfigError, ExperimentConfig


def test_defaults_roundtrip():
    cfg = ExperimentConfig()
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg and again.digest() == cfg.digest()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 10), st.lists(st.integers(8, 4096), min_size=1, max_size=4),
       st.sampled_from(["golden", 0.6180339887498949, 0.4142135623730951]))
def test_roundtrip_is_lossless(seed, lam, Ns, omega):
    cfg = ExperimentConfig.from_dict({"seed": seed, "model": {"lam": lam}, "scales": {"N": Ns},
                                      "frequency": {"omega": omega}})
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize("text, where", [
    ('{"grids": {"M": "x"}}', "grids.M"),
    ('{"model": {"preset": "nope"}}', "model.preset"),
    ('{"scales": {"N": [1, "a"]}}', "scales.N[1]"),
    ('{"bogus": 1}', "bogus"),
    ('{"schema_version": 7}', "schema_version"),
    ('{\n  "seed": 1,\n}', "line 3"),
])
def test_config_errors_name_the_field(text, where):
    with pytest.raises(ConfigError, match=where.replace("[", r"\[").replace("]", r"\]")):
        ExperimentConfig.from_json(text)


def test_fourier_preset():
    cfg = ExperimentConfig.from_dict({"model": {"preset": "fourier", "a": {"1": [1.5, 0], "-1": [1.5, 0]},
                                                "b": {"0": [1, 0]}}})
    m = cfg.build_model()
    assert m.d0 == 1 and m.n_b == 0


def test_cache_roundtrip(tmp_path):
    c = ResultCache(tmp_path)
    d = inputs_digest({"a": 1})
    assert c.get("h", "ids", d) is None
    payload = {"rows": [[1, 0.1 + 0.2, float("inf")]], "x": "y"}
    c.put("h", "ids", d, payload, 1.5)
    assert c.get("h", "ids", d) == payload
    assert ResultCache(tmp_path, version="other").get("h", "ids", d) is None
    assert c.get("h", "wegner", d) is None


def test_corrupt_entry_is_evicted(tmp_path):
    c = ResultCache(tmp_path)
    c.put("h", "ids", "d", {"v": 1})
    (path,) = [p for p in tmp_path.rglob("*.json")]
    rec = json.loads(path.read_text())
    rec["payload"]["v"] = 2
    path.write_text(json.dumps(rec))
    assert c.get("h", "ids", "d") is None
    assert not path.exists()
    c.put("h", "ids", "d", {"v": 1})
    path.write_text("{not json")
    assert c.get("h", "ids", "d") is None
