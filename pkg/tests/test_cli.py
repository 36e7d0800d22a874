import csv
import json
import time

import pytest

from qpjacobi.cli import run

SMALL = {
    "model": {"preset": "amo", "lam": 3.0},
    "scales": {"N": [64, 128], "l": 16, "holder_N": 256, "lyapunov_N": 200},
    "grids": {"M": 16, "trials": 3, "energy_count": 3, "holder_energy_count": 2},
}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(SMALL))
    return p


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("sub", ["lyapunov", "ids", "wegner", "holder", "zeros", "jensen", "ap", "adjust",
                                 "identities", "gate"])
def test_every_subcommand(sub, cfg_path, tmp_path):
    out = tmp_path / "out"
    assert run([sub, "--config", str(cfg_path), "--out", str(out), "--no-cache"]) == 0
    rows = _rows(out / f"{sub}.csv")
    meta = json.loads((out / f"{sub}.meta.json").read_text())
    assert meta["subcommand"] == sub and meta["config"]["seed"] == 0
    assert all(r["config_hash"] == meta["config_hash"] for r in rows)
    if sub not in ("holder",):
        assert rows


def test_identities_below_tolerance(cfg_path, tmp_path):
    run(["identities", "--config", str(cfg_path), "--out", str(tmp_path), "--no-cache"])
    rows = _rows(tmp_path / "identities.csv")
    assert all(float(r[k]) < 1e-9 for r in rows for k in ("mu_ma", "ma_fa", "det"))


def test_wegner_columns(cfg_path, tmp_path):
    run(["wegner", "--config", str(cfg_path), "--out", str(tmp_path), "--no-cache"])
    header = (tmp_path / "wegner.csv").read_text().splitlines()[0].split(",")
    for col in ("E", "eta", "integral", "bound", "pass", "K_size", "seed"):
        assert col in header


def test_bad_config_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"grids": {"M": "many"}}')
    assert run(["ids", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "grids.M" in capsys.readouterr().err
    p.write_text('{\n "seed": 1,\n}')
    assert run(["ids", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "line 3" in capsys.readouterr().err
    assert run(["ids", "--config", str(tmp_path / "missing.json")]) == 1


def test_gate_violation_exit_2(tmp_path):
    p = tmp_path / "weak.json"
    p.write_text(json.dumps({**SMALL, "model": {"preset": "amo", "lam": 0.2}}))
    assert run(["gate", "--config", str(p), "--out", str(tmp_path), "--no-cache"]) == 2
    report = json.loads((tmp_path / "gate.meta.json").read_text())["extras"]["report"]
    assert report["hypothesis_violated"]


def test_cache_hit_fast_and_identical(tmp_path):
    p = tmp_path / "ids.json"
    p.write_text(json.dumps({**SMALL, "scales": {"N": [1024, 2048]}, "grids": {"M": 64}}))
    args = ["ids", "--config", str(p), "--out", str(tmp_path / "o")]
    t0 = time.perf_counter()
    run(args)
    first = time.perf_counter() - t0
    csv1 = (tmp_path / "o" / "ids.csv").read_bytes()
    t0 = time.perf_counter()
    run(args)
    second = time.perf_counter() - t0
    assert (tmp_path / "o" / "ids.csv").read_bytes() == csv1
    assert second * 10 <= first
    run(args + ["--no-cache"])
    assert (tmp_path / "o" / "ids.csv").read_bytes() == csv1


def test_threads_and_formats_do_not_change_numbers(cfg_path, tmp_path):
    run(["zeros", "--config", str(cfg_path), "--out", str(tmp_path / "a"), "--threads", "1", "--no-cache"])
    run(["zeros", "--config", str(cfg_path), "--out", str(tmp_path / "b"), "--threads", "4", "--no-cache"])
    assert (tmp_path / "a" / "zeros.csv").read_bytes() == (tmp_path / "b" / "zeros.csv").read_bytes()
    run(["zeros", "--config", str(cfg_path), "--out", str(tmp_path / "c"), "--format", "json", "--no-cache"])
    records = json.loads((tmp_path / "c" / "zeros.json").read_text())
    rows = _rows(tmp_path / "a" / "zeros.csv")
    assert [repr(r["count"]) for r in records] == [repr(int(r["count"])) for r in rows]


def test_seed_override_changes_hash(cfg_path, tmp_path):
    run(["zeros", "--config", str(cfg_path), "--out", str(tmp_path / "a"), "--no-cache"])
    run(["zeros", "--config", str(cfg_path), "--out", str(tmp_path / "b"), "--seed", "5", "--no-cache"])
    ma = json.loads((tmp_path / "a" / "zeros.meta.json").read_text())
    mb = json.loads((tmp_path / "b" / "zeros.meta.json").read_text())
    assert mb["seed"] == 5 and ma["config_hash"] != mb["config_hash"]


def test_svg_outputs_are_standalone_and_deterministic(tmp_path):
    p = tmp_path / "h.json"
    p.write_text(json.dumps({**SMALL, "scales": {"N": [128], "holder_N": 2048},
                             "grids": {"M": 64, "holder_energy_count": 2, "holder_eta_count": 6}}))
    for d in ("a", "b"):
        assert run(["ids", "--config", str(p), "--out", str(tmp_path / d), "--svg", "--no-cache"]) == 0
        assert run(["holder", "--config", str(p), "--out", str(tmp_path / d), "--svg", "--no-cache"]) == 0
    for name in ("ids_ids.svg", "holder_moduli.svg"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a.lstrip().startswith(b"<?xml") and b"<svg" in a
        assert a == (tmp_path / "b" / name).read_bytes()
