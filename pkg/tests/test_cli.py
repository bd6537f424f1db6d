import csv
import json

import pytest

from liouville_max.cli import main

ANNULUS = {"annulus": {"R1": 2, "R2": 0.5}}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def read_csv(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def run(tmp_path, command, cfg, out="out"):
    o = tmp_path / out
    code = main([command, "--config", str(write(tmp_path, cfg, out + ".json")), "--out", str(o)])
    return code, o


def test_resonances_csv(tmp_path):
    code, o = run(tmp_path, "resonances", {"domain": {"model": {"R": 1, "q": 0.25}}, "options": {"N": 3}})
    assert code == 0
    rows = read_csv(o / "resonances.csv")
    assert float(rows[0]["alpha_n"]) == pytest.approx(5 / 3, abs=1e-15)
    assert float(rows[1]["alpha_n"]) == pytest.approx(34 / 15, abs=1e-15)
    head = (o / "resonances.csv").read_text().splitlines()[:2]
    assert head[0].startswith("# config_hash=") and head[1].startswith("# constants=")
    assert json.loads((o / "status.json").read_text())["status"] == "ok"


def test_validate_and_reproducible(tmp_path):
    cfg = {"domain": ANNULUS, "lambda": [1e-3, 1e-4, 1e-5, 1e-6]}
    code, o1 = run(tmp_path, "validate", cfg, "a")
    code2, o2 = run(tmp_path, "validate", cfg, "b")
    assert code == code2 == 0
    assert (o1 / "validate.csv").read_bytes() == (o2 / "validate.csv").read_bytes()
    rep = json.loads((o1 / "validate.json").read_text())
    assert rep["limit_mass"] == pytest.approx(18.12944, abs=1e-5)
    assert len(read_csv(o1 / "validate.csv")) == 4


def test_empty_lambda_list(tmp_path):
    code, _ = run(tmp_path, "validate", {"domain": ANNULUS, "lambda": []})
    assert code == 2


def test_unknown_key(tmp_path):
    code, _ = run(tmp_path, "validate", {"domain": ANNULUS, "lambda": [1e-4], "bogus": 1})
    assert code == 2


def test_lambda_out_of_range(tmp_path):
    code, _ = run(tmp_path, "validate", {"domain": ANNULUS, "lambda": [1.5]})
    assert code == 2


def test_bad_constants(tmp_path):
    code, _ = run(tmp_path, "validate", {"domain": ANNULUS, "lambda": [1e-4],
                                         "constants": {"m1": 10.0}})
    assert code == 2


def test_numerical_failure_exit_code(tmp_path):
    # α(λ = 1e-4) sits on a resonance-admissibility failure: reported, exit 3
    code, o = run(tmp_path, "match-solve", {"domain": ANNULUS, "lambda": [1e-4]})
    assert code == 3
    st = json.loads((o / "status.json").read_text())
    assert st["status"] == "failed" and st["partial"]


def test_fundamental_set_dump(tmp_path):
    code, o = run(tmp_path, "fundamental-set", {"options": {"omega": 2.0}})
    assert code == 0
    rows = read_csv(next(o.glob("*.csv")))
    assert len(rows) > 100


def test_missing_config_file(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
