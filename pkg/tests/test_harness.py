import json

import jsonschema
import numpy as np
import pytest

from bandlab.harness import cli
from bandlab.harness.config import SCHEMA, from_dict, load
from bandlab.harness.estimators import Accumulator, Check, EstimatorResult, mean_stderr
from bandlab.model import BandMatrix


def test_config_defaults_and_validation(tmp_path):
    cfg = from_dict({"geometry": {"d": 3, "W": 2, "L": 2}, "lambda": 0.5, "tolerances": {"slack": 4}})
    assert cfg.geo.N == 64 and cfg.lam == 0.5
    assert cfg.tolerances["slack"] == 4 and cfg.tolerances["k_sigma"] == 3.0
    for bad in ({"lambda": -1}, {"geometry": {"d": 3, "W": 2}}, {"z": {"re": 0, "im": 0}},
                {"flow": {"E": 0, "t": 1.0}}, {"unknown": 1}):
        with pytest.raises(jsonschema.ValidationError):
            from_dict(bad)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert load(p).to_dict() == cfg.to_dict()
    jsonschema.Draft202012Validator.check_schema(SCHEMA)


def test_estimators(rng):
    x = rng.standard_normal(400)
    m, s = mean_stderr(x)
    assert abs(s - x.std(ddof=1) / 20) < 1e-15
    a, b = Accumulator(), Accumulator()
    for v in x[:150]:
        a.add(v)
    for v in x[150:]:
        b.add(v)
    mm, ss = a.merge(b).result()
    assert abs(mm - m) < 1e-12 and abs(ss - s) < 1e-12
    assert EstimatorResult("e", 1.0, 0.1, 10, 1.25).passed
    assert not EstimatorResult("e", 1.0, 0.1, 10, 1.35).passed
    assert EstimatorResult("e", 1.0, 0.0, 10, 1.1, atol=0.2).passed
    assert not Check("c", np.nan, 1.0).passed
    assert json.dumps(Check("c", 1.0, 3.0, {"v": np.arange(2), "z": 1 + 2j}).to_dict())


def _summary(d):
    return json.loads((d / "summary.json").read_text())


def test_cli_bad_config_exit2(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"lambda": "x"}))
    assert cli.main(["ward-check", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "lambda" in capsys.readouterr().err
    assert cli.main(["nonsense"]) == 2
    assert cli.main(["kloop", "--n", "x"]) == 2


def test_cli_schema(capsys):
    assert cli.main(["schema"]) == 0
    assert json.loads(capsys.readouterr().out)["title"] == "bandlab experiment config"


def test_cli_sample_dump_roundtrip(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"geometry": {"d": 3, "W": 2, "L": 2}, "samples": 2}))
    out = tmp_path / "o"
    assert cli.main(["sample", "--config", str(p), "--seed", "5", "--out", str(out)]) == 0
    bm = BandMatrix.load(out / "H_seed5_sample1.bin")
    assert bm.H.shape == (64, 64) and bm.seed == 5 and bm.sample == 1
    raw = (out / "H_seed5_sample1.bin").read_bytes()
    assert raw[:8] == b"BANDLABH"
    s = _summary(out)
    assert s["passed"] and s["config"]["seed"] == 5


def test_cli_kloop_deterministic(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"geometry": {"d": 3, "W": 1, "L": 2}, "flow": {"E": 0.3, "t": 0.5}}))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["kloop", "--n", "3", "--config", str(cfgp), "--out", str(a)]) == 0
    assert cli.main(["kloop", "--n", "3", "--config", str(cfgp), "--out", str(b), "--threads", "2"]) == 0
    sa, sb = _summary(a), _summary(b)
    assert sa["checks"] == sb["checks"] and sa["info"] == sb["info"]


def test_cli_failure_exit1(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"geometry": {"d": 3, "W": 2, "L": 2}, "samples": 3,
                                "z": {"re": 0.2, "im": 0.2}, "tolerances": {"slack": 1e-9}}))
    out = tmp_path / "o"
    assert cli.main(["local-law", "--config", str(cfgp), "--out", str(out)]) == 1
    s = _summary(out)
    assert not s["passed"] and "local_law_entrywise_p99" in s["failed"]
    assert (out / "local_law.csv").exists()


def test_cli_runner_error_exit1(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"geometry": {"d": 3, "W": 2, "L": 2}, "z": {"re": 1.9, "im": 0.5}}))
    assert cli.main(["local-law", "--config", str(cfgp), "--out", str(tmp_path / "o")]) == 1
    assert _summary(tmp_path / "o")["error"]
