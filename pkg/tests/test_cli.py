import json
from pathlib import Path

import numpy as np
import pytest

from finsler_xray.cli import main
from finsler_xray.config import load_config
from finsler_xray.errors import ConfigError

DEMO = Path(__file__).resolve().parents[1] / "demo" / "configs"
EUC = {"family": "RadialRiemannian", "R": 0.3, "c": 1.0}
FIELD = {"terms": [{"k": 0, "profile": {"poly": [-1.2, 5.2, -4.0]}},
                   {"k": 1, "profile": {"poly": [-0.45, 1.05, 2.4, -3.0]}, "phase": "cos"}]}


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def small(**extra):
    cfg = {"norm": EUC, "grids": {"n_r": 24, "k_max": 2, "n_theta": 6}, "field": FIELD}
    cfg.update(extra)
    return cfg


def test_check_passes_and_writes_report(tmp_path):
    assert main(["check", "--config", str(DEMO / "euclidean.json"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "check.json").read_text())
    assert rep["pass"] and rep["herglotz"]["pass"]


def test_check_violator_exit_1(tmp_path):
    assert main(["check", "--config", str(DEMO / "violator.json"), "--out", str(tmp_path)]) == 1
    assert json.loads((tmp_path / "check.json").read_text())["herglotz"]["pass"] is False


def test_malformed_config_exit_2(tmp_path):
    assert main(["check", "--config", str(DEMO / "malformed.json"), "--out", str(tmp_path)]) == 2


def test_usage_errors_exit_2(tmp_path):
    assert main(["nonsense", "--config", "x"]) == 2
    assert main(["check"]) == 2
    assert main(["check", "--config", str(tmp_path / "missing.json")]) == 2


def test_invalid_radius_and_grids(tmp_path):
    cfg = write(tmp_path, {"norm": {"family": "RadialRiemannian", "R": 1.5}})
    assert main(["check", "--config", cfg]) == 2
    cfg = write(tmp_path, {"norm": EUC, "grids": {"n_r": 2}}, "g.json")
    assert main(["forward", "--config", cfg]) == 2


def test_trace_outputs(tmp_path):
    cfg = write(tmp_path, {"norm": EUC, "trace": {"r0": [0.5, 0.8]}})
    assert main(["trace", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "trace.json").read_text())["traces"]
    assert summary[0]["T"] == pytest.approx(np.sqrt(0.75), abs=1e-10)
    assert (tmp_path / "o" / "trace_001.csv").exists()


def test_trace_rejects_radius(tmp_path):
    cfg = write(tmp_path, {"norm": EUC, "trace": {"r0": [1.2]}})
    assert main(["trace", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_forward_then_invert(tmp_path):
    out = tmp_path / "fwd"
    cfg = write(tmp_path, small())
    assert main(["forward", "--config", cfg, "--out", str(out)]) == 0
    inv = write(tmp_path, small(sinogram=str(out / "sinogram.csv")), "inv.json")
    assert main(["invert", "--config", inv, "--out", str(tmp_path / "inv")]) == 0
    rep = json.loads((tmp_path / "inv" / "invert.json").read_text())
    assert rep["rel_l2"] < 0.05


def test_invert_grid_mismatch(tmp_path):
    out = tmp_path / "fwd"
    assert main(["forward", "--config", write(tmp_path, small()), "--out", str(out)]) == 0
    other = small(sinogram=str(out / "sinogram.csv"))
    other["grids"] = {"n_r": 20, "k_max": 2, "n_theta": 6}
    assert main(["invert", "--config", write(tmp_path, other, "bad.json"), "--out", str(tmp_path / "x")]) == 2


def test_roundtrip_is_deterministic(tmp_path):
    cfg = write(tmp_path, small())
    for name in ("a", "b"):
        assert main(["roundtrip", "--config", cfg, "--out", str(tmp_path / name)]) == 0
    for f in ("roundtrip.json", "sinogram.csv", "reconstruction.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_zero_field_forward(tmp_path):
    assert main(["forward", "--config", str(DEMO / "zero_field.json"), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "forward.json").read_text())["max_abs"] == 0.0


def test_tomography_gate_and_force(tmp_path):
    bad = small(norm={"family": "RadialRiemannian", "R": 0.3, "c": [0.0, 0.0, 1.0]})
    cfg = write(tmp_path, bad)
    assert main(["forward", "--config", cfg, "--out", str(tmp_path / "g")]) == 1
    # forcing past the gate still fails when tracing meets a non-positive turning acceleration
    assert main(["forward", "--config", cfg, "--out", str(tmp_path / "f"), "--force"]) == 1


def test_elastic_report(tmp_path):
    assert main(["elastic", "--config", str(DEMO / "elastic_isotropic.json"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "elastic.json").read_text())
    assert rep["isotropic"] and rep["herglotz"]["pass"]
    assert rep["conformal"]["max_deviation_inverse_sqrt"] < 1e-9


def test_linearize_breaking_step_exit_1(tmp_path):
    assert main(["linearize", "--config", str(DEMO / "linearize_breaks_herglotz.json"),
                 "--out", str(tmp_path)]) == 1


def test_linearize_small(tmp_path):
    cfg = write(tmp_path, {"norm": EUC, "linearize": {"f": {"poly": [1.0, -1.0]}, "delta_theta": [1.0],
                                                      "step": 1e-3}})
    assert main(["linearize", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "linearize.json").read_text())
    assert rows[0]["rel_err"] < 1e-4


def test_load_config_norm_file(tmp_path):
    (tmp_path / "norm.json").write_text(json.dumps(EUC))
    cfg = load_config(write(tmp_path, {"norm": "norm.json", "seed": 3}))
    assert cfg.norm().R == 0.3 and cfg.seed == 3
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, {"norm": "absent.json"}, "b.json"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, {"seed": "x"}, "c.json"))
