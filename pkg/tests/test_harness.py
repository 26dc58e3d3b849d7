import json
import math

import mpmath as mp
import numpy as np
import pytest

from drumcorners.errors import FitFailure, IoError
from drumcorners.geometry import BoundaryCondition, LocalityScenario, Model, Rectangle
from drumcorners.harness import (
    emit_plot_data,
    fit_decay,
    interval_kernel_mp,
    locality_study,
    model_kernel_mp,
    run_experiment,
    validate_config,
)
from drumcorners.kernels import halfline1d, interval1d

D = BoundaryCondition.dirichlet()
N = BoundaryCondition.neumann()
R = BoundaryCondition.robin(1.0)


@pytest.mark.parametrize("bc", [D, N, R])
def test_mp_interval_kernel_matches_float(bc):
    xs = [0.0, 0.3, 0.8, 1.0]
    with mp.workdps(30):
        X = interval_kernel_mp(0.01, xs, 1.0, bc)
    ref, _ = interval1d(0.01, np.array(xs)[:, None], np.array(xs)[None, :], 1.0, bc)
    assert np.allclose(np.array(X, dtype=float), ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("bc", [D, N, R])
def test_mp_model_kernel_matches_float(bc):
    xs = [0.0, 0.2, 0.45]
    with mp.workdps(30):
        X = model_kernel_mp(0.02, xs, "lo", 1.0, bc)
        Xh = model_kernel_mp(0.02, [1.0 - x for x in xs], "hi", 1.0, bc)
    ref = halfline1d(0.02, np.array(xs)[:, None], np.array(xs)[None, :], bc)
    assert np.allclose(np.array(X, dtype=float), ref, rtol=1e-13)
    assert np.allclose(np.array(Xh, dtype=float), ref, rtol=1e-13)


def test_fit_decay_synthetic():
    t = np.geomspace(2e-3, 2e-2, 7)
    A, c, r2 = fit_decay(t, math.log(3.0) - 0.4 / t)
    assert A == pytest.approx(3.0) and c == pytest.approx(0.4) and r2 == pytest.approx(1.0)
    with pytest.raises(FitFailure):
        fit_decay(t[:2], [-1.0, -2.0])


def _corner_scenario(bc=D):
    return LocalityScenario(Rectangle(1.0, 1.0), Model("sector", bc, math.pi / 2, "ll"), (0.0, 0.25, 0.0, 0.25), bc)


def test_locality_small_study():
    rep = locality_study(_corner_scenario(), np.geomspace(2e-3, 1.6e-2, 5), sample_density=7)
    assert rep.passed
    assert rep.sup_diff[0] < 1e-8
    assert np.all(np.diff(rep.log_sup_diff) > 0)


def test_locality_identical_model_gives_zero():
    rep = locality_study(_corner_scenario(), [0.01, 0.02], sample_density=3, model_factors=("interval", "interval"))
    assert np.all(rep.sup_diff == 0.0)


def test_negative_control_fails():
    # free model against a patch touching two Dirichlet edges: the mismatch does not decay
    sc = LocalityScenario(Rectangle(1.0, 1.0), Model("free", D), (0.0, 0.25, 0.0, 0.25), D, strict=False)
    rep = locality_study(sc, np.geomspace(2e-3, 1.6e-2, 5), sample_density=5)
    assert not rep.passed


def test_emit_plot_data(tmp_path):
    rep = locality_study(_corner_scenario(), np.geomspace(4e-3, 1.6e-2, 3), sample_density=3)
    text = emit_plot_data(rep, tmp_path / "loc.csv")
    lines = text.strip().splitlines()
    assert lines[0] == "t,sup_diff,model_fit" and len(lines) == 4
    assert (tmp_path / "loc.csv").read_text() == text
    assert emit_plot_data(None).strip() == "t,value"
    with pytest.raises(IoError):
        emit_plot_data(rep, tmp_path / "missing" / "dir" / "x.csv")


def test_validate_config_rejects():
    from drumcorners.errors import ValidationError

    with pytest.raises(ValidationError):
        validate_config({"experiment": "nope"})
    with pytest.raises(ValidationError):
        validate_config({"experiment": "trace_constant"})


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


SQUARE_CFG = {
    "experiment": "trace_constant",
    "domain": "square",
    "bc": "N",
    "spectrum": {"source": "closed_form", "cutoff": 50000},
    "t_grid": {"min": 1e-3, "max": 5e-3, "n": 12},
    "expect": {"c_0": 0.25, "tol": 0.01},
}


def test_run_experiment_ok_and_deterministic(tmp_path):
    p = _write(tmp_path, SQUARE_CFG)
    assert run_experiment(p, tmp_path / "a") == 0
    assert run_experiment(p, tmp_path / "b") == 0
    ra = (tmp_path / "a" / "result.json").read_text()
    assert ra == (tmp_path / "b" / "result.json").read_text()
    assert (tmp_path / "a" / "trace_fit.csv").read_bytes() == (tmp_path / "b" / "trace_fit.csv").read_bytes()
    man = json.loads((tmp_path / "a" / "run.json").read_text())
    assert man["status"] == "ok" and len(man["inputs_sha256"]) == 64
    assert "result.json" in man["outputs"]
    assert json.loads(ra)["pass"] is True


def test_run_experiment_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run_experiment(bad, tmp_path / "bad") == 2
    assert json.loads((tmp_path / "bad" / "error.json").read_text())["exit_code"] == 2
    cfg = dict(SQUARE_CFG, expect={"c_0": 0.5, "tol": 0.01})
    assert run_experiment(_write(tmp_path, cfg, "miss.json"), tmp_path / "miss") == 1


def test_run_locality_config(tmp_path):
    cfg = {
        "experiment": "locality",
        "scenario": {"rectangle": [1.0, 1.0], "bc": "N", "model": {"kind": "halfplane", "anchor": "bottom"},
                     "omega0": [0.3, 0.7, 0.0, 0.2]},
        "t_grid": {"min": 2e-3, "max": 1.6e-2, "n": 4},
        "sample_density": 5,
    }
    assert run_experiment(_write(tmp_path, cfg), tmp_path / "loc") == 0
    res = json.loads((tmp_path / "loc" / "result.json").read_text())
    assert res["passed"] and res["c"] > 0


def test_shipped_configs_validate():
    from pathlib import Path

    cfgs = sorted((Path(__file__).parents[1] / "configs").glob("*.json"))
    assert cfgs
    for p in cfgs:
        validate_config(json.loads(p.read_text()))
