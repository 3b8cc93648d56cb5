import json
import math

import numpy as np
import pytest

import adaflow


def test_adam_schedule_limit():
    lam = 1.0
    assert adaflow.adam_a(1e3, lam, 1.0) == pytest.approx(1 - math.exp(-1))
    s = adaflow.Schedule.adam(1.0, 1.0, 1.0)
    assert s.kind == "adam"
    assert s.assumptions_hold()
    assert s(2.0)["h"] == pytest.approx(adaflow.adam_a(2.0, 1.0, 1.0))


def test_problem_oracles():
    p = adaflow.saddle_quartic()
    x = np.array([0.3, -0.7])
    h = 1e-6
    fd = [(p.value(x + h * e) - p.value(x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(p.grad(x), fd, atol=1e-6)
    kinds = sorted(k for _, k in p.critical_points())
    assert kinds == ["minimum", "minimum", "saddle"]


def test_optimize_converges():
    p = adaflow.quadratic_diag(np.array([1.0, 2.0]), sigma=0.5)
    out = adaflow.optimize(p, "general", adaflow.Schedule.adam(1, 1, 1), 0.5, 0.7, 5000, 8, 3, np.ones(2))
    assert out["x"].shape == (8, 2)
    assert out["diverged"] == 0
    assert out["median"] < 0.3


def test_reference_covariance():
    p = adaflow.quadratic_diag(np.array([1.0]), sigma=1.0)
    res = adaflow.clt_covariance(p, np.zeros(1), adaflow.Schedule.constant(1, 1, 1, 1), 0.5, 0.7, eps=1.0)
    assert res["gamma2"][0, 0] == pytest.approx(1 / (2 * math.sqrt(2)), rel=1e-12)
    assert res["consistency"] < 1e-10


def test_saddle_is_unstable():
    p = adaflow.saddle_quartic(sigma=1.0)
    res = adaflow.trap_analysis(p, np.zeros(2), adaflow.Schedule.constant(1, 1, 1, 1), eps=1.0)
    assert res["d_plus"] == 1
    assert res["zeta"][0] > 0


def test_errors_are_typed():
    with pytest.raises(adaflow.ConfigError):
        adaflow.quadratic_diag(np.array([1.0, -1.0]))


def test_cli_round_trip(tmp_path):
    cfg = {
        "version": 1,
        "problem": {"name": "quadratic_diag", "eigenvalues": [1.0]},
        "schedule": {"kind": "constant", "values": {"h": 1, "r": 1, "p": 1, "q": 1}},
        "ode": {"T": 5.0},
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert adaflow.run_cli("ode", path, tmp_path / "out") == 0
    assert (tmp_path / "out" / "trajectory.csv").exists()
    path.write_text(json.dumps({"version": 1, "bogus": 1}))
    assert adaflow.run_cli("ode", path, tmp_path / "bad") == 2
    assert not (tmp_path / "bad").exists()
