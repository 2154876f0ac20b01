import json
import math
from pathlib import Path

import numpy as np
import pytest

import specpred

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_fading_memory_matches_numpy():
    rng = np.random.default_rng(5)
    x = rng.uniform(0.0, 2.0, 300)
    dt, kappa = 0.01, 0.8
    s = np.array(specpred.fading_memory_sup(x.tolist(), dt, kappa))
    j = np.arange(len(x))
    brute = np.array([np.max(x[: k + 1] * np.exp(-kappa * dt * (k - j[: k + 1]))) for k in j])
    np.testing.assert_allclose(s, brute, rtol=1e-12)
    lagged = specpred.lagged_fading_sup(s.tolist(), dt, kappa, 0.5)
    # Window [0, max(t - lag, 0)] always contains tau = 0.
    assert lagged[49] == pytest.approx(x[0] * math.exp(-kappa * 0.49))
    assert lagged[60] == pytest.approx(s[10] * math.exp(-kappa * 0.5))


def test_delta_margin_residual():
    d = specpred.delta_margin(2.0, 1.0, 1.0, 1.0, 10.0)
    assert d["delta_star"] == pytest.approx(0.2811995743229608, abs=1e-12)
    assert specpred.small_gain_lhs(1.0, 1.0, 2.0, 1.0, d["delta_star"]) == pytest.approx(1.0, rel=1e-10)
    assert d["delta_max"] == pytest.approx(0.9 * d["delta_star"])


def test_certify_without_fit():
    cert = specpred.certify(fit=False)
    assert cert["delta_max"] > 0.0
    assert cert["sigma"] > 0.0
    assert all(c["provenance"] == "exact" for c in cert["constants"])


def test_simulate_zero_and_decay():
    zero = specpred.simulate(specpred.load(CONFIGS / "scenario_zero.json"), base_dir=CONFIGS)
    assert len(zero["t"]) == 101
    assert np.all(zero["c"] == 0) and np.all(np.asarray(zero["norm_upper"]) == 0)

    scenario = specpred.load(CONFIGS / "scenario_sinusoid.json")
    scenario["disturbance_d1"] = {"terms": []}
    scenario["integration"]["t_final"] = 4.0
    tr = specpred.simulate(scenario, base_dir=CONFIGS)
    assert tr["c"].shape == (4001, 12)
    norm = np.asarray(tr["norm_upper"])
    # Open-loop growth until the delayed control arrives, then decay.
    assert norm.max() > 10 * norm[0]
    assert norm[-1] < 1e-2 * norm.max()


def test_oracle_engine_agrees():
    scenario = specpred.load(CONFIGS / "scenario_sinusoid.json")
    scenario["integration"]["t_final"] = 1.0
    a = specpred.simulate(scenario, base_dir=CONFIGS)
    b = specpred.simulate(scenario, base_dir=CONFIGS, oracle=True)
    gap = np.max(np.abs(a["c"] - b["c"])) / np.max(np.abs(b["c"]))
    assert gap < 1e-4


def test_lemma2_and_falsification():
    rep = specpred.validate_lemma2(members=12, falsify_eps=0.45)
    assert rep["pass"]
    assert rep["M"] >= 1.0 and math.isfinite(rep["N"])
    assert rep["falsification"]["violated"]


def test_run_dispatch_and_errors():
    status, out, _ = specpred.run({"subcommand": "validate-lemma2", "members": 8})
    assert status == 0
    assert "M" in json.loads(out)
    status, _, log = specpred.run({"subcommand": "simulate", "scenario": str(CONFIGS / "missing.json")})
    assert status == 2 and "no such file" in log
    with pytest.raises(ValueError):
        specpred.simulate({"system": {"kind": "reaction_diffusion"}})
