import json
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crnet.harness import cli
from crnet.harness.config import ConfigError, ExperimentConfig, default_config, load_config, KINDS
from crnet.harness.experiments import dichotomy_verdicts, oracle_radial_cdf, run
from crnet.harness.parallel import keyed_map, thread_cap
from crnet.harness.reports import Checks, csv_text, read_csv, write_csv
from crnet.harness.training import (imaginary_masks, init_pair, match_budget, real_width_for_budget,
                                    squared_loss, train_squared)
from crnet import radial as rad


# ------------------------------------------------------------------ config


@pytest.mark.parametrize("kind", KINDS)
def test_default_config_round_trip(kind):
    cfg = default_config(kind)
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


@given(st.sampled_from(KINDS), st.integers(1, 4), st.integers(0, 20), st.floats(0.1, 10),
       st.lists(st.integers(0, 1000), min_size=1, max_size=5), st.lists(st.integers(1, 2048), max_size=3))
def test_config_round_trip(kind, d, N, C2, seeds, widths):
    cfg = ExperimentConfig(kind=kind, d=d, N=N, C2=C2, seeds=seeds, widths=widths,
                           tolerances={"ks": 0.05}, params={"h": 0.5})
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.to_json() == cfg.to_json()


@pytest.mark.parametrize("doc", [
    {"kind": "nope"},
    {"kind": "flow", "d": 5},
    {"kind": "flow", "d": 0},
    {"kind": "flow", "N": -1},
    {"kind": "flow", "C2": 0},
    {"kind": "flow", "seeds": []},
    {"kind": "flow", "widths": [4096]},
    {"kind": "flow", "samples": 2 * 10 ** 6},
    {"kind": "flow", "learning_rate": -1},
    {"kind": "flow", "tolerances": {"bogus": 1}},
    {"kind": "flow", "colour": "red"},
    {"d": 2},
    [1, 2],
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(doc)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_tolerance_override():
    cfg = ExperimentConfig(kind="density", tolerances={"ks": 0.5})
    assert cfg.tol("ks") == 0.5
    assert cfg.tol("density") == 0.02


# ------------------------------------------------------------------ reports


def test_csv_schema_and_floats(tmp_path):
    text = csv_text("demo", ["a", "b", "c"], [[0.1, True, 3]])
    assert text == "# schema: crnet.demo/1\na,b,c\n0.1,true,3\n"
    path = write_csv(tmp_path / "x" / "demo.csv", "demo", ["a"], [[np.float64(1 / 3)]])
    schema, header, rows = read_csv(path)
    assert schema == "# schema: crnet.demo/1"
    assert header == ["a"] and float(rows[0][0]) == 1 / 3
    with pytest.raises(ValueError):
        csv_text("demo", ["a", "b"], [[1]])


def test_checks():
    c = Checks()
    c.add("ok", 1e-14, 1e-12, True)
    assert c.passed
    c.add("bad", 1.0, 0.5, False, "note")
    assert not c.passed
    assert c.lines()[1].startswith("FAIL  bad")


# ------------------------------------------------------------------ parallel


def _square(key, arg):
    return key * arg


def test_keyed_map_serial_and_parallel(monkeypatch):
    items = [(k, 3) for k in range(5)]
    monkeypatch.setenv("CRNET_THREADS", "1")
    serial = keyed_map(_square, items)
    monkeypatch.setenv("CRNET_THREADS", "2")
    assert keyed_map(_square, items) == serial == {k: 3 * k for k in range(5)}


@pytest.mark.parametrize("value", ["0", "-2", "many"])
def test_thread_cap_validation(value, monkeypatch):
    monkeypatch.setenv("CRNET_THREADS", value)
    with pytest.raises(ConfigError):
        thread_cap()


# ------------------------------------------------------------------ training


@pytest.mark.parametrize("budget, q, m", [(97, 16, 12), (193, 32, 24), (409, 68, 51)])
def test_budget_matching(budget, q, m):
    assert real_width_for_budget(budget, 2) == q
    pair = match_budget(q, 2)
    assert pair.m == m
    cr, r = init_pair(pair, 0)
    assert r.parameter_count() == pair.real_count
    assert cr.parameter_count() - pair.masked - 1 == pair.real_count


@given(st.integers(1, 4), st.integers(1, 200))
def test_budget_parity(d, q):
    pair = match_budget(q, d)
    assert pair.real_count == pair.complex_count
    assert 0 <= pair.masked < 2 * d + 4


def test_budget_too_small():
    with pytest.raises(ValueError):
        real_width_for_budget(5, 2)


def test_masks_count_and_training_respects_them():
    pair = match_budget(16, 2)
    masks = imaginary_masks(2, pair.m, pair.masked)
    (w1, w2), (b1, _) = masks
    assert int(w1.sum() + w2.sum() + b1.sum()) == pair.masked
    cr, _ = init_pair(pair, 1)
    m = rad.build_density(4)
    X = rad.sample_mu(m, 500, 0)
    y = rad.eval_target(rad.RadialTarget.alternating(2, 8), X)
    res = train_squared(cr, X, y, 0.05, 30, masks=masks)
    assert np.all(res.net.weights[0][w1].imag == 0)
    assert np.all(res.net.weights[1][w2].imag == 0)
    assert res.best_loss <= squared_loss(cr, X, y)


def test_training_reduces_loss_for_real_net():
    pair = match_budget(16, 2)
    _, r = init_pair(pair, 2)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((400, 4))
    y = np.maximum(X[:, 0], 0.0)
    res = train_squared(r, X, y, 0.05, 200)
    assert res.best_loss < 0.5 * squared_loss(r, X, y)


# ------------------------------------------------------------------ experiment helpers


def test_oracle_cdf_agrees_with_model():
    m = rad.build_density(2)
    grid, cdf = oracle_radial_cdf(2, m.r_trunc)
    # the oracle grid has half the step, so every other node is shared
    np.testing.assert_allclose(grid[::2], m.grid, atol=1e-9)
    assert np.max(np.abs(cdf[::2] - m.cdf)) < 1e-6


def test_dichotomy_verdicts():
    class R:
        def __init__(self, a):
            self.after_norm = a
    camp = {0: [(0.3, R(1e-14)), (0.3 + 0.5j, R(0.1))],
            1: [(0.3, R(1e-14)), (0.3 + 0.5j, R(1e-9))],
            2: [(0.3, R(1e-3)), (0.3 + 0.5j, R(1.0))]}
    assert dichotomy_verdicts(camp, 1e-6, 1e-5, 100) == {0: True, 1: False, 2: False}


# ------------------------------------------------------------------ CLI


def small_config(tmp_path, kind, **extra):
    doc = default_config(kind).to_dict()
    doc.update(out=str(tmp_path / "out"))
    doc.update(extra)
    path = tmp_path / f"{kind}.json"
    path.write_text(json.dumps(doc))
    return path


def test_cli_probe_passes(tmp_path, capsys):
    assert cli.main(["probe", "--config", str(small_config(tmp_path, "probe"))]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_cli_usage_errors(tmp_path, capsys):
    assert cli.main([]) == 2
    assert cli.main(["nonsense"]) == 2
    assert cli.main(["probe", "--config", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["flow", "--config", str(small_config(tmp_path, "probe"))]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "probe", "d": 99}))
    assert cli.main(["probe", "--config", str(bad)]) == 2


def test_cli_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0


def test_cli_bad_thread_setting(tmp_path, monkeypatch):
    monkeypatch.setenv("CRNET_THREADS", "zero")
    cfg = small_config(tmp_path, "symmetry", seeds=[0], widths=[1])
    assert cli.main(["symmetry", "--config", str(cfg)]) == 2


def test_cli_check_failure_exit_code(tmp_path):
    # an impossible tolerance must surface as a check failure
    cfg = small_config(tmp_path, "probe", tolerances={"gradient_rel": 1e-30})
    assert cli.main(["probe", "--config", str(cfg)]) == 1


def test_cli_seed_and_out_override(tmp_path):
    cfg = small_config(tmp_path, "flow", steps=5)
    out = tmp_path / "elsewhere"
    cli.main(["flow", "--config", str(cfg), "--seed", "7", "--out", str(out)])
    assert (out / "flow" / "growth.csv").exists()
    assert (out / "flow" / "flow.png").exists()


def _csvs(root):
    found = {}
    for dirpath, _, names in os.walk(root):
        for n in names:
            if n.endswith(".csv"):
                p = os.path.join(dirpath, n)
                with open(p, "rb") as fh:
                    found[os.path.relpath(p, root)] = fh.read()
    return found


@pytest.mark.parametrize("kind, extra", [
    ("flow", {"steps": 10}),
    ("symmetry", {"seeds": [0, 1], "widths": [1, 2]}),
    ("density", {"samples": 20000, "eval_samples": 5000, "params": {"n_values": [2], "dump_samples": 10}}),
    ("construct", {"eval_samples": 5000}),
    ("separation", {"seeds": [0, 1], "budgets": [49, 97], "samples": 512, "eval_samples": 2000,
                    "steps": 20}),
])
def test_runs_are_byte_identical(kind, extra, tmp_path):
    outs = []
    for k in range(2):
        cfg = ExperimentConfig.from_dict({**default_config(kind).to_dict(), **extra,
                                          "out": str(tmp_path / f"run{k}")})
        rep = run(cfg)
        assert rep.checks.rows
        outs.append(_csvs(tmp_path / f"run{k}"))
    assert outs[0].keys() == outs[1].keys() and outs[0]
    for name in outs[0]:
        assert outs[0][name] == outs[1][name], name


def test_separation_outputs(tmp_path):
    cfg = ExperimentConfig.from_dict({**default_config("separation").to_dict(), "seeds": [0],
                                      "budgets": [49], "samples": 256, "eval_samples": 1000,
                                      "steps": 5, "out": str(tmp_path)})
    rep = run(cfg)
    res = rep.summary["result"]
    assert all(r[5] >= 0 for r in res.rows)
    assert {r[2] for r in res.rows} == {"complex", "real"}
    assert len({r[4] for r in res.rows}) == 1
    schema, header, _ = read_csv(tmp_path / "separation" / "plot_data.csv")
    assert header == ["family", "x", "y", "stderr"]
    assert (tmp_path / "separation" / "separation.png").exists()


def test_zero_target_control(tmp_path):
    # N = 0 gives the zero target; zero output weights are then a fixed point
    cfg = ExperimentConfig.from_dict({**default_config("separation").to_dict(), "N": 0, "seeds": [0],
                                      "budgets": [49], "samples": 256, "eval_samples": 1000,
                                      "steps": 20, "out": str(tmp_path), "params": {"out_scale": 0.0}})
    res = run(cfg).summary["result"]
    assert res.baseline == 0.0
    assert all(r[5] == 0.0 for r in res.rows)
