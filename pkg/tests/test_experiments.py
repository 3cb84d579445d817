import json

import numpy as np
import pytest

from dsvmsim.experiments import (
    ConfigError,
    ExperimentConfig,
    emit,
    resolve_compromised,
    result_rows,
    run_cell,
    run_experiment,
)
from dsvmsim.topology import build_from_edge_list

NET3 = build_from_edge_list(6, [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 2)])

FAST = {
    "name": "fast",
    "topology": {"kind": "complete", "n": 4},
    "data": {"kind": "gaussian", "n_train": 20, "n_test": 50},
    "engine": {"max_iters": 40, "consensus_tol": 1e-4},
    "seeds": [0, 1],
}


def test_config_roundtrip():
    cfg = ExperimentConfig.from_dict(FAST)
    assert ExperimentConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_config_validation_errors(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**FAST, "seeds": []})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**FAST, "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**FAST, "data": {"kind": "csv"}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**FAST, "data": {"kind": "csv", "path": "/nope.csv"}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**FAST, "attack": {"kind": "zap"}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**FAST, "engine": {"bogus": 2}})


def test_degree_rank_selection():
    assert resolve_compromised({"compromised": {"select": "top-degree", "count": 3}},
                               NET3) == (0, 1, 2)
    assert resolve_compromised({"compromised": {"select": "bottom-degree", "count": 2}},
                               NET3) == (3, 4)
    assert resolve_compromised({"compromised": [5, 1]}, NET3) == (5, 1)


def test_run_cell_baseline_shape():
    cfg = ExperimentConfig.from_dict(FAST)
    cell = run_cell(cfg, seed=0)
    assert len(cell["per_node"]) == 4
    assert 0.0 <= cell["global_risk"] <= 1.0
    assert cell["seed"] == 0
    assert len(cell["trace"]) == cell["iterations"]


def test_run_experiment_summary_matches_cells():
    cfg = ExperimentConfig.from_dict(FAST)
    res = run_experiment(cfg)
    risks = [c["global_risk"] for c in res.cells]
    assert res.mean_risk == pytest.approx(np.mean(risks))
    assert res.std_risk == pytest.approx(np.std(risks))


def test_rows_include_summary_and_nodes():
    cfg = ExperimentConfig.from_dict(FAST)
    res = run_experiment(cfg)
    rows = result_rows(res)
    # 2 seeds * (4 nodes + global) + mean + std
    assert len(rows) == 2 * 5 + 2
    assert rows[-2]["seed"] == "mean"
    assert rows[-1]["seed"] == "std"
    global_rows = [r for r in rows if r["node"] == "global" and r["seed"] in (0, 1)]
    assert len(global_rows) == 2


def test_emit_csv_reparses_to_printed_precision(tmp_path):
    cfg = ExperimentConfig.from_dict(FAST)
    res = run_experiment(cfg)
    paths = emit(res, tmp_path, trace=True)
    lines = open(paths["csv"]).read().splitlines()
    header = lines[0].split(",")
    assert header[0] == "experiment_id"
    row = dict(zip(header, lines[1].split(",")))
    assert float(row["risk"]) == pytest.approx(res.cells[0]["per_node"][0], rel=1e-5)
    assert (tmp_path / "trace.csv").exists()


def test_emit_csv_attack_params_stay_one_field(tmp_path):
    raw = {**FAST, "attack": {"kind": "label", "compromised": [0, 1], "q": 10, "c_a": 0.01}}
    res = run_experiment(ExperimentConfig.from_dict(raw))
    paths = emit(res, tmp_path)
    lines = open(paths["csv"]).read().splitlines()
    width = len(lines[0].split(","))
    assert all(len(line.split(",")) == width for line in lines[1:])
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert row["attack_params"] == "c_a=0.01;q=10"


def test_emit_json_roundtrip(tmp_path):
    cfg = ExperimentConfig.from_dict(FAST)
    res = run_experiment(cfg)
    paths = emit(res, tmp_path)
    payload = json.loads(open(paths["json"]).read())
    assert payload[0]["summary"]["mean_risk"] == res.mean_risk
    assert payload[0]["cells"][0]["global_risk"] == res.cells[0]["global_risk"]


def test_emit_deterministic_bytes(tmp_path):
    cfg = ExperimentConfig.from_dict(FAST)
    a = emit(run_experiment(cfg), tmp_path / "a", trace=True)
    b = emit(run_experiment(cfg), tmp_path / "b", trace=True)
    for key in a:
        assert open(a[key], "rb").read() == open(b[key], "rb").read()


def test_workers_do_not_change_results(tmp_path):
    cfg = ExperimentConfig.from_dict({**FAST, "seeds": [0, 1, 2]})
    serial = emit(run_experiment(cfg, workers=1), tmp_path / "w1", trace=True)
    parallel = emit(run_experiment(cfg, workers=3), tmp_path / "w3", trace=True)
    for key in serial:
        assert open(serial[key], "rb").read() == open(parallel[key], "rb").read()


def test_label_game_cell():
    raw = {**FAST, "attack": {"kind": "label", "compromised": [0, 1], "q": 10, "c_a": 0.01}}
    cell = run_cell(ExperimentConfig.from_dict(raw), seed=0)
    assert 0.0 <= cell["global_risk"] <= 1.0


def test_testing_attack_cell_negate_r():
    # converging config so the clean equilibrium is the final model's risk
    base = {**FAST, "engine": {"max_iters": 300, "consensus_tol": 5e-3}}
    raw = {**base, "attack": {"kind": "testing", "variant": "negate-r", "targets": [0]}}
    clean = run_cell(ExperimentConfig.from_dict(base), seed=0)
    attacked = run_cell(ExperimentConfig.from_dict(raw), seed=0)
    assert clean["converged"]
    assert attacked["per_node"][0] == pytest.approx(1.0 - clean["per_node"][0], abs=1e-12)
    for v in (1, 2, 3):
        assert attacked["per_node"][v] == pytest.approx(clean["per_node"][v], abs=1e-12)


def test_model_attack_cell():
    raw = {**FAST, "attack": {"kind": "model", "targets": [0, 1, 2, 3], "c_l": 0.0}}
    cell = run_cell(ExperimentConfig.from_dict(raw), seed=0)
    assert 0.3 <= cell["global_risk"] <= 0.7  # near the class prior


def test_netattack_cell_r0_matches_baseline():
    raw = {**FAST, "attack": {"kind": "capture", "targets": [0], "noise": 0.0}}
    clean = run_cell(ExperimentConfig.from_dict(FAST), seed=0)
    attacked = run_cell(ExperimentConfig.from_dict(raw), seed=0)
    assert attacked["global_risk"] == clean["global_risk"]


def test_per_seed_errors_recorded_and_run_continues():
    # out-of-range compromised node fails inside each seed cell; the
    # experiment records the error per seed instead of aborting
    raw = {**FAST, "attack": {"kind": "label", "compromised": [99], "q": 5, "c_a": 0.01}}
    res = run_experiment(ExperimentConfig.from_dict(raw))
    assert len(res.cells) == 2
    assert set(res.errors) == {0, 1}
    assert all("out of range" in msg for msg in res.errors.values())
    assert np.isnan(res.mean_risk)
    rows = result_rows(res)
    assert any(r["node"] == "global" for r in rows)


def test_relabeling_invariance():
    perm = [3, 5, 0, 1, 2, 4]  # image of each node id
    edges = [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 2)]
    permuted_edges = [(perm[u], perm[v]) for u, v in edges]

    from conftest import gaussian_nodes
    from dsvmsim.engine import EngineConfig, train
    from dsvmsim.topology import build_from_edge_list

    net_a = build_from_edge_list(6, edges)
    nodes = gaussian_nodes(net_a, seed=4, n_train=20, n_test=100)
    net_b = build_from_edge_list(6, permuted_edges)
    nodes_b = [None] * 6
    for v in range(6):
        nodes_b[perm[v]] = nodes[v]
    cfg = EngineConfig(max_iters=80, consensus_tol=0)
    res_a = train(net_a, nodes, cfg)
    res_b = train(net_b, nodes_b, cfg)
    for v in range(6):
        assert res_a.trace[-1].local_risks[v] == res_b.trace[-1].local_risks[perm[v]]
    assert res_a.trace[-1].global_risk == res_b.trace[-1].global_risk
