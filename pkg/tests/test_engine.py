import numpy as np
import pytest

from conftest import BASE_CFG, gaussian_nodes, pooled
from dsvmsim.data import LabeledSet, NodeData, augment, gen_gaussian
from dsvmsim.engine import (
    DegenerateDataError,
    EngineConfig,
    EngineError,
    NodeState,
    centralized_svm,
    local_round,
    predict,
    predict_labels,
    train,
    u_inverse,
)
from dsvmsim.metrics import local_risk
from dsvmsim.topology import Network, build_complete


def test_u_inverse_values():
    assert np.allclose(u_inverse(1.0, 2, 2), [1 / 5, 1 / 5, 1 / 4])
    assert np.allclose(u_inverse(1.0, 5, 2), [1 / 11, 1 / 11, 1 / 10])


def test_u_inverse_rejects_isolated_node():
    with pytest.raises(EngineError):
        u_inverse(1.0, 0, 2)


def test_predict_examples():
    assert predict(np.array([1.0, 0.0, 0.0]), np.array([2.0, 5.0])) == 1.0
    assert predict(np.array([1.0, 1.0, -3.0]), np.array([1.0, 1.0])) == -1.0
    assert predict(np.array([1.0, -1.0, 0.0]), np.array([1.0, 1.0])) == 1.0  # g == 0
    with pytest.raises(EngineError):
        predict(np.array([1.0, 0.0, 0.0]), np.array([2.0]))


def test_local_round_fixed_point(net6, nodes6, baseline6):
    assert baseline6.converged
    v = 0
    state = baseline6.states[v]
    after = local_round(state, nodes6[v], EngineConfig(), net6.node_count)
    assert np.max(np.abs(after.r - state.r)) < 5e-4


def test_two_nodes_identical_data_symmetric():
    net = build_complete(2)
    train_set, test_set = gen_gaussian(20, 50, seed=2)
    nd = NodeData(train=train_set, test=test_set)
    res = train(net, [nd, nd], EngineConfig(max_iters=50, consensus_tol=0), record_state=True)
    for snapshot in res.r_history:
        assert np.array_equal(snapshot[0], snapshot[1])


def test_train_risk_close_to_centralized(net6, nodes6, baseline6):
    r_central = centralized_svm(pooled(nodes6, "train"), 1.0)
    test = pooled(nodes6, "test")
    central_risk = local_risk(test.labels, predict_labels(r_central, augment(test.features)))
    assert abs(baseline6.final_global_risk - central_risk) < 0.02


def test_single_node_network_equals_centralized():
    net1 = Network(node_count=1, edges=(), neighbors=((),))
    train_set, test_set = gen_gaussian(60, 200, seed=9)
    nd = NodeData(train=train_set, test=test_set)
    res = train(net1, [nd], EngineConfig())
    r_direct = centralized_svm(train_set, 1.0)
    assert np.array_equal(res.r[0], r_direct)
    assert res.converged


def test_zero_iterations_returns_initial_state(net6, nodes6):
    res = train(net6, nodes6, EngineConfig(max_iters=0))
    assert res.iterations == 0
    assert res.trace == []
    assert not res.converged
    assert np.array_equal(res.r, np.zeros_like(res.r))


def test_lambda_box_feasible_every_round(net6, nodes6):
    cfg = EngineConfig(max_iters=30, consensus_tol=0)
    res = train(net6, nodes6, cfg)
    cap = net6.node_count * cfg.c_l
    for state in res.states:
        assert np.all(state.lam >= 0.0)
        assert np.all(state.lam <= cap + 1e-12)


def test_separable_data_converges(net6):
    nodes = gaussian_nodes(net6, seed=1, separation=8.0)
    res = train(net6, nodes, EngineConfig())
    assert res.converged
    assert res.trace[-1].consensus_residual < 1e-4
    assert res.final_global_risk < 0.01


def test_network_size_invariance_of_fixed_point():
    # identical per-node data, clearly separable: converged r agrees across V
    train_set, test_set = gen_gaussian(15, 30, mean_pos=(0, 0), mean_neg=(6, 6), seed=4)
    nd = NodeData(train=train_set, test=test_set)
    finals = []
    for v in range(2, 7):
        net = build_complete(v)
        res = train(net, [nd] * v, EngineConfig(max_iters=2000, consensus_tol=1e-9))
        assert res.converged
        finals.append(res.r[0])
    for r in finals[1:]:
        assert np.max(np.abs(r - finals[0])) < 1e-3


def test_round_determinism(net6, nodes6, baseline6):
    again = train(net6, nodes6, BASE_CFG, record_state=True)
    assert again.iterations == baseline6.iterations
    assert np.array_equal(again.r, baseline6.r)
    for a, b in zip(again.r_history, baseline6.r_history):
        assert np.array_equal(a, b)


def test_consensus_residual_tail_below_start(net6, nodes6, baseline6):
    # residual trends downward on a trailing window
    residuals = [row.consensus_residual for row in baseline6.trace]
    assert np.mean(residuals[-20:]) < np.mean(residuals[:20])


def test_engine_config_validation():
    with pytest.raises(EngineError):
        EngineConfig(c_l=0.0)
    with pytest.raises(EngineError):
        EngineConfig(eta=-1.0)


def test_train_rejects_mismatched_data(net6, nodes6):
    with pytest.raises(EngineError):
        train(net6, nodes6[:-1], EngineConfig())
    with pytest.raises(EngineError):
        train(net6, nodes6, EngineConfig(p=7))


# -- centralized baseline -------------------------------------------------------

def test_centralized_symmetric_pair():
    ds = LabeledSet(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]))
    r = centralized_svm(ds, 100.0)
    assert r[0] > 0
    assert abs(r[1]) < 1e-6


def test_centralized_close_to_bayes_risk():
    train_set, test_set = gen_gaussian(120, 30000, seed=3)
    r = centralized_svm(train_set, 1.0)
    risk = local_risk(test_set.labels, predict_labels(r, augment(test_set.features)))
    # Bayes risk of two unit Gaussians at distance sqrt(2): Phi(-sqrt(2)/2) ~ 0.2398
    assert abs(risk - 0.2398) < 0.04


def test_centralized_deterministic():
    train_set, _ = gen_gaussian(80, 1, seed=5)
    assert np.array_equal(centralized_svm(train_set, 1.0), centralized_svm(train_set, 1.0))


def test_centralized_single_class_rejected():
    ds = LabeledSet(np.array([[0.0], [1.0]]), np.array([1.0, 1.0]))
    with pytest.raises(DegenerateDataError):
        centralized_svm(ds, 1.0)
