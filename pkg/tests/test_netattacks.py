import numpy as np
import pytest

from conftest import BASE_CFG, gaussian_nodes
from dsvmsim.engine import EngineConfig, predict_labels, train
from dsvmsim.metrics import local_risk
from dsvmsim import netattacks
from dsvmsim.netattacks import (
    NetAttackError,
    NetAttackSpec,
    NetworkInjector,
    model_attack,
    train_with_netattack,
    uniform_noise,
)
from dsvmsim.topology import build_complete


def test_spec_validation(net6):
    with pytest.raises(NetAttackError):
        NetAttackSpec("teleport", (0,), 1.0)
    with pytest.raises(NetAttackError):
        NetAttackSpec("capture", (0,), -1.0)
    with pytest.raises(NetAttackError):
        NetworkInjector(net6, NetAttackSpec("capture", (9,), 1.0))
    with pytest.raises(NetAttackError):
        NetworkInjector(net6, NetAttackSpec("mitm", ((0, 9),), 1.0))


def test_noise_is_pure_function_of_key():
    a = uniform_noise(5, (0, 1, 7), 3, 1.0)
    b = uniform_noise(5, (0, 1, 7), 3, 1.0)
    c = uniform_noise(5, (0, 1, 8), 3, 1.0)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all((a >= 0) & (a < 1.0))


def test_noise_positive_bias():
    draws = uniform_noise(0, (1, 2, 3), 10000, 0.5)
    assert 0.22 < draws.mean() < 0.28


def test_capture_r0_bitwise_identity(net6, nodes6, baseline6):
    res = train_with_netattack(net6, nodes6, BASE_CFG,
                               NetAttackSpec("capture", (0, 3), 0.0, seed=1),
                               record_state=True)
    assert res.iterations == baseline6.iterations
    for a, b in zip(res.r_history, baseline6.r_history):
        assert np.array_equal(a, b)


def test_mitm_r0_bitwise_identity(net6, nodes6, baseline6):
    res = train_with_netattack(net6, nodes6, BASE_CFG,
                               NetAttackSpec("mitm", ((0, 1), (2, 4)), 0.0, seed=1),
                               record_state=True)
    for a, b in zip(res.r_history, baseline6.r_history):
        assert np.array_equal(a, b)


def test_sybil_empty_targets_bitwise_identity(net6, nodes6, baseline6):
    res = train_with_netattack(net6, nodes6, BASE_CFG,
                               NetAttackSpec("sybil", (), 0.01, seed=1),
                               record_state=True)
    for a, b in zip(res.r_history, baseline6.r_history):
        assert np.array_equal(a, b)


def test_sybil_r0_echo_preserves_fixed_point(net6, nodes6, baseline6):
    # with the extra link counted in U_v the echo is a self-consistent
    # consensus term: same fixed point, different trajectory
    res = train_with_netattack(net6, nodes6, BASE_CFG,
                               NetAttackSpec("sybil", (0, 1), 0.0, seed=1,
                                             sybil_inflates_degree=True))
    assert res.converged
    assert np.max(np.abs(res.r - baseline6.r)) < 5e-4


def test_capture_all_nodes_large_noise_fails(net6, nodes6):
    res = train_with_netattack(net6, nodes6, EngineConfig(max_iters=400, consensus_tol=1e-4),
                               NetAttackSpec("capture", tuple(range(6)), 1.0, seed=3))
    tail = np.mean([row.global_risk for row in res.trace[-10:]])
    assert 0.4 <= tail <= 0.6


def test_capture_determinism(net6, nodes6):
    spec = NetAttackSpec("capture", (0, 1), 1.0, seed=9)
    cfg = EngineConfig(max_iters=50, consensus_tol=0)
    a = train_with_netattack(net6, nodes6, cfg, spec, record_state=True)
    b = train_with_netattack(net6, nodes6, cfg, spec, record_state=True)
    for x, y in zip(a.r_history, b.r_history):
        assert np.array_equal(x, y)


def test_sybil_divergence_flagged():
    net = build_complete(4)
    nodes = gaussian_nodes(net, seed=0)
    res = train_with_netattack(net, nodes, EngineConfig(max_iters=3000, consensus_tol=0),
                               NetAttackSpec("sybil", (0, 1, 2, 3), 0.01, seed=0))
    assert res.diverged
    assert not res.converged
    tail = np.mean([row.global_risk for row in res.trace[-10:]])
    assert 0.4 <= tail <= 0.6


def test_mitm_noise_independent_per_direction(net6):
    spec = NetAttackSpec("mitm", ((0, 1),), 0.5, seed=4)
    inj = NetworkInjector(net6, spec)
    msg = np.zeros(3)
    fwd = inj.tamper(0, 1, msg, 7)
    bwd = inj.tamper(1, 0, msg, 7)
    assert not np.array_equal(fwd, bwd)
    assert np.array_equal(fwd, inj.tamper(0, 1, msg, 7))
    untouched = inj.tamper(2, 3, msg, 7)
    assert untouched is msg


# -- testing attacks -------------------------------------------------------------

def test_negate_r_flips_local_risk_exactly(net6, nodes6, baseline6):
    v = 2
    test_aug = np.hstack([nodes6[v].test.features,
                          np.ones((nodes6[v].test.n_samples, 1))])
    y = nodes6[v].test.labels
    base_risk = local_risk(y, predict_labels(baseline6.r[v], test_aug))
    negated = netattacks.testing_attack("negate-r", model=baseline6.r[v])
    attacked_risk = local_risk(y, predict_labels(negated, test_aug))
    assert attacked_risk == 1.0 - base_risk


def test_negate_r_global_shift_is_reweighted_average(net6, nodes6, baseline6):
    # one attacked node out of six, equal test sizes: global rises by (1-2*R_v)/6
    risks = []
    for v in range(6):
        test_aug = np.hstack([nodes6[v].test.features,
                              np.ones((nodes6[v].test.n_samples, 1))])
        risks.append(local_risk(nodes6[v].test.labels,
                                predict_labels(baseline6.r[v], test_aug)))
    attacked = list(risks)
    attacked[0] = 1.0 - risks[0]
    assert np.mean(attacked) == pytest.approx(np.mean(risks) + (1 - 2 * risks[0]) / 6,
                                              abs=1e-12)


def test_flip_label_testing_attack():
    y = np.array([1.0, -1.0, 1.0])
    assert np.array_equal(netattacks.testing_attack("flip-label", labels=y), -y)


def test_shift_x_zero_delta_unchanged(nodes6):
    x = nodes6[0].test.features
    shifted = netattacks.testing_attack("shift-x", features=x, delta=np.zeros(2))
    assert np.array_equal(shifted, x)


def test_testing_attack_validation():
    with pytest.raises(NetAttackError):
        netattacks.testing_attack("negate-r")
    with pytest.raises(NetAttackError):
        netattacks.testing_attack("unknown", model=np.zeros(3))


# -- model attacks ---------------------------------------------------------------

def test_model_attack_zero_cl_everywhere(net6, nodes6):
    c_l = model_attack(range(6), 0.0, 1.0, 6)
    res = train(net6, nodes6, EngineConfig(max_iters=50), c_l_per_node=c_l)
    assert np.max(np.abs(res.r)) == 0.0
    # all-zero model predicts +1 everywhere: risk equals the -1 class share
    neg_share = np.mean(np.concatenate([nd.test.labels for nd in nodes6]) == -1.0)
    assert res.final_global_risk == pytest.approx(neg_share)


def test_model_attack_identity_when_unchanged(net6, nodes6, baseline6):
    c_l = model_attack((), 0.0, 1.0, 6)
    res = train(net6, nodes6, BASE_CFG, c_l_per_node=c_l, record_state=True)
    for a, b in zip(res.r_history, baseline6.r_history):
        assert np.array_equal(a, b)


def test_model_attack_single_node_degrades(net6):
    # losing one node's data degrades the consensus model on average
    diffs = []
    for seed in range(10):
        nodes = gaussian_nodes(net6, seed=seed)
        cfg = EngineConfig(max_iters=150)
        clean = train(net6, nodes, cfg)
        attacked = train(net6, nodes, cfg,
                         c_l_per_node=model_attack((0,), 0.0, 1.0, 6))
        diffs.append(attacked.final_global_risk - clean.final_global_risk)
    assert np.mean(diffs) > 0


def test_model_attack_validation():
    with pytest.raises(NetAttackError):
        model_attack((0,), -1.0, 1.0, 6)
    with pytest.raises(NetAttackError):
        model_attack((7,), 0.0, 1.0, 6)
