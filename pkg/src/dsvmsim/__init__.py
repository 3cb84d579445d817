"""Distributed SVM training over networks with attack simulation.

Consensus-ADMM linear SVM across arbitrary connected topologies, zero-sum
training games against label-flipping and data-poisoning attackers, network
attack injection (node capture, Sybil, MITM), and risk experiment tooling.
"""

from .data import ExpandedNodeData, LabeledSet, NodeData, expand, gen_gaussian, load_csv, partition
from .engine import EngineConfig, NodeState, TrainResult, centralized_svm, local_round, predict, \
    train, u_inverse
from .games import DataAttackSpec, GameResult, LabelAttackSpec, run_game
from .kernels import BoxQP, KnapsackLP, solve_box_qp, solve_flip_lp, solve_poison_step
from .metrics import RiskReport, global_risk, local_risk
from .netattacks import NetAttackSpec, model_attack, testing_attack, train_with_netattack
from .topology import Network, build_complete, build_from_edge_list, build_regular, \
    load_edge_list, network_degree, normalized_degree

__version__ = "0.1.0"

__all__ = [
    "BoxQP", "DataAttackSpec", "EngineConfig", "ExpandedNodeData", "GameResult",
    "KnapsackLP", "LabelAttackSpec", "LabeledSet", "NetAttackSpec", "Network",
    "NodeData", "NodeState", "RiskReport", "TrainResult",
    "build_complete", "build_from_edge_list", "build_regular", "centralized_svm",
    "expand", "gen_gaussian", "global_risk", "load_csv", "load_edge_list",
    "local_risk", "local_round", "model_attack", "network_degree",
    "normalized_degree", "partition", "predict", "run_game", "solve_box_qp",
    "solve_flip_lp", "solve_poison_step", "testing_attack", "train",
    "train_with_netattack", "u_inverse",
]
