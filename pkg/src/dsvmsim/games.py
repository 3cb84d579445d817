"""Best-response dynamics for the label-flipping and data-poisoning games.

Each game iteration interleaves one attacker step per compromised node
(computed from the current decision vectors) with one learner ADMM round
for every node. The label attacker solves a fractional knapsack over the
per-sample hinge gain of flipping; the learner then trains on the expanded
data with the dual box scaled by the flip indicator. The data attacker
solves the soft-threshold/ball step; the learner sees it as a shift of its
f vector. Nodes outside the compromised set run the plain trainer path,
so no-attack games reproduce plain training bitwise.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import NodeData, expand
from .engine import ConsensusTrainer, EngineConfig, NodeState, TrainingDiverged, \
    build_node_problem, _node_dual_primal, u_inverse
from .kernels import KnapsackLP, solve_flip_lp, solve_poison_step, poison_objective
from .topology import Network


class GameError(ValueError):
    pass


STATIONARY_TOL = 1e-6


@dataclass
class LabelAttackSpec:
    """Label-flip game parameters: compromised set, per-node budget Q, cost C_a.

    Flip costs follow the unit-cost convention, so Q bounds the number of
    flipped labels per compromised node.
    """

    compromised: tuple
    flip_budget: float
    attacker_cost: float

    def __post_init__(self):
        self.compromised = tuple(sorted(set(int(v) for v in self.compromised)))
        if self.flip_budget < 0:
            raise GameError("flip budget Q must be >= 0")
        if self.attacker_cost <= 0:
            raise GameError("attacker cost C_a must be > 0")


@dataclass
class DataAttackSpec:
    """Data-poison game parameters: compromised set, squared-norm budget, cost C_a."""

    compromised: tuple
    shift_budget_sq: float
    attacker_cost: float

    def __post_init__(self):
        self.compromised = tuple(sorted(set(int(v) for v in self.compromised)))
        if self.shift_budget_sq < 0:
            raise GameError("shift budget C_delta must be >= 0")
        if self.attacker_cost <= 0:
            raise GameError("attacker cost C_a must be > 0")


def no_flip_theta(n_samples: int) -> np.ndarray:
    """The keep-everything indicator [1...1, 0...0]."""
    return np.concatenate([np.ones(n_samples), np.zeros(n_samples)])


def flip_count(theta: np.ndarray) -> int:
    """Number of flipped labels, rounding fractional entries at 0.5 (display only)."""
    n = theta.shape[0] // 2
    return int(np.sum(theta[n:] >= 0.5))


def attacker_label_step(r_v: np.ndarray, expanded, v_count: int, va_count: int,
                        c_l: float, spec: LabelAttackSpec) -> np.ndarray:
    """Best-response flip indicator for one compromised node.

    Computes the hinge vector over the expanded rows, scores each sample by
    the hinge gain of flipping minus the attacker's cost, and solves the
    unit-cost fractional knapsack under budget Q.
    """
    hinge = np.maximum(0.0, 1.0 - expanded.y_hat * (expanded.x_hat @ r_v))
    n = hinge.shape[0] // 2
    gains = v_count * c_l * (hinge[n:] - hinge[:n]) - va_count * spec.attacker_cost
    phi = solve_flip_lp(KnapsackLP(gains=gains, costs=np.ones(n), budget=spec.flip_budget))
    return np.concatenate([1.0 - phi, phi])


def attacker_data_step(r_v: np.ndarray, va_count: int, c_l: float,
                       spec: DataAttackSpec) -> np.ndarray:
    """Best-response feature shift for one compromised node."""
    direction = va_count * c_l * r_v[:-1]
    return solve_poison_step(direction, va_count * spec.attacker_cost, spec.shift_budget_sq)


def learner_label_step(state: NodeState, node: NodeData, cfg: EngineConfig,
                       v_count: int, theta: np.ndarray) -> NodeState:
    """One node round on the expanded data with the theta-scaled dual box.

    With theta = no-flip this equals the plain round on the original data:
    the flipped copies get zero-capacity duals.
    """
    exp = expand(node)
    keys = sorted(state.inbox)
    deg = len(keys)
    p = node.augmented.shape[1] - 1
    u_inv = u_inverse(cfg.eta, deg, p)
    msg_sum = np.zeros(p + 1)
    for k in keys:
        msg_sum += state.inbox[k]
    f = 2.0 * state.alpha - cfg.eta * (deg * state.r + msg_sum)
    prob = build_node_problem(exp.x_hat, exp.y_hat, u_inv, v_count * cfg.c_l * theta)
    warm = state.lam if state.lam.shape == theta.shape else None
    res, r_v = _node_dual_primal(prob, f, warm, cfg)
    return NodeState(r=r_v, alpha=state.alpha.copy(), lam=res.lam, inbox=dict(state.inbox))


def learner_data_step(state: NodeState, node: NodeData, cfg: EngineConfig,
                      v_count: int, va_count: int, delta: np.ndarray) -> NodeState:
    """One node round on the original data with f shifted by V_a*C_l*delta.

    ``delta`` is zero-padded on the bias coordinate.
    """
    keys = sorted(state.inbox)
    deg = len(keys)
    p = node.augmented.shape[1] - 1
    u_inv = u_inverse(cfg.eta, deg, p)
    msg_sum = np.zeros(p + 1)
    for k in keys:
        msg_sum += state.inbox[k]
    f = 2.0 * state.alpha - cfg.eta * (deg * state.r + msg_sum)
    if delta.any():
        f = f + va_count * cfg.c_l * np.concatenate([delta, [0.0]])
    prob = build_node_problem(node.augmented, node.labels, u_inv,
                              np.full(node.n_train, v_count * cfg.c_l))
    warm = state.lam if state.lam.shape == (node.n_train,) else None
    res, r_v = _node_dual_primal(prob, f, warm, cfg)
    return NodeState(r=r_v, alpha=state.alpha.copy(), lam=res.lam, inbox=dict(state.inbox))


@dataclass
class GameResult:
    r: np.ndarray
    converged: bool
    attacker_stationary: bool
    iterations: int
    trace: list
    attacker_objective: list
    theta: dict = field(default_factory=dict)
    delta: dict = field(default_factory=dict)
    qp_unconverged: int = 0
    diverged: bool = False
    r_history: list = None

    @property
    def final_global_risk(self) -> float:
        return self.trace[-1].global_risk if self.trace else float("nan")


def run_game(net: Network, node_data, cfg: EngineConfig, spec,
             learner_rounds_per_attack: int = 1, record_state: bool = False) -> GameResult:
    """Drive attacker/learner best-response dynamics to joint stationarity.

    Stops when the learner satisfies the plain consensus stopping rule and
    every attacker decision moved less than the stationarity tolerance
    between consecutive iterations; otherwise runs to ``cfg.max_iters`` and
    returns a flagged (non-converged) result.
    """
    v_count = net.node_count
    compromised = tuple(v for v in getattr(spec, "compromised", ()))
    if any(not 0 <= v < v_count for v in compromised):
        raise GameError(f"compromised nodes out of range for V={v_count}")
    is_label = isinstance(spec, LabelAttackSpec)
    if not is_label and not isinstance(spec, DataAttackSpec):
        raise GameError(f"unsupported attack spec {type(spec).__name__}")
    va_count = len(compromised)

    trainer = ConsensusTrainer(net, node_data, cfg)
    expanded = {v: expand(node_data[v]) for v in compromised}
    exp_problems = {}
    if is_label:
        for v in compromised:
            exp = expanded[v]
            u_inv = trainer.base_problems[v].u_inv
            exp_problems[v] = build_node_problem(
                exp.x_hat, exp.y_hat, u_inv,
                v_count * cfg.c_l * no_flip_theta(node_data[v].n_train))

    prev = {}
    theta = {}
    delta = {}
    for v in compromised:
        if is_label:
            prev[v] = no_flip_theta(node_data[v].n_train)
        else:
            prev[v] = np.zeros(trainer.p)

    trace = []
    attacker_objective = []
    history = [] if record_state else None
    converged = False
    diverged = False
    stationary = va_count == 0

    for _ in range(cfg.max_iters):
        stationary = True
        obj = 0.0
        for v in compromised:
            if is_label:
                exp = expanded[v]
                th = attacker_label_step(trainer.r[v], exp, v_count, va_count, cfg.c_l, spec)
                theta[v] = th
                hinge = np.maximum(0.0, 1.0 - exp.y_hat * (exp.x_hat @ trainer.r[v]))
                n = node_data[v].n_train
                obj += float(v_count * cfg.c_l * th @ hinge
                             - va_count * spec.attacker_cost * th[n:].sum())
                if np.max(np.abs(th - prev[v])) > STATIONARY_TOL:
                    stationary = False
                prev[v] = th
                if np.array_equal(th, no_flip_theta(n)):
                    trainer.reset_problem(v)
                else:
                    prob = exp_problems[v]
                    prob.upper = v_count * cfg.c_l * th
                    if trainer.lam[v].shape != th.shape:
                        warm = np.concatenate([trainer.lam[v], np.zeros(n)])
                    else:
                        warm = trainer.lam[v]
                    trainer.set_problem(v, prob, warm)
            else:
                dl = attacker_data_step(trainer.r[v], va_count, cfg.c_l, spec)
                delta[v] = dl
                obj += poison_objective(dl, va_count * cfg.c_l * trainer.r[v][:-1],
                                        va_count * spec.attacker_cost)
                if np.max(np.abs(dl - prev[v])) > STATIONARY_TOL:
                    stationary = False
                prev[v] = dl
                if dl.any():
                    trainer.set_f_shift(v, va_count * cfg.c_l * np.concatenate([dl, [0.0]]))
                else:
                    trainer.set_f_shift(v, None)

        for _k in range(learner_rounds_per_attack):
            try:
                row = trainer.run_round()
            except TrainingDiverged:
                diverged = True
                break
            trace.append(row)
            attacker_objective.append(obj)
            if record_state:
                history.append(np.vstack(trainer.r))

        if diverged:
            break
        if (row.consensus_residual < cfg.consensus_tol
                and row.step_residual < cfg.consensus_tol and stationary):
            converged = True
            break

    return GameResult(r=np.vstack(trainer.r) if trace else np.zeros((v_count, trainer.p + 1)),
                      converged=converged, attacker_stationary=stationary,
                      iterations=trainer.t, trace=trace,
                      attacker_objective=attacker_objective,
                      theta=dict(theta), delta=dict(delta),
                      qp_unconverged=trainer.qp_unconverged, diverged=diverged,
                      r_history=history)
