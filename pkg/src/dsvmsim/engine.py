"""Consensus ADMM trainer for distributed linear SVMs.

Synchronous rounds: every node solves its box-constrained dual QP and
updates its decision vector r_v = [w_v; b_v], then all nodes broadcast r_v
to their neighbors, then every node updates its consensus multiplier
alpha_v. Training stops when both the neighbor disagreement and the
per-round step fall below ``consensus_tol``.

The trainer exposes hook points used by the adversarial games (per-node
problem swaps, f shifts) and by the network-attack injectors (message
tampering); with no hooks installed those paths are never executed, so
attack-free runs are bitwise identical to plain training.
"""

from dataclasses import dataclass

import numpy as np

from .data import LabeledSet, NodeData
from .kernels import BoxQP, solve_box_qp
from .metrics import global_risk, local_risk
from .topology import Network


class EngineError(ValueError):
    pass


class DegenerateDataError(EngineError):
    """Training data with a single class where two are required."""


class TrainingDiverged(EngineError):
    """Decision vectors left the representable range (attack-induced blowup)."""


@dataclass
class EngineConfig:
    """Trainer parameters; defaults are C_l = 1 and eta = 1."""

    c_l: float = 1.0
    eta: float = 1.0
    max_iters: int = 400
    consensus_tol: float = 1e-4
    p: int = None  # feature dimension; validated against data when set
    qp_tol: float = 1e-8
    qp_max_sweeps: int = 1000

    def __post_init__(self):
        if self.c_l <= 0 or self.eta <= 0:
            raise EngineError("c_l and eta must be positive")


def u_inverse(eta: float, degree: int, p: int) -> np.ndarray:
    """Diagonal of U_v^{-1} where U_v = Pi_{p+1} + 2*eta*|B_v|*I.

    First p entries are 1/(1 + 2*eta*|B_v|), the bias entry is
    1/(2*eta*|B_v|). |B_v| = 0 makes U_v singular and is rejected.
    """
    if degree < 1:
        raise EngineError("U_v is singular for a node with no neighbors")
    if eta <= 0:
        raise EngineError("eta must be positive")
    diag = np.full(p + 1, 1.0 / (1.0 + 2.0 * eta * degree))
    diag[p] = 1.0 / (2.0 * eta * degree)
    return diag


@dataclass
class NodeState:
    """Per-node trainer state: decision vector, multipliers, last inbox."""

    r: np.ndarray
    alpha: np.ndarray
    lam: np.ndarray
    inbox: dict


@dataclass
class NodeProblem:
    """Constant pieces of one node's dual QP (quad matrix precomputed)."""

    x: np.ndarray       # augmented rows, (N, p+1)
    y: np.ndarray       # labels, (N,)
    u_inv: np.ndarray   # (p+1,)
    quad: np.ndarray    # (N, N)
    upper: np.ndarray   # (N,) dual box caps


def build_node_problem(x_aug: np.ndarray, y: np.ndarray, u_inv: np.ndarray,
                       upper: np.ndarray) -> NodeProblem:
    scaled = x_aug * u_inv
    quad = np.ascontiguousarray((scaled @ x_aug.T) * y[:, None] * y[None, :])
    return NodeProblem(x=x_aug, y=y, u_inv=u_inv, quad=quad, upper=upper)


def _node_dual_primal(prob: NodeProblem, f: np.ndarray, lam_warm, cfg: EngineConfig):
    """Dual solve then primal recovery for one node and one round."""
    lin = 1.0 + prob.y * (prob.x @ (prob.u_inv * f))
    res = solve_box_qp(BoxQP(prob.quad, lin, prob.upper), cfg.qp_tol,
                       cfg.qp_max_sweeps, warm_start=lam_warm)
    r = prob.u_inv * (prob.x.T @ (prob.y * res.lam) - f)
    return res, r


@dataclass
class TraceRow:
    iteration: int
    consensus_residual: float
    step_residual: float
    global_risk: float
    local_risks: tuple


@dataclass
class TrainResult:
    r: np.ndarray        # (V, p+1) final decision vectors
    converged: bool
    iterations: int
    trace: list
    states: list
    qp_unconverged: int = 0
    diverged: bool = False
    r_history: list = None

    @property
    def final_global_risk(self) -> float:
        return self.trace[-1].global_risk if self.trace else float("nan")


def predict(r: np.ndarray, x: np.ndarray) -> float:
    """Label sign([x, 1] . r); exact zero maps to +1."""
    r = np.asarray(r, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (r.shape[0] - 1,):
        raise EngineError(f"expected {r.shape[0] - 1} features, got {x.shape}")
    g = float(x @ r[:-1] + r[-1])
    return 1.0 if g >= 0 else -1.0


def predict_labels(r: np.ndarray, x_aug: np.ndarray) -> np.ndarray:
    """Vectorized predict over pre-augmented rows."""
    return np.where(x_aug @ r >= 0, 1.0, -1.0)


class ConsensusTrainer:
    """Synchronous-round engine over a fixed network and per-node data.

    Games install per-node problem overrides or f shifts before a round;
    injectors tamper with the broadcast. Both default to inactive.
    """

    def __init__(self, net: Network, node_data, cfg: EngineConfig,
                 injector=None, c_l_per_node=None):
        v_count = net.node_count
        if len(node_data) != v_count:
            raise EngineError(f"need {v_count} node datasets, got {len(node_data)}")
        p = node_data[0].augmented.shape[1] - 1
        if cfg.p is not None and cfg.p != p:
            raise EngineError(f"config p={cfg.p} but data has p={p}")
        for nd in node_data:
            if nd.augmented.shape[1] - 1 != p:
                raise EngineError("inconsistent feature dimensions across nodes")

        self.net = net
        self.cfg = cfg
        self.data = list(node_data)
        self.injector = injector
        self.V = v_count
        self.p = p
        self.t = 0
        self.qp_unconverged = 0

        if c_l_per_node is None:
            c_l_per_node = [cfg.c_l] * v_count
        self.box_cap = [v_count * float(c) for c in c_l_per_node]

        self.agg_keys = []
        self.base_problems = []
        self.problems = []
        self.f_shift = [None] * v_count
        self.r = []
        self.alpha = []
        self.lam = []
        self.inbox = []
        for v in range(v_count):
            virtual = injector.virtual_ids(v) if injector is not None else ()
            keys = list(net.neighbors[v]) + list(virtual)
            self.agg_keys.append(keys)
            u_degree = len(net.neighbors[v])
            if injector is not None:
                u_degree += injector.extra_u_degree(v)
            u_inv = u_inverse(cfg.eta, u_degree, p)
            n_v = node_data[v].n_train
            prob = build_node_problem(node_data[v].augmented, node_data[v].labels,
                                      u_inv, np.full(n_v, self.box_cap[v]))
            self.base_problems.append(prob)
            self.problems.append(prob)
            self.r.append(np.zeros(p + 1))
            self.alpha.append(np.zeros(p + 1))
            self.lam.append(np.zeros(n_v))
            self.inbox.append({k: np.zeros(p + 1) for k in keys})

        self._test_aug = [np.hstack([nd.test.features, np.ones((nd.test.n_samples, 1))])
                          for nd in node_data]

    # -- game hook points -------------------------------------------------
    def set_problem(self, v: int, problem: NodeProblem, lam_warm: np.ndarray):
        self.problems[v] = problem
        self.lam[v] = lam_warm

    def reset_problem(self, v: int):
        if self.problems[v] is not self.base_problems[v]:
            self.lam[v] = self.lam[v][: self.data[v].n_train].copy()
        self.problems[v] = self.base_problems[v]

    def set_f_shift(self, v: int, shift):
        self.f_shift[v] = shift

    # -- core round --------------------------------------------------------
    def _compute_f(self, v: int) -> np.ndarray:
        box = self.inbox[v]
        msg_sum = np.zeros(self.p + 1)
        for k in self.agg_keys[v]:
            msg_sum += box[k]
        deg = len(self.agg_keys[v])
        return 2.0 * self.alpha[v] - self.cfg.eta * (deg * self.r[v] + msg_sum)

    def run_round(self) -> TraceRow:
        with np.errstate(over="ignore", invalid="ignore"):
            return self._run_round()

    def _run_round(self) -> TraceRow:
        cfg = self.cfg
        t = self.t
        new_r = [None] * self.V
        for v in range(self.V):
            f = self._compute_f(v)
            if self.f_shift[v] is not None:
                f = f + self.f_shift[v]
            if not np.isfinite(f).all():
                raise TrainingDiverged(f"non-finite f at node {v}, round {t + 1}")
            res, r_v = _node_dual_primal(self.problems[v], f, self.lam[v], cfg)
            self.lam[v] = res.lam
            if not res.converged:
                self.qp_unconverged += 1
            new_r[v] = r_v

        if not all(np.isfinite(r).all() for r in new_r):
            raise TrainingDiverged(f"non-finite decision vector at round {t + 1}")

        if self.injector is not None:
            for v in range(self.V):
                new_r[v] = self.injector.perturb_own(v, new_r[v], t)

        for v in range(self.V):
            box = self.inbox[v]
            for u in self.net.neighbors[v]:
                msg = new_r[u]
                if self.injector is not None:
                    msg = self.injector.tamper(u, v, msg, t)
                box[u] = msg
            if self.injector is not None:
                for key in self.injector.virtual_ids(v):
                    box[key] = self.injector.virtual_message(v, key, new_r[v], t)

        half_eta = 0.5 * cfg.eta
        for v in range(self.V):
            diff = np.zeros(self.p + 1)
            box = self.inbox[v]
            for k in self.agg_keys[v]:
                diff += new_r[v] - box[k]
            self.alpha[v] = self.alpha[v] + half_eta * diff

        consensus = 0.0
        for u, w in self.net.edges:
            d = float(np.max(np.abs(new_r[u] - new_r[w])))
            if d > consensus:
                consensus = d
        step = max(float(np.max(np.abs(new_r[v] - self.r[v]))) for v in range(self.V))

        self.r = new_r
        self.t = t + 1
        locals_, glob = self._risks()
        return TraceRow(iteration=self.t, consensus_residual=consensus,
                        step_residual=step, global_risk=glob, local_risks=locals_)

    def _risks(self):
        pairs = []
        locals_ = []
        for v in range(self.V):
            yhat = predict_labels(self.r[v], self._test_aug[v])
            y = self.data[v].test.labels
            pairs.append((y, yhat))
            locals_.append(local_risk(y, yhat))
        return tuple(locals_), global_risk(pairs)

    def states(self):
        return [NodeState(r=self.r[v], alpha=self.alpha[v], lam=self.lam[v],
                          inbox=dict(self.inbox[v])) for v in range(self.V)]


def local_round(state: NodeState, data: NodeData, cfg: EngineConfig, v_count: int) -> NodeState:
    """One node's dual/primal step given the neighbor values in its inbox.

    Returns the updated state with the new r and lambda; the alpha update
    belongs to the post-broadcast phase and is not applied here.
    """
    keys = sorted(state.inbox)
    deg = len(keys)
    p = data.augmented.shape[1] - 1
    u_inv = u_inverse(cfg.eta, deg, p)
    msg_sum = np.zeros(p + 1)
    for k in keys:
        msg_sum += state.inbox[k]
    f = 2.0 * state.alpha - cfg.eta * (deg * state.r + msg_sum)
    prob = build_node_problem(data.augmented, data.labels, u_inv,
                              np.full(data.n_train, v_count * cfg.c_l))
    warm = state.lam if state.lam.shape == (data.n_train,) else None
    res, r_v = _node_dual_primal(prob, f, warm, cfg)
    return NodeState(r=r_v, alpha=state.alpha.copy(), lam=res.lam, inbox=dict(state.inbox))


def train(net: Network, node_data, cfg: EngineConfig, injector=None,
          c_l_per_node=None, record_state: bool = False) -> TrainResult:
    """Run synchronous ADMM rounds until consensus or ``max_iters``.

    Non-convergence is reported through ``converged=False``, never silently.
    A 1-node network reduces to the centralized SVM baseline.
    """
    if net.node_count == 1:
        r = centralized_svm(node_data[0].train, cfg.c_l)
        yhat = predict_labels(r, np.hstack([node_data[0].test.features,
                                            np.ones((node_data[0].test.n_samples, 1))]))
        risk = local_risk(node_data[0].test.labels, yhat)
        row = TraceRow(iteration=1, consensus_residual=0.0, step_residual=0.0,
                       global_risk=risk, local_risks=(risk,))
        return TrainResult(r=r[None, :], converged=True, iterations=1, trace=[row],
                           states=[NodeState(r=r, alpha=np.zeros_like(r),
                                             lam=np.zeros(node_data[0].n_train), inbox={})],
                           r_history=[r[None, :].copy()] if record_state else None)

    trainer = ConsensusTrainer(net, node_data, cfg, injector=injector,
                               c_l_per_node=c_l_per_node)
    trace = []
    history = [] if record_state else None
    converged = False
    diverged = False
    for _ in range(cfg.max_iters):
        try:
            row = trainer.run_round()
        except TrainingDiverged:
            diverged = True
            break
        trace.append(row)
        if record_state:
            history.append(np.vstack(trainer.r))
        if row.consensus_residual < cfg.consensus_tol and row.step_residual < cfg.consensus_tol:
            converged = True
            break
    return TrainResult(r=np.vstack(trainer.r) if trace else np.zeros((net.node_count, trainer.p + 1)),
                       converged=converged, iterations=trainer.t, trace=trace,
                       states=trainer.states(), qp_unconverged=trainer.qp_unconverged,
                       diverged=diverged, r_history=history)


def centralized_svm(pooled: LabeledSet, c_l: float, tol: float = 1e-8,
                    max_iter: int = 200_000) -> np.ndarray:
    """Single-machine linear SVM baseline: r = [w; b].

    Solves the hinge-loss problem min 1/2||w||^2 + c_l * sum hinge exactly
    through its equality-constrained dual, using maximal-violating-pair
    working-set selection (the bias is the multiplier of the equality
    constraint, so no consensus machinery is involved).
    """
    x = pooled.features
    y = pooled.labels
    if np.unique(y).size < 2:
        raise DegenerateDataError("centralized SVM needs both classes present")
    n = y.shape[0]
    c = float(c_l)
    quad = (x @ x.T) * y[:, None] * y[None, :]
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - 1'a
    pos = y > 0

    m_val = mm_val = 0.0
    for _ in range(max_iter):
        yg = -y * grad
        up = np.where(pos, alpha < c, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < c)
        if not up.any() or not low.any():
            break
        yg_up = np.where(up, yg, -np.inf)
        yg_low = np.where(low, yg, np.inf)
        i = int(np.argmax(yg_up))
        j = int(np.argmin(yg_low))
        m_val, mm_val = yg_up[i], yg_low[j]
        if m_val - mm_val < tol:
            break
        a = quad[i, i] + quad[j, j] - 2.0 * y[i] * y[j] * quad[i, j]
        if a <= 0:
            a = 1e-12
        step = (m_val - mm_val) / a
        step = min(step, c - alpha[i] if y[i] > 0 else alpha[i])
        step = min(step, alpha[j] if y[j] > 0 else c - alpha[j])
        if step <= 0:
            break
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        grad += quad[:, i] * (y[i] * step) - quad[:, j] * (y[j] * step)

    w = x.T @ (y * alpha)
    bias = 0.5 * (m_val + mm_val) if np.isfinite(m_val) and np.isfinite(mm_val) else 0.0
    return np.concatenate([w, [bias]])
