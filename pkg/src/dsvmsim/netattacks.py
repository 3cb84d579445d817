"""Training-time network attacks and post-training (testing/model) attacks.

The training attacks tamper with the synchronous broadcast: node capture
adds noise to a captured node's own decision vector, Sybil attaches a
virtual neighbor that echoes a perturbed copy of the victim's vector, and
MITM perturbs the messages crossing a targeted edge in both directions
(independent draws per direction). Noise coordinates are Uniform[0, R] as
a pure function of (seed, attack kind, node-or-edge id, iteration,
direction), so runs are reproducible and worker-count independent, and the
noise is re-drawn every round.
"""

from dataclasses import dataclass

import numpy as np

from .engine import EngineConfig, TrainResult, train
from .topology import Network


class NetAttackError(ValueError):
    pass


_KINDS = ("capture", "sybil", "mitm")


@dataclass
class NetAttackSpec:
    """Network attack description.

    ``targets`` holds node ids for capture/sybil and edges for mitm.
    ``sybil_inflates_degree`` controls whether the virtual neighbor counts
    in |B_v| (and hence U_v); the victim aggregates its message either way.
    The default (False) models a victim whose aggregation weights were
    fixed before the fake neighbor appeared, which is what makes Sybil
    noise destructive; with True the extra link is absorbed as a benign
    consensus term.
    """

    kind: str
    targets: tuple
    noise: float
    seed: int = 0
    sybil_inflates_degree: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise NetAttackError(f"unknown attack kind {self.kind!r}")
        if self.noise < 0:
            raise NetAttackError("noise magnitude R must be >= 0")
        if self.kind == "mitm":
            self.targets = tuple(sorted((min(int(u), int(v)), max(int(u), int(v)))
                                        for u, v in self.targets))
        else:
            self.targets = tuple(sorted(set(int(v) for v in self.targets)))


def uniform_noise(seed: int, tag, size: int, radius: float) -> np.ndarray:
    """Uniform[0, radius] draw keyed by (seed, *tag); positive-biased as specified."""
    rng = np.random.default_rng((seed,) + tuple(tag))
    return rng.uniform(0.0, radius, size)


def capture_perturb(r: np.ndarray, radius: float, rng_key, seed: int = 0) -> np.ndarray:
    """Node-capture corruption: r plus a fresh Uniform[0, R] vector."""
    if radius == 0.0:
        return r
    return r + uniform_noise(seed, (0,) + tuple(rng_key), r.shape[0], radius)


def sybil_message(r_v: np.ndarray, radius: float, rng_key, seed: int = 0) -> np.ndarray:
    """Virtual neighbor's delivery: the victim's own r plus Uniform[0, R]."""
    if radius == 0.0:
        return r_v
    return r_v + uniform_noise(seed, (2,) + tuple(rng_key), r_v.shape[0], radius)


def mitm_perturb(msg: np.ndarray, radius: float, rng_key, seed: int = 0) -> np.ndarray:
    """On-path tampering of one directed message."""
    if radius == 0.0:
        return msg
    return msg + uniform_noise(seed, (1,) + tuple(rng_key), msg.shape[0], radius)


class NetworkInjector:
    """Broadcast-stage filter implementing one NetAttackSpec."""

    def __init__(self, net: Network, spec: NetAttackSpec):
        self.spec = spec
        v = net.node_count
        if spec.kind == "mitm":
            edge_set = set(net.edges)
            for e in spec.targets:
                if e not in edge_set:
                    raise NetAttackError(f"mitm edge {e} not in the network")
            self.edges = frozenset(spec.targets)
            self.nodes = frozenset()
        else:
            for t in spec.targets:
                if not 0 <= t < v:
                    raise NetAttackError(f"target node {t} out of range")
            self.nodes = frozenset(spec.targets)
            self.edges = frozenset()
        # one virtual neighbor per sybil target, ids beyond the real nodes
        self._virtual = {}
        if spec.kind == "sybil":
            for rank, t in enumerate(spec.targets):
                self._virtual[t] = v + rank

    def virtual_ids(self, v: int) -> tuple:
        vid = self._virtual.get(v)
        return (vid,) if vid is not None else ()

    def extra_u_degree(self, v: int) -> int:
        if v in self._virtual and self.spec.sybil_inflates_degree:
            return 1
        return 0

    def perturb_own(self, v: int, r: np.ndarray, t: int) -> np.ndarray:
        if self.spec.kind == "capture" and v in self.nodes:
            return capture_perturb(r, self.spec.noise, (v, t), self.spec.seed)
        return r

    def tamper(self, sender: int, receiver: int, msg: np.ndarray, t: int) -> np.ndarray:
        if self.spec.kind == "mitm":
            edge = (min(sender, receiver), max(sender, receiver))
            if edge in self.edges:
                return mitm_perturb(msg, self.spec.noise, (sender, receiver, t), self.spec.seed)
        return msg

    def virtual_message(self, v: int, key: int, r_v: np.ndarray, t: int) -> np.ndarray:
        return sybil_message(r_v, self.spec.noise, (v, t), self.spec.seed)


def train_with_netattack(net: Network, node_data, cfg: EngineConfig,
                         spec: NetAttackSpec, record_state: bool = False) -> TrainResult:
    """Plain training run with the attack injected at the broadcast barrier."""
    return train(net, node_data, cfg, injector=NetworkInjector(net, spec),
                 record_state=record_state)


# -- testing and model attacks ------------------------------------------------

_TESTING_VARIANTS = ("flip-label", "shift-x", "negate-r")


def testing_attack(variant: str, *, model=None, features=None, labels=None, delta=None):
    """Corrupt an evaluation input.

    flip-label negates test labels, shift-x replaces x by x - delta,
    negate-r negates a trained decision vector (contrary predictions).
    Returns the corrupted copy of the relevant piece.
    """
    if variant == "flip-label":
        if labels is None:
            raise NetAttackError("flip-label needs labels")
        return -np.asarray(labels, dtype=np.float64)
    if variant == "shift-x":
        if features is None or delta is None:
            raise NetAttackError("shift-x needs features and delta")
        return np.asarray(features, dtype=np.float64) - np.asarray(delta, dtype=np.float64)
    if variant == "negate-r":
        if model is None:
            raise NetAttackError("negate-r needs a model vector")
        return -np.asarray(model, dtype=np.float64)
    raise NetAttackError(f"unknown testing attack {variant!r}; pick from {_TESTING_VARIANTS}")


def model_attack(targets, new_c_l: float, base_c_l: float, v_count: int) -> list:
    """Per-node learner-cost override: compromised nodes train with new_c_l.

    new_c_l = 0 forces the node's dual box to {0}, removing its data from
    its own w contribution.
    """
    if new_c_l < 0:
        raise NetAttackError("overridden C_l must be >= 0")
    c_l = [base_c_l] * v_count
    for t in targets:
        if not 0 <= t < v_count:
            raise NetAttackError(f"target node {t} out of range")
        c_l[t] = float(new_c_l)
    return c_l
