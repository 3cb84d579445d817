"""Experiment orchestration: configs, per-seed runs, sweeps, and emission.

An experiment is one (topology, data, engine, attack) cell run over a seed
list. Each seed builds its own data partition, runs the appropriate
trainer (plain, game, injected, or overridden), and reports equilibrium
risks: the terminal value when converged, otherwise the mean over the
final ten iterations with a variance annotation. Seeds are independent
and may run in parallel processes; emission is deterministic and
worker-count independent.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import topology as topo
from .data import LabeledSet, gen_gaussian, load_csv, partition
from .engine import EngineConfig, predict_labels, train
from .games import DataAttackSpec, LabelAttackSpec, run_game
from .metrics import RiskReport, global_risk, local_risk
from .netattacks import NetAttackSpec, model_attack, testing_attack, train_with_netattack


class ConfigError(ValueError):
    pass


_GAME_KINDS = ("label", "data")
_NET_KINDS = ("capture", "sybil", "mitm")
_OTHER_KINDS = ("model", "testing")


@dataclass
class ExperimentConfig:
    """One experiment cell: nested sections mirror the JSON config file."""

    name: str = "experiment"
    topology: dict = field(default_factory=lambda: {"kind": "complete", "n": 6})
    data: dict = field(default_factory=lambda: {"kind": "gaussian", "n_train": 40, "n_test": 500})
    engine: dict = field(default_factory=dict)
    attack: dict = None
    seeds: tuple = tuple(range(10))
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {"name", "topology", "data", "engine", "attack", "seeds", "output"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        cfg = cls(
            name=raw.get("name", "experiment"),
            topology=dict(raw.get("topology", {"kind": "complete", "n": 6})),
            data=dict(raw.get("data", {"kind": "gaussian", "n_train": 40, "n_test": 500})),
            engine=dict(raw.get("engine", {})),
            attack=dict(raw["attack"]) if raw.get("attack") else None,
            seeds=tuple(raw.get("seeds", range(10))),
            output=dict(raw.get("output", {})),
        )
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "topology": dict(self.topology),
            "data": dict(self.data),
            "engine": dict(self.engine),
            "attack": dict(self.attack) if self.attack else None,
            "seeds": list(self.seeds),
            "output": dict(self.output),
        }

    def validate(self):
        if not self.seeds:
            raise ConfigError("seed list must be non-empty")
        build_network(self.topology)
        kind = self.data.get("kind", "gaussian")
        if kind not in ("gaussian", "csv"):
            raise ConfigError(f"unknown data kind {kind!r}")
        if kind == "csv":
            if "path" not in self.data:
                raise ConfigError("csv data needs a 'path'")
            if not os.path.exists(self.data["path"]):
                raise ConfigError(f"data file not found: {self.data['path']}")
        engine_config(self.engine)
        if self.attack is not None:
            akind = self.attack.get("kind")
            if akind not in _GAME_KINDS + _NET_KINDS + _OTHER_KINDS:
                raise ConfigError(f"unknown attack kind {akind!r}")


def build_network(spec: dict) -> topo.Network:
    kind = spec.get("kind", "complete")
    if kind == "complete":
        return topo.build_complete(int(spec["n"]))
    if kind == "regular":
        return topo.build_regular(int(spec["n"]), int(spec["k"]), int(spec.get("seed", 0)))
    if kind == "edges":
        return topo.build_from_edge_list(int(spec["n"]), spec["edges"])
    if kind == "file":
        return topo.load_edge_list(spec["path"])
    raise ConfigError(f"unknown topology kind {kind!r}")


def engine_config(spec: dict) -> EngineConfig:
    known = {"c_l", "eta", "max_iters", "consensus_tol", "qp_tol", "qp_max_sweeps", "p"}
    unknown = set(spec) - known
    if unknown:
        raise ConfigError(f"unknown engine keys: {sorted(unknown)}")
    try:
        return EngineConfig(**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad engine config: {exc}") from exc


_CSV_CACHE = {}


def _load_pool(data_spec: dict, net: topo.Network, seed: int) -> LabeledSet:
    kind = data_spec.get("kind", "gaussian")
    v = net.node_count
    n_train = int(data_spec.get("n_train", 40))
    n_test = int(data_spec.get("n_test", 500))
    if kind == "gaussian":
        per_class = math.ceil(v * (n_train + n_test) / 2)
        tr, te = gen_gaussian(
            per_class, 1,
            mean_pos=data_spec.get("mean_pos", (1.0, 1.0)),
            mean_neg=data_spec.get("mean_neg", (2.0, 2.0)),
            cov=data_spec.get("cov", ((1.0, 0.0), (0.0, 1.0))),
            seed=seed,
        )
        return tr
    key = (data_spec["path"], int(data_spec.get("label_column", -1)),
           str(data_spec.get("positive_value", "1")), bool(data_spec.get("header", False)))
    if key not in _CSV_CACHE:
        _CSV_CACHE[key] = load_csv(key[0], label_column=key[1],
                                   positive_value=key[2], header=key[3])
    return _CSV_CACHE[key]


def _make_nodes(data_spec: dict, net: topo.Network, seed: int):
    pool = _load_pool(data_spec, net, seed)
    default_standardize = data_spec.get("kind") == "csv"
    return partition(pool, net,
                     int(data_spec.get("n_train", 40)), int(data_spec.get("n_test", 500)),
                     standardize=bool(data_spec.get("standardize", default_standardize)),
                     seed=seed)


def resolve_compromised(attack: dict, net: topo.Network, key: str = "compromised"):
    """Target list, or a degree-rank selector {"select": ..., "count": k}."""
    raw = attack.get(key, ())
    if isinstance(raw, dict):
        count = int(raw["count"])
        mode = raw.get("select", "top-degree")
        order = sorted(range(net.node_count),
                       key=lambda v: (-net.degree(v), v) if mode == "top-degree" else (net.degree(v), v))
        if mode not in ("top-degree", "bottom-degree"):
            raise ConfigError(f"unknown selector {mode!r}")
        return tuple(order[:count])
    return tuple(int(v) for v in raw)


def _equilibrium(trace, converged) -> RiskReport:
    """Terminal risks when converged, else trailing-10 means with std annotation."""
    if not trace:
        return RiskReport(per_node={}, global_risk=float("nan"), iteration=0,
                          flags={"converged": converged,
                                 "equilibrium_std": float("nan")})
    window = trace[-1:] if converged else trace[-10:]
    glob = [row.global_risk for row in window]
    per_node = np.mean([row.local_risks for row in window], axis=0)
    return RiskReport(
        per_node={v: float(x) for v, x in enumerate(per_node)},
        global_risk=float(np.mean(glob)),
        iteration=trace[-1].iteration,
        consensus_residual=trace[-1].consensus_residual,
        flags={"converged": converged, "equilibrium_std": float(np.std(glob))},
    )


def _risks_from_model(result, node_data, attack: dict, net: topo.Network):
    """Equilibrium risks for testing attacks: corrupt evaluation inputs."""
    variant = attack.get("variant", "negate-r")
    targets = set(resolve_compromised(attack, net, key="targets"))
    delta = np.asarray(attack.get("delta", ()), dtype=np.float64)
    pairs = []
    per_node = []
    for v in range(net.node_count):
        r_v = result.r[v]
        x = node_data[v].test.features
        y = node_data[v].test.labels
        if v in targets:
            if variant == "negate-r":
                r_v = testing_attack("negate-r", model=r_v)
            elif variant == "flip-label":
                y = testing_attack("flip-label", labels=y)
            elif variant == "shift-x":
                x = testing_attack("shift-x", features=x, delta=delta)
        aug = np.hstack([x, np.ones((x.shape[0], 1))])
        yhat = predict_labels(r_v, aug)
        pairs.append((y, yhat))
        per_node.append(local_risk(y, yhat))
    return global_risk(pairs), per_node


def run_cell(cfg: ExperimentConfig, seed: int) -> dict:
    """One (experiment, seed) run; returns the equilibrium snapshot."""
    net = build_network(cfg.topology)
    nodes = _make_nodes(cfg.data, net, seed)
    ecfg = engine_config(cfg.engine)
    attack = cfg.attack
    akind = attack.get("kind") if attack else None

    if akind in _GAME_KINDS:
        compromised = resolve_compromised(attack, net)
        if akind == "label":
            spec = LabelAttackSpec(compromised, float(attack.get("q", 0.0)),
                                   float(attack.get("c_a", 0.01)))
        else:
            spec = DataAttackSpec(compromised, float(attack.get("c_delta", 0.0)),
                                  float(attack.get("c_a", 0.01)))
        result = run_game(net, nodes, ecfg, spec,
                          learner_rounds_per_attack=int(attack.get("learner_rounds", 1)))
        converged = result.converged
    elif akind in _NET_KINDS:
        targets = attack.get("targets", ())
        if akind == "mitm":
            targets = tuple((int(u), int(w)) for u, w in targets)
        else:
            targets = resolve_compromised(attack, net, key="targets")
        spec = NetAttackSpec(akind, targets, float(attack.get("noise", 0.0)), seed=seed,
                             sybil_inflates_degree=bool(attack.get("sybil_inflates_degree", False)))
        result = train_with_netattack(net, nodes, ecfg, spec)
        converged = result.converged
    elif akind == "model":
        targets = resolve_compromised(attack, net, key="targets")
        c_l = model_attack(targets, float(attack.get("c_l", 0.0)), ecfg.c_l, net.node_count)
        result = train(net, nodes, ecfg, c_l_per_node=c_l)
        converged = result.converged
    else:
        result = train(net, nodes, ecfg)
        converged = result.converged

    report = _equilibrium(result.trace, converged)
    report.flags["diverged"] = getattr(result, "diverged", False)
    glob = report.global_risk
    per_node = [report.per_node[v] for v in sorted(report.per_node)]
    if akind == "testing":
        glob, per_node = _risks_from_model(result, nodes, attack, net)

    residual = result.trace[-1].consensus_residual if result.trace else float("nan")
    trace_rows = [(row.iteration, row.consensus_residual, row.global_risk)
                  for row in result.trace]
    return {
        "seed": seed,
        "global_risk": glob,
        "per_node": per_node,
        "iterations": result.iterations,
        "converged": converged,
        "consensus_residual": residual,
        "flags": report.flags,
        "trace": trace_rows,
    }


def _run_cell_raw(args):
    raw, seed = args
    try:
        return run_cell(ExperimentConfig.from_dict(raw), seed)
    except Exception as exc:  # noqa: BLE001 - per-seed isolation by contract
        return {
            "seed": seed,
            "error": f"{type(exc).__name__}: {exc}",
            "global_risk": float("nan"),
            "per_node": [],
            "iterations": 0,
            "converged": False,
            "consensus_residual": float("nan"),
            "flags": {},
            "trace": [],
        }


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    cells: list  # per-seed snapshots, seed order

    @property
    def name(self) -> str:
        return self.config.name

    @property
    def _valid_risks(self):
        return [c["global_risk"] for c in self.cells if "error" not in c]

    @property
    def mean_risk(self) -> float:
        risks = self._valid_risks
        return float(np.mean(risks)) if risks else float("nan")

    @property
    def std_risk(self) -> float:
        risks = self._valid_risks
        return float(np.std(risks)) if risks else float("nan")

    @property
    def errors(self) -> dict:
        return {c["seed"]: c["error"] for c in self.cells if "error" in c}


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every seed of one experiment; seed cells are order-independent."""
    jobs = [(cfg.to_dict(), seed) for seed in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell_raw, jobs))
    else:
        cells = [_run_cell_raw(j) for j in jobs]
    return ExperimentResult(config=cfg, cells=cells)


# -- emission ------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _topology_label(spec: dict) -> str:
    kind = spec.get("kind", "complete")
    if kind == "complete":
        return f"complete:{spec['n']}"
    if kind == "regular":
        return f"regular:{spec['n']},{spec['k']}"
    if kind == "edges":
        return f"edges:{spec['n']}"
    return f"file:{spec.get('path', '?')}"


def _attack_label(attack) -> tuple:
    if not attack:
        return "none", ""
    # semicolon-joined so the value stays a single CSV field
    params = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(attack.items())
                      if k != "kind" and not isinstance(v, (list, dict)))
    return attack["kind"], params


def result_rows(result: ExperimentResult) -> list:
    """Flatten one experiment into emission rows (dicts, fixed key order)."""
    cfg = result.config
    topo_label = _topology_label(cfg.topology)
    akind, aparams = _attack_label(cfg.attack)
    rows = []
    for cell in result.cells:
        base = {
            "experiment_id": cfg.name,
            "seed": cell["seed"],
            "topology": topo_label,
            "attack_kind": akind,
            "attack_params": aparams,
            "iteration": cell["iterations"],
            "converged": cell["converged"],
            "consensus_residual": cell["consensus_residual"],
        }
        for v, risk in enumerate(cell["per_node"]):
            rows.append({**base, "node": str(v), "risk": risk})
        rows.append({**base, "node": "global", "risk": cell["global_risk"]})
    for stat, value in (("mean", result.mean_risk), ("std", result.std_risk)):
        rows.append({
            "experiment_id": cfg.name, "seed": stat, "topology": topo_label,
            "attack_kind": akind, "attack_params": aparams, "iteration": "",
            "converged": "", "consensus_residual": "", "node": "global",
            "risk": value,
        })
    return rows


_CSV_COLUMNS = ("experiment_id", "seed", "topology", "attack_kind", "attack_params",
                "iteration", "node", "risk", "consensus_residual", "converged")


def emit(results, out_dir, formats=("csv", "json"), trace: bool = False) -> dict:
    """Write results.csv / results.json (and trace.csv) under ``out_dir``.

    Output is byte-deterministic for a given result set: fixed column
    order, 6-significant-digit floats in the CSV, sorted keys in the JSON.
    """
    if not results:
        raise ConfigError("nothing to emit")
    if isinstance(results, ExperimentResult):
        results = [results]
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    if "csv" in formats:
        path = os.path.join(out_dir, "results.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(_CSV_COLUMNS) + "\n")
            for res in results:
                for row in result_rows(res):
                    fh.write(",".join(_fmt(row[c]) for c in _CSV_COLUMNS) + "\n")
        paths["csv"] = path

    if "json" in formats:
        path = os.path.join(out_dir, "results.json")
        payload = []
        for res in results:
            payload.append({
                "config": res.config.to_dict(),
                "summary": {"mean_risk": res.mean_risk, "std_risk": res.std_risk,
                            "n_seeds": len(res.cells)},
                "cells": [{k: v for k, v in cell.items() if k != "trace"}
                          for cell in res.cells],
            })
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
        paths["json"] = path

    if trace:
        path = os.path.join(out_dir, "trace.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("experiment_id,seed,iteration,consensus_residual,global_risk\n")
            for res in results:
                for cell in res.cells:
                    for it, residual, risk in cell["trace"]:
                        fh.write(f"{res.name},{cell['seed']},{it},"
                                 f"{residual:.6g},{risk:.6g}\n")
        paths["trace"] = path
    return paths
