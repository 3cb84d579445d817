"""Bundled experiment presets.

Covers the reference scenarios: the label-game capability studies (fig3 to
fig6), the Spambase network tables (table1, table2), and the network-attack
sweeps (fig7). Spambase presets expect the raw CSV (4601 rows, 58 columns,
last column 0/1) at ``data/spambase.csv``; override with
``--set data.path=...``.
"""

import copy

from .experiments import ConfigError, ExperimentConfig

_GAUSS6 = {
    "topology": {"kind": "complete", "n": 6},
    "data": {"kind": "gaussian", "n_train": 40, "n_test": 500},
    "engine": {"c_l": 1.0, "eta": 1.0, "max_iters": 400, "consensus_tol": 1e-4},
    "seeds": list(range(10)),
}

SPAMBASE_PATH = "data/spambase.csv"

_SPAM = {
    "kind": "csv", "path": SPAMBASE_PATH, "label_column": -1,
    "positive_value": "1", "header": False,
    "n_train": 40, "n_test": 500, "standardize": True,
}

# Network 3: star plus one chord, normalized degrees 1, .4, .4, .2, .2, .2
_NET3_EDGES = [[0, 1], [0, 2], [0, 3], [0, 4], [0, 5], [1, 2]]


def _gauss6(name, attack=None, **engine_over):
    cfg = copy.deepcopy(_GAUSS6)
    cfg["name"] = name
    cfg["attack"] = attack
    cfg["engine"].update(engine_over)
    return cfg


def _label(compromised, q, c_a=0.01):
    return {"kind": "label", "compromised": list(compromised), "q": q, "c_a": c_a}


def _data_poison(compromised, c_delta, c_a=0.01):
    return {"kind": "data", "compromised": list(compromised), "c_delta": c_delta, "c_a": c_a}


def _table_cell(name, topology, data_over, attack):
    data = dict(_SPAM)
    data.update(data_over)
    return {
        "name": name,
        "topology": topology,
        "data": data,
        "engine": {"c_l": 1.0, "eta": 1.0, "max_iters": 400, "consensus_tol": 1e-4},
        "attack": attack,
        "seeds": list(range(10)),
    }


def _fig7_cells():
    cells = []
    plans = [
        # (V, kind, noise, max_iters, levels); mitm levels index the sorted edge list
        (4, "capture", 1.0, 400, [0, 1, 2, 3, 4]),
        (4, "sybil", 0.01, 2500, [0, 1, 2, 3, 4]),
        (4, "mitm", 0.05, 2500, [0, 1, 2, 3, 6]),
        (8, "capture", 1.0, 400, [0, 1, 2, 4, 6, 8]),
        (8, "sybil", 0.01, 6000, [0, 1, 2, 4, 8]),
        (8, "mitm", 0.02, 3500, [0, 1, 2, 3, 28]),
    ]
    for v, kind, noise, iters, levels in plans:
        all_edges = [[i, j] for i in range(v) for j in range(i + 1, v)]
        for k in levels:
            if k == 0:
                attack = None
                iters_k = 400
            else:
                targets = all_edges[:k] if kind == "mitm" else list(range(k))
                attack = {"kind": kind, "targets": targets, "noise": noise}
                iters_k = iters
            cells.append({
                "name": f"fig7_{kind}{v}_k{k}",
                "topology": {"kind": "complete", "n": v},
                "data": {"kind": "gaussian", "n_train": 40, "n_test": 500},
                "engine": {"c_l": 1.0, "eta": 1.0, "max_iters": iters_k,
                           "consensus_tol": 1e-4},
                "attack": attack,
                "seeds": list(range(10)),
            })
    return cells


def _build_presets():
    p = {}
    p["baseline6"] = [_gauss6("baseline6")]
    p["fig3"] = [_gauss6("fig3", _label([0, 1, 2, 3], 30))]
    p["fig4"] = [_gauss6("fig4", _label([0], 30))]
    p["fig5"] = [_gauss6("fig5", _label([0, 1, 2, 3], 10))]
    p["fig6"] = [_gauss6("fig6", _label([0, 1, 2, 3], 30, c_a=5.0))]

    net1 = {"kind": "regular", "n": 6, "k": 2}      # balanced, degree 0.4
    net2 = {"kind": "complete", "n": 6}             # balanced, degree 1
    all6 = list(range(6))
    p["table1"] = [
        _table_cell("table1_net1", net1, {}, None),
        _table_cell("table1_net1_L", net1, {}, _label(all6, 20)),
        _table_cell("table1_net1_D", net1, {}, _data_poison(all6, 1e10)),
        _table_cell("table1_net2", net2, {}, None),
        _table_cell("table1_net2_L", net2, {}, _label(all6, 20)),
        _table_cell("table1_net2_D", net2, {}, _data_poison(all6, 1e10)),
    ]

    net3 = {"kind": "edges", "n": 6, "edges": _NET3_EDGES}
    net4 = {"kind": "regular", "n": 12, "k": 2}
    net4_data = {"n_train": 20, "n_test": 300}
    top3 = {"select": "top-degree", "count": 3}
    bot2 = {"select": "bottom-degree", "count": 2}
    p["table2"] = [
        _table_cell("table2_net3", net3, {}, None),
        _table_cell("table2_net3_La", net3, {},
                    {"kind": "label", "compromised": top3, "q": 20, "c_a": 0.01}),
        _table_cell("table2_net3_Lb", net3, {},
                    {"kind": "label", "compromised": bot2, "q": 20, "c_a": 0.01}),
        _table_cell("table2_net3_Da", net3, {},
                    {"kind": "data", "compromised": top3, "c_delta": 1e10, "c_a": 0.01}),
        _table_cell("table2_net3_Db", net3, {},
                    {"kind": "data", "compromised": bot2, "c_delta": 1e10, "c_a": 0.01}),
        _table_cell("table2_net4", net4, net4_data, None),
        _table_cell("table2_net4_L", net4, net4_data, _label(list(range(12)), 10)),
        _table_cell("table2_net4_D", net4, net4_data, _data_poison(list(range(12)), 0.5e10)),
    ]

    p["fig7"] = _fig7_cells()
    return p


_PRESETS = _build_presets()
PRESET_NAMES = tuple(sorted(_PRESETS))


def preset_configs(name: str):
    """Experiment configs for one preset, or for every preset via 'all'."""
    if name == "all":
        out = []
        for key in PRESET_NAMES:
            out.extend(preset_configs(key))
        return out
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES + ('all',)}")
    return [ExperimentConfig.from_dict(copy.deepcopy(raw)) for raw in _PRESETS[name]]
