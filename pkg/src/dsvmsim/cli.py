"""Command-line entry point.

Subcommands: ``train`` (no-attack or model/testing runs), ``attack``
(label/data games), ``netattack`` (capture/sybil/mitm), ``sweep`` (preset
collections), ``validate`` (parse and echo a config). Configs are JSON
files with nested sections (topology, data, engine, attack, output);
``--set key.path=value`` overrides win over file values. ``--config`` also
accepts a bundled preset name (e.g. fig3).

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

import argparse
import json
import os
import sys

from . import topology as topo
from .experiments import ConfigError, ExperimentConfig, emit, run_experiment
from .presets import PRESET_NAMES, preset_configs


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _add_common(sub):
    sub.add_argument("--config", help="config file path or preset name")
    sub.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="dotted config override, e.g. engine.c_l=2")
    sub.add_argument("--out", help="output directory (default $DSVMSIM_OUTDIR or ./out)")
    sub.add_argument("--seeds", help="seed list: '0,1,2' or '0-9'")
    sub.add_argument("--trace", action="store_true", help="also write per-iteration trace.csv")
    sub.add_argument("--header", action="store_true", help="CSV data file has a header line")
    sub.add_argument("--topology", help="topology override: complete:N | regular:N,K | file:PATH")
    sub.add_argument("--workers", type=int, default=1, help="parallel seed workers")
    sub.add_argument("--quiet", action="store_true", help="suppress the summary table")


def build_parser() -> _Parser:
    parser = _Parser(prog="dsvmsim",
                     description="Distributed SVM training and attack simulation")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("train", "train without a training-time game"),
        ("attack", "run a label-flip or data-poison game"),
        ("netattack", "train under capture/sybil/mitm injection"),
        ("sweep", "run a preset collection of experiments"),
        ("validate", "parse a config and echo the resolved parameters"),
    ):
        sub = subs.add_parser(name, help=desc)
        _add_common(sub)
        if name == "sweep":
            sub.add_argument("--preset", help=f"one of {PRESET_NAMES + ('all',)}")
    return parser


def parse_seeds(spec: str):
    seeds = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError(f"empty seed spec {spec!r}")
    return seeds


def parse_topology_flag(spec: str) -> dict:
    if spec.startswith("file:"):
        return {"kind": "file", "path": spec[5:]}
    if spec.startswith("complete:"):
        return {"kind": "complete", "n": int(spec.split(":", 1)[1])}
    if spec.startswith("regular:"):
        n, k = spec.split(":", 1)[1].split(",")
        return {"kind": "regular", "n": int(n), "k": int(k)}
    raise ConfigError(f"bad --topology {spec!r}; use complete:N, regular:N,K or file:PATH")


def apply_override(raw: dict, assignment: str):
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not KEY=VALUE")
    key, value = assignment.split("=", 1)
    try:
        value = json.loads(value)
    except json.JSONDecodeError:
        pass  # keep as string
    parts = key.split(".")
    cursor = raw
    for part in parts[:-1]:
        if part not in cursor or not isinstance(cursor[part], dict):
            cursor[part] = {}
        cursor = cursor[part]
    cursor[parts[-1]] = value


def load_configs(args) -> list:
    """Resolve --config/--preset plus flag overrides into experiment configs."""
    raws = []
    if getattr(args, "preset", None):
        raws = [cfg.to_dict() for cfg in preset_configs(args.preset)]
    elif args.config:
        if args.config in PRESET_NAMES:
            raws = [cfg.to_dict() for cfg in preset_configs(args.config)]
        else:
            if not os.path.exists(args.config):
                raise ConfigError(f"config file not found: {args.config}")
            with open(args.config, "r", encoding="utf-8") as fh:
                try:
                    loaded = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
            raws = loaded if isinstance(loaded, list) else [loaded]
    else:
        raise ConfigError("no --config (or --preset) given")

    for raw in raws:
        if args.topology:
            raw["topology"] = parse_topology_flag(args.topology)
        if args.header:
            raw.setdefault("data", {})["header"] = True
        if args.seeds:
            raw["seeds"] = parse_seeds(args.seeds)
        for assignment in args.overrides:
            apply_override(raw, assignment)
    return [ExperimentConfig.from_dict(raw) for raw in raws]


_FAMILY = {
    "train": (None, "model", "testing"),
    "attack": ("label", "data"),
    "netattack": ("capture", "sybil", "mitm"),
}


def _check_family(command: str, configs):
    allowed = _FAMILY.get(command)
    if allowed is None:
        return
    for cfg in configs:
        kind = cfg.attack.get("kind") if cfg.attack else None
        if kind not in allowed:
            raise ConfigError(
                f"subcommand '{command}' expects attack kind in {allowed}, "
                f"config '{cfg.name}' has {kind!r}")


def _summary_table(results) -> str:
    lines = []
    header = f"{'experiment':<22} {'topology':<16} {'degree':>6} {'attack':<28} " \
             f"{'risk mean':>9} {'std':>7} {'conv':>5}"
    lines.append(header)
    lines.append("-" * len(header))
    from .experiments import build_network, _topology_label, _attack_label

    for res in results:
        net = build_network(res.config.topology)
        degree = topo.network_degree(net)
        akind, aparams = _attack_label(res.config.attack)
        attack = akind if not aparams else f"{akind}({aparams})"
        conv = sum(1 for c in res.cells if c["converged"])
        lines.append(f"{res.name:<22} {_topology_label(res.config.topology):<16} "
                     f"{degree:>6.3f} {attack[:28]:<28} "
                     f"{res.mean_risk:>9.4f} {res.std_risk:>7.4f} "
                     f"{conv:>2}/{len(res.cells)}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        configs = load_configs(args)
        _check_family(args.command, configs)
    except (ConfigError, topo.InvalidTopologyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if args.command == "validate":
        for cfg in configs:
            print(json.dumps(cfg.to_dict(), indent=1, sort_keys=True))
        return 0

    out_dir = args.out or os.environ.get("DSVMSIM_OUTDIR", "out")
    try:
        results = [run_experiment(cfg, workers=max(1, args.workers)) for cfg in configs]
        paths = emit(results, out_dir, trace=args.trace)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2

    if not args.quiet:
        print(_summary_table(results))
        print("wrote " + " ".join(sorted(paths.values())))
    return 0


if __name__ == "__main__":
    sys.exit(main())
