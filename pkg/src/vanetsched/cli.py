"""Command-line front end.

Subcommands: grow, attack, paths, theory, trace-gen. Configuration values are
resolved as defaults < ``--config`` file < ``--set key=value`` < ``--seed``.
Every CSV starts with ``#`` provenance lines carrying the resolved config.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_INTENSITIES,
    apl_sweep,
    attack_sweep,
    degree_histogram,
    rows_csv,
    trial_config,
)
from .config import ConfigError, SimConfig, load_config
from .engine import run, write_metrics_csv
from .graph import write_topology
from .mobility import GeometryError, RoadGrid, generate_grid_trace, save_trace
from .theory import Regime, degree_pdf, regime_for, tunable_params


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")
    try:
        return [float(t) for t in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers: {text!r}")
    return [int(v) for v in vals]


def _provenance(command: str, payload: dict) -> list[str]:
    return [f"vanetsched {__version__} {command} " + json.dumps(payload, sort_keys=True)]


def _resolve_config(args) -> SimConfig:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_config(args.config, overrides)


def _write_manifest(out: Path, command: str, config: dict, seeds, outputs: list[str], started: float) -> None:
    missing = [name for name in outputs if not (out / name).is_file()]
    if missing:
        raise RuntimeError(f"outputs missing after run: {missing}")
    manifest = {
        "tool": "vanetsched",
        "version": __version__,
        "command": command,
        "config": config,
        "seeds": seeds,
        "outputs": outputs,
        "duration_s": round(time.perf_counter() - started, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_grow(args) -> int:
    started = time.perf_counter()
    cfg = _resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records, state = run(cfg)
    prov = _provenance("grow", {"config": cfg.as_dict()})
    write_metrics_csv(out / "metrics.csv", records, prov)
    write_topology(out / "topology.txt", state.graph, state.node_table(), prov)
    hist = degree_histogram(state.graph, args.binning)
    (out / "degree_hist.csv").write_text(hist.to_csv(prov), encoding="utf-8")
    outputs = ["metrics.csv", "topology.txt", "degree_hist.csv"]
    _write_manifest(out, "grow", cfg.as_dict(), [cfg.seed], outputs, started)
    return 0


def _trial_seeds(cfg: SimConfig, trials: int) -> list[int]:
    return [trial_config(cfg, t).seed for t in range(trials)]


def cmd_attack(args) -> int:
    started = time.perf_counter()
    cfg = _resolve_config(args)
    for f in args.f:
        if not 0.0 < f < 1.0:
            raise UsageError(f"attack intensities must lie in (0, 1), got {f}")
    for p in args.p:
        cfg.replace(p=p).validate()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = attack_sweep(cfg, args.p, args.f, args.trials, jobs=args.jobs)
    prov = _provenance("attack", {"config": cfg.as_dict(), "p": args.p, "f": args.f, "trials": args.trials})
    (out / "attack.csv").write_text(rows_csv(rows, prov), encoding="utf-8")
    _write_manifest(out, "attack", cfg.as_dict(), _trial_seeds(cfg, args.trials), ["attack.csv"], started)
    return 0


def cmd_paths(args) -> int:
    started = time.perf_counter()
    cfg = _resolve_config(args)
    for p in args.p:
        for m in args.m:
            cfg.replace(p=p, m=m).validate()
    if args.window < 1 or args.window > cfg.steps:
        raise UsageError(f"--window must lie in [1, steps={cfg.steps}], got {args.window}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = apl_sweep(cfg, args.p, args.m, args.window, args.trials, jobs=args.jobs)
    prov = _provenance(
        "paths",
        {"config": cfg.as_dict(), "p": args.p, "m": args.m, "window": args.window, "trials": args.trials},
    )
    (out / "apl.csv").write_text(rows_csv(rows, prov), encoding="utf-8")
    _write_manifest(out, "paths", cfg.as_dict(), _trial_seeds(cfg, args.trials), ["apl.csv"], started)
    return 0


def theory_table(m: int, p: float, k_max: float, k_step: float = 1.0) -> str:
    regime = regime_for(p)
    head = f"regime={regime.value} m={m} p={p!r}"
    if regime is Regime.EXPONENTIAL:
        head += f" rate={1.0 / m!r}"
    elif regime is Regime.POWER_LAW:
        head += " gamma=3.0 a=0.0"
    else:
        c = tunable_params(m, p)
        head += f" gamma={c.gamma!r} a={c.a!r} A={c.A!r} B={c.B!r} beta={c.beta!r} C={c.C!r}"
    lines = [f"# {head}", "k,P"]
    for k in np.arange(m, k_max + k_step / 2, k_step):
        lines.append(f"{float(k)!r},{degree_pdf(float(k), m, p)!r}")
    return "\n".join(lines) + "\n"


def cmd_theory(args) -> int:
    started = time.perf_counter()
    if args.m < 1:
        raise UsageError("--m must be positive")
    if args.k_max < args.m:
        raise UsageError(f"--k-max ({args.k_max}) must be at least m ({args.m})")
    if args.k_step <= 0:
        raise UsageError("--k-step must be positive")
    for p in args.p:
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"p must lie in [0, 1], got {p}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for p in args.p:
        name = f"theory_p{p:g}.csv"
        (out / name).write_text(theory_table(args.m, p, args.k_max, args.k_step), encoding="utf-8")
        outputs.append(name)
    params = {"m": args.m, "p": args.p, "k_max": args.k_max, "k_step": args.k_step}
    _write_manifest(out, "theory", params, [], outputs, started)
    return 0


def cmd_trace_gen(args) -> int:
    try:
        grid = RoadGrid(args.rows, args.cols, args.block_m)
        sites = grid.rsu_sites()
        if args.rsus > len(sites):
            raise UsageError(f"--rsus {args.rsus} exceeds the {len(sites)} available RSU sites")
        trace = generate_grid_trace(
            args.rows,
            args.cols,
            args.block_m,
            args.n_per_step,
            args.steps,
            args.speed,
            args.seed,
            rsu_positions=sites[: args.rsus],
            initial_obus=args.initial_obus,
        )
    except GeometryError as exc:
        raise UsageError(str(exc)) from None
    params = {k: getattr(args, k) for k in ("rows", "cols", "block_m", "n_per_step", "steps", "speed", "seed", "rsus", "initial_obus")}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_trace(trace, out, _provenance("trace-gen", params))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vanetsched", description="Hybrid-attachment VANET topology simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, jobs: bool = False):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config field")
        sp.add_argument("--seed", type=int, help="base seed (overrides config)")
        sp.add_argument("--out", required=True, help="output directory")
        if jobs:
            sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    sp = sub.add_parser("grow", help="run one simulation and export metrics and topology")
    common(sp)
    sp.add_argument("--binning", choices=("unit", "log"), default="log")
    sp.set_defaults(func=cmd_grow)

    sp = sub.add_parser("attack", help="random and targeted attack sweep over p")
    common(sp, jobs=True)
    sp.add_argument("--p", type=_floats, required=True, help="comma-separated p values")
    sp.add_argument("--f", type=_floats, default=list(DEFAULT_INTENSITIES), help="comma-separated intensities")
    sp.add_argument("--trials", type=int, default=10)
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("paths", help="average path length sweep over p and m")
    common(sp, jobs=True)
    sp.add_argument("--p", type=_floats, required=True)
    sp.add_argument("--m", type=_ints, required=True)
    sp.add_argument("--window", type=int, default=10)
    sp.add_argument("--trials", type=int, default=10)
    sp.set_defaults(func=cmd_paths)

    sp = sub.add_parser("theory", help="tabulate theoretical degree densities")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--p", type=_floats, required=True)
    sp.add_argument("--k-max", type=float, required=True)
    sp.add_argument("--k-step", type=float, default=1.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_theory)

    sp = sub.add_parser("trace-gen", help="generate a road-grid mobility trace")
    sp.add_argument("--rows", type=int, default=5)
    sp.add_argument("--cols", type=int, default=6)
    sp.add_argument("--block-m", type=float, default=285.0)
    sp.add_argument("--n-per-step", type=int, default=1)
    sp.add_argument("--steps", type=int, default=300)
    sp.add_argument("--speed", type=float, default=10.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rsus", type=int, default=0)
    sp.add_argument("--initial-obus", type=int, default=0)
    sp.add_argument("--out", required=True, help="trace file to write")
    sp.set_defaults(func=cmd_trace_gen)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be at least 1")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"vanetsched: invalid config: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"vanetsched: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"vanetsched: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
