"""Command line entry point: ``tdqmc run | compare | presets | inspect-checkpoint``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import presets
from .config import ConfigError, dump_config, env_overrides, from_mapping, load_config
from .engine import load_checkpoint
from .runner import SchemaError, compare_runs, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def _parse_sets(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"{item}: expected key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = yaml.safe_load(value)
    return out


def _configs_for(args) -> list:
    overrides = _parse_sets(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config:
        return [load_config(args.config, overrides)]
    if args.preset:
        try:
            configs = presets.expand(args.preset, args.profile)
        except KeyError as exc:
            raise ConfigError(f"preset: {exc.args[0]}") from exc
        overrides = {**env_overrides(), **overrides}
        if overrides:
            configs = [from_mapping({**c.to_mapping(), **overrides}) for c in configs]
        return configs
    raise ConfigError("run: give --config or --preset")


def cmd_run(args) -> int:
    configs = _configs_for(args)
    for cfg in configs:
        out = Path(args.out) / cfg.name if args.out else None
        outcome = run_experiment(cfg, out)
        g = outcome.ground
        print(f"{cfg.name}: E0={g.energy:.6f} +- {g.energy_error:.1e}  alpha_opt={g.alpha_opt:.3g}  "
              f"S_L={g.linear_entropy:.5f}  -> {outcome.out_dir}")
        if outcome.records:
            last = outcome.records[-1]
            print(f"  t={last.t:.2f}  S_L={np.round(last.linear_entropy, 5).tolist()}  absorbed={last.absorbed:.3f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    rows = compare_runs(args.run, args.reference)
    failed = False
    for r in rows:
        mx = "-" if r.max_deviation is None else f"{r.max_deviation:.3e}"
        thr = "-" if r.threshold is None else f"{r.threshold:.1e}"
        print(f"{r.observable:24s} max={mx:>10s} threshold={thr:>8s}  {r.status}")
        failed |= r.status == "fail"
    return EXIT_ACCEPTANCE if failed else EXIT_OK


def cmd_presets(args) -> int:
    if args.dump:
        try:
            configs = presets.expand(args.dump, args.profile)
        except KeyError as exc:
            raise ConfigError(f"preset: {exc.args[0]}") from exc
        out = Path(args.out or ".")
        out.mkdir(parents=True, exist_ok=True)
        for cfg in configs:
            path = out / f"{cfg.name}.yaml"
            dump_config(cfg, path)
            print(path)
        return EXIT_OK
    for name, text in presets.DESCRIPTIONS.items():
        n = len(presets.expand(name, args.profile))
        print(f"{name}  ({n} runs)  {text}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    state, header = load_checkpoint(args.path)
    norms = state.grid.norm(state.fields)
    info = {
        "version": header["version"],
        "t": state.t,
        "particles": state.n_particles,
        "walkers": state.n_walkers,
        "grid": header["grid"],
        "dtype": str(state.fields.dtype),
        "norm_range": [float(norms.min()), float(norms.max())],
        "walker_mean": state.positions.mean(axis=1).tolist(),
        "walker_std": state.positions.std(axis=1).tolist(),
        "counters": state.counters,
        "meta": header.get("meta", {}),
    }
    print(json.dumps(info, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdqmc", description="Walker/guide-wave quantum Monte Carlo for 1D model atoms")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one config file or every config of a preset")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--config", help="YAML config file")
    src.add_argument("--preset", choices=sorted(presets.PRESETS))
    run.add_argument("--profile", choices=presets.PROFILES, default="desk")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory (one subdirectory per run)")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="deviation report of a run against its reference")
    cmp_.add_argument("run")
    cmp_.add_argument("reference", nargs="?", help="another run directory (default: the run's own oracle files)")
    cmp_.set_defaults(func=cmd_compare)

    pre = sub.add_parser("presets", help="list presets or dump their configs")
    pre.add_argument("--dump", metavar="NAME")
    pre.add_argument("--profile", choices=presets.PROFILES, default="desk")
    pre.add_argument("--out")
    pre.set_defaults(func=cmd_presets)

    ins = sub.add_parser("inspect-checkpoint", help="summarize a checkpoint file")
    ins.add_argument("path")
    ins.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
