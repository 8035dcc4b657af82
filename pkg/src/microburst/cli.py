"""Command-line front end: run a configured simulation (or a sweep) and
write its CSV outputs, or run one of the named acceptance checks.

    microburst run config.yaml --out results/
    microburst check law1
    microburst check checks.yaml --seed 7
"""

import argparse
import os
import sys

import yaml

from .checks import CHECKS, run_check
from .config import ConfigError, config_from_dict, load_config
from .scenarios import InvalidParam
from .sim import run_simulation, write_outputs

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2


def _apply_sweep_value(raw: dict, dotted: str, value):
    node = raw
    keys = dotted.split(".")
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _run_one(raw: dict, out_dir: str, seed_override):
    if seed_override is not None:
        raw = dict(raw)
        raw["seed"] = seed_override
    cfg = config_from_dict(raw)
    result = run_simulation(cfg)
    write_outputs(result, out_dir)
    return result


def cmd_run(args) -> int:
    try:
        with open(args.config) as fh:
            raw = yaml.safe_load(fh)
        cfg = config_from_dict(raw)   # validate before any run
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, InvalidParam, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.sweep:
            param = cfg.sweep["param"]
            raw.pop("sweep", None)
            for value in cfg.sweep["values"]:
                point = {k: (dict(v) if isinstance(v, dict) else v)
                         for k, v in raw.items()}
                _apply_sweep_value(point, param, value)
                sub = os.path.join(args.out, f"{param.split('.')[-1]}={value}")
                _run_one(point, sub, args.seed)
                print(f"wrote {sub}")
        else:
            _run_one(raw, args.out, args.seed)
            print(f"wrote {args.out}")
    except (ConfigError, InvalidParam) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:   # simulation failure is an internal error
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_check(args) -> int:
    name = args.target
    seed = args.seed if args.seed is not None else 1
    if name not in CHECKS:
        if os.path.exists(name):
            try:
                with open(name) as fh:
                    raw = yaml.safe_load(fh) or {}
                name = raw.get("check")
                if args.seed is None and "seed" in raw:
                    seed = raw["seed"]
            except yaml.YAMLError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
        if name not in CHECKS:
            print(f"config error: check: unknown check {args.target!r}; "
                  f"available: {', '.join(sorted(CHECKS))}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        result = run_check(name, base_seed=seed)
    except Exception as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    for line in result.lines:
        print(f"  {line}")
    print(f"{'PASS' if result.passed else 'FAIL'}: {result.name}")
    return EXIT_OK if result.passed else EXIT_INTERNAL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="microburst",
        description="Packet-level micro-burst simulator and acceptance checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured simulation or sweep")
    p_run.add_argument("config", help="YAML run configuration")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.set_defaults(fn=cmd_run)

    p_check = sub.add_parser("check", help="run a named acceptance check")
    p_check.add_argument("target",
                         help=f"check name ({', '.join(sorted(CHECKS))}) "
                              f"or a YAML file naming one")
    p_check.add_argument("--seed", type=int, default=None,
                         help="base seed for the check's repetitions")
    p_check.set_defaults(fn=cmd_check)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
