"""Command-line entry point: ``fplearn simulate|preset|list-presets|compare``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .config import ConfigError, load_config, load_preset, preset_names
from .experiments import compare_runs, run_experiment, run_replicates

OUT_ENV = "FPLEARN_OUT"

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


def _out_dir(args, cfg):
    return args.out or os.environ.get(OUT_ENV) or cfg.output_dir or str(Path("runs") / cfg.name)


def _report(manifest: dict, elapsed: float):
    print(f"{manifest['name']} ({manifest['engine']}, seed {manifest['seed']}) "
          f"-> {manifest['dir']}  [{elapsed:.1f} s]")
    for f in manifest["files"]:
        print(f"  {f['path']:<24} {f['sha256'][:16]}")
    for key, value in manifest["summary"].items():
        print(f"  {key}: {value}")


def _run(cfg, args):
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = _out_dir(args, cfg)
    start = time.perf_counter()
    if getattr(args, "replicates", 1) > 1:
        manifests = run_replicates(cfg, args.replicates, out)
    else:
        manifests = [run_experiment(cfg, out)]
    elapsed = time.perf_counter() - start
    for m in manifests:
        _report(m, elapsed)


def cmd_simulate(args):
    _run(load_config(args.config), args)


def cmd_preset(args):
    _run(load_preset(args.name), args)


def cmd_list_presets(args):
    for name in preset_names():
        cfg = load_preset(name)
        print(f"{name:<22} {cfg.engine:<10} {cfg.description}")


def cmd_compare(args):
    out = args.out or f"compare-{args.metric}.json"
    try:
        report = compare_runs(args.a, args.b, args.metric, args.t_min, args.t_max, out)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"{args.metric}: t in [{report['t_min']:g}, {report['t_max']:g}], "
          f"{report['samples']} samples")
    for i, (s, r) in enumerate(zip(report["sup"], report["rms"])):
        print(f"  component {i + 1}: sup {s:.6g}  rms {r:.6g}")
    print(f"report written to {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fplearn",
                                     description="Fictitious play in large populations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an experiment configuration file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and the config)")
    p.add_argument("--replicates", type=int, default=1,
                   help="run K seeds (seed, seed+1, ...) into OUT/rep-XXX")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preset", help="run a bundled preset by name")
    p.add_argument("name")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--replicates", type=int, default=1)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("list-presets", help="list bundled presets")
    p.set_defaults(func=cmd_list_presets)

    p = sub.add_parser("compare", help="compare an observable between two runs")
    p.add_argument("--a", required=True, help="manifest.json or run directory")
    p.add_argument("--b", required=True)
    p.add_argument("--metric", required=True, choices=["lambda", "mean_br", "mean_prior"])
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--out", help="report path (default compare-<metric>.json)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - every other failure is a runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
