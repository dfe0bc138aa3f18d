"""Command-line interface: run experiments, compare strategies, self-check
the math, and serve the annotation API.

A JSON config file can set any of the protocol/training/selection/synthetic
blocks plus the architecture; every flag overrides the file. The
``EMOCNET_DATA_DIR`` environment variable supplies the default data
directory for ``--data``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys


from .data import SyntheticSpec, load_cifar100_dataset, synthetic_dataset
from .protocol import (
    ProtocolConfig,
    export_results,
    run_experiment,
    summarize,
)
from .selection import SelectionConfig, Strategy
from .training import TrainingConfig

DATA_DIR_ENV = "EMOCNET_DATA_DIR"

_CONFIG_TYPES = {
    "protocol": ProtocolConfig,
    "training": TrainingConfig,
    "selection": SelectionConfig,
    "synthetic": SyntheticSpec,
}


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    out = {}
    for key, cls in _CONFIG_TYPES.items():
        block = dict(raw.get(key, {}))
        if key == "selection" and "strategy" in block:
            block["strategy"] = Strategy(block["strategy"])
        out[key] = cls(**block)
    out["architecture"] = raw.get("architecture")
    return out


def _default_configs() -> dict:
    return {key: cls() for key, cls in _CONFIG_TYPES.items()} | {"architecture": None}


def _parse_seeds(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip() != ""]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--data", help="directory with CIFAR-100 train.bin/test.bin "
                                  f"(default from ${DATA_DIR_ENV})")
    p.add_argument("--synthetic", action="store_true",
                   help="use the synthetic Gaussian-blob dataset")
    p.add_argument("--seeds", help="comma-separated run seeds")
    p.add_argument("--steps", type=int, help="selection-step budget per seed")
    p.add_argument("--out", default="results.csv", help="output CSV path")


def _resolve_dataset(args, cfg):
    if args.synthetic:
        spec: SyntheticSpec = cfg["synthetic"]
        # hold back a third of the per-class count for testing
        return synthetic_dataset(spec, test_per_class=max(spec.samples_per_class // 3, 1))
    data_dir = args.data or os.environ.get(DATA_DIR_ENV)
    if not data_dir:
        raise SystemExit(
            f"no dataset: pass --synthetic, --data, or set ${DATA_DIR_ENV}"
        )
    return load_cifar100_dataset(data_dir)


def _resolve_common(args):
    cfg = load_config(args.config) if args.config else _default_configs()
    if args.steps is not None:
        cfg["protocol"] = dataclasses.replace(cfg["protocol"], steps_budget=args.steps)
    seeds = (_parse_seeds(args.seeds) if args.seeds
             else list(range(cfg["protocol"].num_initializations)))
    return cfg, seeds, _resolve_dataset(args, cfg)


def cmd_run(args) -> int:
    cfg, seeds, data = _resolve_common(args)
    strategy = Strategy(args.strategy)
    records = run_experiment(data, cfg["protocol"], cfg["training"],
                             cfg["selection"], strategy, seeds,
                             arch=cfg["architecture"])
    export_results(records, args.out)
    _print_summary(records)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_compare(args) -> int:
    cfg, seeds, data = _resolve_common(args)
    strategies = [Strategy(s) for s in args.strategies.split(",")]
    records = []
    for strategy in strategies:
        records.extend(
            run_experiment(data, cfg["protocol"], cfg["training"],
                           cfg["selection"], strategy, seeds,
                           arch=cfg["architecture"])
        )
    export_results(records, args.out)
    _print_summary(records)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _print_summary(records) -> None:
    for strategy, curves in summarize(records).items():
        final_acc = curves["mean_accuracy_pct"][-1]
        final_disc = curves["mean_discovered_classes"][-1]
        print(f"{strategy}: final accuracy {final_acc:.2f}%, "
              f"discovered {final_disc:.1f} classes "
              f"({curves['num_seeds']} seed(s))")


def cmd_check(args) -> int:
    """Gradient/Jacobian/score self-tests against independent oracles."""
    from .selfcheck import run_self_checks

    ok = run_self_checks(verbose=True)
    return 0 if ok else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    frontend = args.frontend_dir if args.frontend_dir and \
        os.path.isdir(args.frontend_dir) else None
    app = create_app(state_dir=args.state_dir, cors_origin=args.cors_origin,
                     frontend_dir=frontend)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emocnet",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one strategy over seeds")
    _add_run_flags(run_p)
    run_p.add_argument("--strategy", default="emoc",
                       choices=[s.value for s in Strategy])
    run_p.set_defaults(func=cmd_run)

    cmp_p = sub.add_parser("compare", help="run several strategies on shared seeds")
    _add_run_flags(cmp_p)
    cmp_p.add_argument("--strategies",
                       default=",".join(s.value for s in Strategy),
                       help="comma-separated strategy names")
    cmp_p.set_defaults(func=cmd_compare)

    chk_p = sub.add_parser("check", help="run gradient and score self-tests")
    chk_p.set_defaults(func=cmd_check)

    srv_p = sub.add_parser("serve", help="serve the annotation HTTP API")
    srv_p.add_argument("--port", type=int, default=8000)
    srv_p.add_argument("--host", default="127.0.0.1")
    srv_p.add_argument("--state-dir", default="./emocnet-state")
    srv_p.add_argument("--cors-origin", default=None)
    srv_p.add_argument("--frontend-dir", default="./frontend/dist",
                       help="static UI bundle to serve at / (if present)")
    srv_p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
