"""Command line entry point: ``dynsample run | sweep | compare``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import BudgetExhausted, ConfigError, ContractViolation, InitializationError
from .harness import (ALL_STRATEGIES, Experiment, config_from_dict, load_config,
                      read_metrics_csv, write_outputs)

log = logging.getLogger("dynsample")

SUMMARY_COLUMNS = (
    "run", "strategy", "objective", "estimator_mode", "seed", "steps",
    "final_validation_proxy", "mean_effective_ratio", "final50_effective_ratio",
    "final_cumulative_rollouts", "mean_regret", "final100_regret", "mean_batch_signal_proxy",
)


def _run_one(config, out_dir: Path) -> Path:
    exp = Experiment(config)
    metrics = exp.run()
    return write_outputs(metrics, config, out_dir, exp.store)


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    out = args.out or config.output
    if out is None:
        raise ConfigError("no output directory: pass --out or set 'output' in the config")
    config.output = str(out)
    path = _run_one(config.validate(), Path(out))
    print(path)
    return 0


def cmd_sweep(args) -> int:
    base = load_config(args.config)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    bad = [s for s in strategies if s not in ALL_STRATEGIES]
    if bad:
        raise ConfigError(f"unknown strategies {bad}; expected a subset of {ALL_STRATEGIES}")
    if args.seeds < 1:
        raise ConfigError("--seeds must be >= 1")
    root = Path(args.out or base.output or "sweep")
    run_dirs = []
    for strategy in strategies:
        for seed in range(args.seed_offset, args.seed_offset + args.seeds):
            out = root / strategy / f"seed_{seed}"
            cfg = config_from_dict({**base.to_dict(), "strategy": strategy, "seed": seed,
                                    "output": str(out)})
            log.info("running %s seed %d", strategy, seed)
            run_dirs.append(_run_one(cfg, out))
    summary = root / "summary.csv"
    write_summary(summarize(run_dirs), summary)
    print(summary)
    return 0


def summarize(run_dirs) -> list[dict]:
    rows = []
    for d in run_dirs:
        d = Path(d)
        try:
            cfg = json.loads((d / "config.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{d}: cannot read config.json: {exc}") from exc
        metrics = read_metrics_csv(d / "metrics.csv")
        if not metrics:
            raise ContractViolation(f"{d}: metrics.csv has no rows")
        f = np.array([m.effective_ratio for m in metrics])
        regret = np.array([m.regret for m in metrics])
        rows.append({
            "run": str(d),
            "strategy": cfg.get("strategy"),
            "objective": cfg.get("objective"),
            "estimator_mode": cfg.get("estimator_mode"),
            "seed": cfg.get("seed"),
            "steps": len(metrics),
            "final_validation_proxy": metrics[-1].validation_proxy,
            "mean_effective_ratio": float(f.mean()),
            "final50_effective_ratio": float(f[-50:].mean()),
            "final_cumulative_rollouts": metrics[-1].cumulative_rollouts,
            "mean_regret": float(regret.mean()),
            "final100_regret": float(regret[-100:].mean()),
            "mean_batch_signal_proxy": float(np.mean([m.batch_signal_proxy for m in metrics])),
        })
    return rows


def write_summary(rows, dest) -> None:
    fh = sys.stdout if dest is None else open(dest, "w", newline="")
    try:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if dest is not None:
            fh.close()


def cmd_compare(args) -> int:
    write_summary(summarize(args.runs), args.out)
    if args.out:
        print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynsample", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run several strategies over several seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--strategies", default=",".join(ALL_STRATEGIES))
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed-offset", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="summarize finished runs as CSV")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--out", help="write the summary here instead of stdout")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ContractViolation, InitializationError, BudgetExhausted, OSError) as exc:
        print(f"dynsample: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
