"""Command-line pipeline: gen-grids, train, run, analyze.

Every stage reads and writes files under ``--out`` (inputs may come from
``--in``)::

    <dir>/grids/grid_000.json
    <dir>/qtables/grid_000_nominal.json, grid_000_constrained.json
    <dir>/trajectories.ndjson, metrics.csv, summary.json
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agents import QPair
from .config import ConfigError, ExperimentConfig, load_config
from .grid import GridSpec
from .harness import (
    LogError,
    analyze,
    generate_grids,
    grid_id,
    read_trajectories,
    run_trajectories,
    train_pair,
    write_outputs,
)
from .rl import QTable, TrainingError


class StageError(Exception):
    pass


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.replace(master_seed=args.seed)
    if args.agents:
        cfg = cfg.replace(agents=tuple(a.strip() for a in args.agents.split(",") if a.strip()))
    return cfg


def _require(path: Path) -> Path:
    if not path.exists():
        raise StageError(f"missing input file: {path}")
    return path


def _grid_files(src: Path) -> list[Path]:
    d = src / "grids"
    if not d.is_dir():
        raise StageError(f"missing input directory: {d}")
    return sorted(d.glob("grid_*.json"))


def _load_grids(src: Path) -> list[GridSpec]:
    return [GridSpec.from_json(p.read_text()) for p in _grid_files(src)]


def cmd_gen_grids(args) -> None:
    cfg = _config(args)
    out = Path(args.out) / "grids"
    out.mkdir(parents=True, exist_ok=True)
    for g, spec in enumerate(generate_grids(cfg)):
        (out / f"{grid_id(g)}.json").write_text(spec.to_json() + "\n")


def cmd_train(args) -> None:
    cfg = _config(args)
    src = Path(args.inp or args.out)
    out = Path(args.out) / "qtables"
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    for g, spec in enumerate(_load_grids(src)):
        pair = train_pair(cfg, spec, g)
        for table in (pair.nominal, pair.constrained):
            (out / f"{grid_id(g)}_{table.variant}.json").write_text(table.to_json() + "\n")
        timings[grid_id(g)] = pair.train_seconds
    # wall-clock, so kept out of the deterministic tables
    (out / "training_time.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")


def cmd_run(args) -> None:
    cfg = _config(args)
    src = Path(args.inp or args.out)
    grids = _load_grids(src)
    qtables = []
    for g in range(len(grids)):
        tables = [
            QTable.from_json(_require(src / "qtables" / f"{grid_id(g)}_{v}.json").read_text())
            for v in ("nominal", "constrained")
        ]
        qtables.append(QPair(*tables))
    trajs = run_trajectories(cfg, grids, qtables, jobs=args.jobs)
    write_outputs(analyze(trajs, cfg.moving_average_window, cfg.tail_window), args.out)


def cmd_analyze(args) -> None:
    cfg = _config(args)
    src = Path(args.inp or args.out)
    trajs = read_trajectories(_require(src / "trajectories.ndjson"))
    report = analyze(trajs, cfg.moving_average_window, cfg.tail_window)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(report.metrics_csv())
    (out / "summary.json").write_text(report.summary_json())


COMMANDS = {
    "gen-grids": cmd_gen_grids,
    "train": cmd_train,
    "run": cmd_run,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sofai", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config (defaults used when omitted)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--in", dest="inp", help="input directory (defaults to --out)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel worker cap for the run stage")
        p.add_argument("--agents", help="comma-separated agent names")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (StageError, ConfigError, LogError, TrainingError, OSError, ValueError) as exc:
        print(f"sofai {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
