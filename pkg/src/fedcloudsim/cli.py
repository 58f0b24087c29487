"""Experiment runner: sweeps federation cells and writes the reports.

Outputs under the chosen directory:

* ``reports.csv``    one deterministic row per cell
* ``timings.csv``    wall-clock delays per cell (nondeterministic)
* ``cells/*.json``   full structured report per cell
* ``logs/*.migrations.log``  line-oriented migration event streams
* ``plots/*.csv``    per-metric series, one row per allocator, one
                     column per federation model

Exit codes: 0 success, 1 configuration error, 2 partial sweep failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
import traceback

import yaml

from .engine import run_simulation
from .metrics import SimulationReport
from .model import ConfigurationError
from .presets import ExperimentConfig, config_from_dict, preset, presets

ENV_OUTPUT_DIR = "FEDCLOUDSIM_OUT"
ENV_SEED = "FEDCLOUDSIM_SEED"

PLOT_METRICS = (
    "pms_used_before", "pms_used_after",
    "energy_before_kwh", "energy_after_kwh",
    "sla_violation_pct", "migration_count",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedcloudsim",
        description="Federated-datacenter workload allocation experiments.",
    )
    parser.add_argument("--config", help="YAML experiment config")
    parser.add_argument("--preset", help="named preset as the base config")
    parser.add_argument("--allocator", action="append",
                        help="restrict the sweep to this scheme (repeatable)")
    parser.add_argument("--model", action="append",
                        help="restrict the sweep to this federation model")
    parser.add_argument("--workload", action="append",
                        help="restrict the sweep to this workload class")
    parser.add_argument("--seed", type=int, help="experiment RNG seed")
    parser.add_argument("--reps", type=int, help="timing repetition count")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="concurrent cell limit")
    parser.add_argument("--list-presets", action="store_true",
                        help="print preset names and exit")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = preset(args.preset) if args.preset else None
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigurationError(f"config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigurationError("config: top level must be a mapping")
        cfg = config_from_dict(data, base=cfg)
    if cfg is None:
        raise ConfigurationError("either --preset or --config is required")
    if args.allocator:
        wanted = [a.lower() for a in args.allocator]
        cfg.allocators = [a for a in cfg.allocators if a in wanted]
        if not cfg.allocators:
            raise ConfigurationError("allocator filter matches nothing")
    if args.model:
        cfg.models = [m for m in cfg.models if m in args.model]
        if not cfg.models:
            raise ConfigurationError("model filter matches nothing")
    if args.workload:
        cfg.workload_classes = [w for w in cfg.workload_classes if w in args.workload]
        if not cfg.workload_classes:
            raise ConfigurationError("workload filter matches nothing")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.reps is not None:
        cfg.repetitions = args.reps
    if args.out:
        cfg.output_dir = args.out
    if args.workers is not None:
        cfg.workers = args.workers
    if ENV_SEED in os.environ:
        cfg.seed = int(os.environ[ENV_SEED])
    if ENV_OUTPUT_DIR in os.environ:
        cfg.output_dir = os.environ[ENV_OUTPUT_DIR]
    cfg.validate()
    return cfg


def _run_cell(cfg: ExperimentConfig, model, allocator, workload, vms):
    fed = cfg.federation_config(model, allocator)
    return run_simulation(fed, vms, workload_class=workload)


def run_experiment(cfg: ExperimentConfig):
    """Execute every cell; returns (reports, failures)."""
    workloads = {w: cfg.build_workload(w) for w in cfg.workload_classes}
    cells = cfg.cells()
    reports: dict[tuple, SimulationReport] = {}
    failures: dict[tuple, str] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = {
            pool.submit(_run_cell, cfg, model, allocator, workload,
                        workloads[workload]): (model, allocator, workload)
            for model, allocator, workload in cells
        }
        for future in concurrent.futures.as_completed(futures):
            cell = futures[future]
            try:
                reports[cell] = future.result()
            except Exception:
                failures[cell] = traceback.format_exc()
    ordered = [reports[c] for c in cells if c in reports]
    return ordered, failures


def write_outputs(cfg: ExperimentConfig, reports):
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    os.makedirs(os.path.join(out, "cells"), exist_ok=True)
    os.makedirs(os.path.join(out, "logs"), exist_ok=True)
    os.makedirs(os.path.join(out, "plots"), exist_ok=True)

    with open(os.path.join(out, "reports.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SimulationReport.CSV_COLUMNS)
        for report in reports:
            writer.writerow(report.csv_row())

    with open(os.path.join(out, "timings.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SimulationReport.TIMING_COLUMNS)
        for report in reports:
            writer.writerow(report.timing_csv_row())

    for report in reports:
        cell_path = os.path.join(out, "cells", f"{report.cell_id}.json")
        with open(cell_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        log_path = os.path.join(out, "logs", f"{report.cell_id}.migrations.log")
        with open(log_path, "w", encoding="utf-8") as fh:
            for event in report.migration_events:
                fh.write(event.as_line() + "\n")

    _write_plot_data(cfg, reports, os.path.join(out, "plots"))


def _write_plot_data(cfg, reports, plot_dir):
    by_cell = {(r.model, r.allocator, r.workload_class): r for r in reports}
    for workload in cfg.workload_classes:
        for metric in PLOT_METRICS:
            path = os.path.join(plot_dir, f"{workload}_{metric}.csv")
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["allocator"] + list(cfg.models))
                for allocator in cfg.allocators:
                    row = [allocator]
                    for model in cfg.models:
                        report = by_cell.get((model, allocator, workload))
                        row.append("" if report is None
                                   else getattr(report, metric))
                    writer.writerow(row)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_presets:
        for name in sorted(presets()):
            print(name)
        return 0
    try:
        cfg = resolve_config(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    reports, failures = run_experiment(cfg)
    write_outputs(cfg, reports)
    print(f"{len(reports)} cell(s) completed, output in {cfg.output_dir}")
    if failures:
        for cell, trace in sorted(failures.items()):
            print(f"cell {cell} failed:\n{trace}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
