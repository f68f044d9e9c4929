"""Command line entry point: ``radarsense <subcommand>``.

Exit codes: 0 success, 2 validation error, 3 experiment error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import rng
from .clustering import evaluate_run
from .errors import ExperimentError, ValidationError
from .fast import analyze, load_samples_csv
from .pipeline import (
    ExperimentConfig,
    build_scenario,
    load_config,
    run_experiment,
    sample_matrix,
    scenario_hits,
    simulate,
)
from .radar import load_detections, save_detections
from .scenario import load_trajectory, save_trajectory

EXIT_OK, EXIT_VALIDATION, EXIT_EXPERIMENT = 0, 2, 3


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    if getattr(args, "mode", None) is not None:
        changes["mode"] = args.mode
    return cfg.replace(**changes) if changes else cfg


def _parse_assignments(items) -> dict[str, float]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"expected name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise ValidationError(f"not a number: {item!r}") from None
    return out


def cmd_scenario(args) -> None:
    if args.inspect:
        sc = load_trajectory(args.inspect)
        ranges = [np.hypot(f.target.x - f.ego.x, f.target.y - f.ego.y) for f in sc.frames]
        print(json.dumps({"frames": len(sc), "dt": sc.dt, "duration": sc.frames[-1].t,
                          "range_min": float(min(ranges)), "range_max": float(max(ranges))}, indent=2))
        return
    if not args.out:
        raise ValidationError("scenario: give --out to generate or --inspect to read")
    sc = build_scenario(_config(args))
    out = Path(args.out)
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "trajectory.csv"
    save_trajectory(sc, out)
    print(f"wrote {len(sc)} frames to {out}")


def cmd_simulate(args) -> None:
    cfg = _config(args)
    sc = build_scenario(cfg)
    params = cfg.reference.truth.replace(**_parse_assignments(args.param))
    frames = simulate(sc, scenario_hits(sc, cfg.constants), params, cfg.constants,
                      cfg.seed, rng.STREAM_RUN, args.run_id)
    out = Path(args.out or "detections.csv")
    save_detections(frames, out)
    print(f"wrote {sum(len(f) for f in frames)} detections over {len(frames)} frames to {out}")


def cmd_evaluate(args) -> None:
    sim = load_detections(args.sim)
    ref = load_detections(args.ref)
    # align on the union of frame times; a frame missing from one file is empty there
    times = sorted({f.frame_t for f in sim} | {f.frame_t for f in ref})
    sim = load_detections(args.sim, frame_times=times)
    ref = load_detections(args.ref, frame_times=times)
    summary = evaluate_run(sim, ref, args.k, args.kmeans_seed)
    text = json.dumps({"skipped_frames": summary.skipped, "min": summary.min, "mean": summary.mean,
                       "max": summary.max, "per_frame_distance": list(summary.per_frame_distance)},
                      indent=2)
    _emit(text, args.out)


def cmd_sample(args) -> None:
    cfg = _config(args)
    matrix = sample_matrix(cfg)
    out = Path(args.out or "samples.csv")
    matrix.to_csv(out)
    print(f"wrote {len(matrix)} rows x {matrix.n_params} parameters to {out}")


def cmd_sensitivity(args) -> None:
    matrix = load_samples_csv(args.samples, args.interference)
    with open(args.outputs, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValidationError(f"{args.outputs}: no rows")
    columns = [c for c in rows[0] if c != "run_id"]
    metrics = [args.metric] if args.metric else (columns if args.mode == "all" else [args.mode or columns[0]])
    result = {}
    for metric in metrics:
        if metric not in columns:
            raise ValidationError(f"{args.outputs}: no column {metric!r} (have {columns})")
        try:
            order = sorted(rows, key=lambda r: int(r["run_id"])) if "run_id" in rows[0] else rows
            y = np.array([float(r[metric]) for r in order])
        except ValueError as exc:
            raise ValidationError(f"{args.outputs}: {exc}") from None
        result[metric] = analyze(matrix, y, args.interference).to_dict()
    text = json.dumps(result[metrics[0]] if len(metrics) == 1 else result, indent=2)
    _emit(text, args.out)


def cmd_run(args) -> None:
    cfg = _config(args)
    out = args.out or cfg.output_dir
    result = run_experiment(cfg, out)
    print(f"{len(result.records)} runs, {result.n_flagged} flagged; results in {out}")
    for mode, res in result.results.items():
        print(f"[{mode}]")
        for name, p in res.indices.items():
            flag = "  (flagged)" if p.flagged else ""
            print(f"  {name:14s} S={p.s_first:7.3f}  ST={p.s_total:7.3f}  ST-S={p.interaction:7.3f}{flag}")


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--seed", type=int, help="master seed (u64)")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--mode", choices=["min", "mean", "max", "all"], help="aggregation mode")

    p = argparse.ArgumentParser(prog="radarsense", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scenario", parents=[common], help="generate or inspect a trajectory")
    s.add_argument("--inspect", metavar="CSV", help="summarize an existing trajectory file")
    s.set_defaults(func=cmd_scenario)

    s = sub.add_parser("simulate", parents=[common], help="one parameter set -> detection CSV")
    s.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="override a truth parameter (repeatable)")
    s.add_argument("--run-id", type=int, default=0)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("evaluate", parents=[common], help="two detection CSVs -> evaluation summary JSON")
    s.add_argument("sim")
    s.add_argument("ref")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--kmeans-seed", type=int, default=0)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sample", parents=[common], help="emit the eFAST sample matrix CSV")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("sensitivity", parents=[common], help="outputs CSV -> sensitivity indices JSON")
    s.add_argument("--samples", required=True)
    s.add_argument("--outputs", required=True, help="CSV with run_id and one column per metric")
    s.add_argument("--metric", help="column to analyze (default: the first, or all with --mode all)")
    s.add_argument("--interference", type=int, default=4)
    s.set_defaults(func=cmd_sensitivity)

    s = sub.add_parser("run", parents=[common], help="full experiment from a config")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ExperimentError as exc:
        print(f"experiment error: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
