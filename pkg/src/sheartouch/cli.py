"""Command-line front end.

Subcommands: ``gen``, ``train``, ``eval``, ``follow``, ``project``.  Exit codes:
0 success, 1 usage or config error, 2 numerical failure, 3 task failure.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import features as F
from .config import ExperimentConfig, load_config, parse_overrides
from .control import follow_contour, oracle_perceiver, trajectory_metrics, write_trajectory_csv
from .datasets import (collect_multidirectional_set, collect_training_set, read_dataset_csv,
                       write_dataset_csv)
from .errors import ConfigError, FitError, InputError, TaskFailure
from .model_io import load_model, save_model
from .perception import (BaselineModel, evaluate_offline, fit_baseline_model, fit_perception,
                         write_long_csv, write_table_csv)
from .shapes import Shape2D, load_polyline

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_TASK = 0, 1, 2, 3

SHAPE_FLAGS = {  # flag dest -> config key
    "width": "rect_width", "height": "rect_height", "radius": "circle_radius",
    "r0": "flower_r0", "amp": "flower_amp", "spiral_a": "spiral_a",
    "spiral_b": "spiral_b", "turns": "spiral_turns", "spiral_width": "spiral_width",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output directory (overrides config 'out')")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key; repeatable")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="sheartouch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a dataset CSV")
    g.add_argument("kind", choices=["train", "multidir"])
    g.add_argument("--output", help="dataset path (default <out>/<kind>.csv)")

    t = sub.add_parser("train", parents=[common], help="fit the pose model")
    t.add_argument("--data", help="training CSV (generated from the config if omitted)")
    t.add_argument("--model", help="model path (default <out>/model.txt)")
    t.add_argument("--baseline", action="store_true",
                   help="also fit the raw-pin baseline into <out>/baseline.txt")

    e = sub.add_parser("eval", parents=[common], help="offline evaluation on the multidirectional set")
    e.add_argument("--model", help="model path (default <out>/model.txt)")
    e.add_argument("--data", help="multidirectional CSV (generated if omitted)")
    e.add_argument("--baseline", action="store_true", help="add the baseline model row")
    e.add_argument("--baseline-model", help="baseline path (default <out>/baseline.txt)")
    e.add_argument("--include-no-contact", action="store_true",
                   help="keep frames taken beyond the contact range")

    f = sub.add_parser("follow", parents=[common], help="closed-loop contour following")
    f.add_argument("--model", help="model path (default <out>/model.txt)")
    f.add_argument("--shape", choices=["rect", "circle", "flower", "spiral", "polyline"],
                   default="circle")
    f.add_argument("--width", type=float, help="rectangle width, mm")
    f.add_argument("--height", type=float, help="rectangle height, mm")
    f.add_argument("--radius", type=float, help="circle radius, mm")
    f.add_argument("--r0", type=float, help="flower base radius, mm")
    f.add_argument("--amp", type=float, help="flower lobe amplitude, mm")
    f.add_argument("--spiral-a", type=float, help="spiral start radius, mm")
    f.add_argument("--spiral-b", type=float, help="spiral growth per radian, mm")
    f.add_argument("--turns", type=float, help="spiral turns")
    f.add_argument("--spiral-width", type=float, help="spiral strip width, mm")
    f.add_argument("--vertices", help="polyline CSV of x,y vertices")
    f.add_argument("--start", help="start point 'x,y' in mm (default: on the boundary)")
    f.add_argument("--steps", type=int, help="step budget (default max_steps)")
    f.add_argument("--oracle", action="store_true", help="use true poses instead of the model")

    p = sub.add_parser("project", parents=[common], help="PC-plane scatter export")
    p.add_argument("--model", help="model path (default <out>/model.txt)")
    p.add_argument("--data", help="dataset CSV to project (multidirectional set if omitted)")
    p.add_argument("--train-data", help="training CSV used for a 5-component basis")
    p.add_argument("--components", default="2,3",
                   help="comma-separated 1-based components, 1..5 (default 2,3)")
    return parser


# -- helpers -----------------------------------------------------------------

def resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    pairs = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        pairs[k.strip()] = v
    config = parse_overrides(pairs, config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    for dest, key in SHAPE_FLAGS.items():
        if getattr(args, dest, None) is not None:
            changes[key] = getattr(args, dest)
    return config.replace(**changes) if changes else config


def write_run_metadata(out: Path, command: str, config: ExperimentConfig, argv, extra=None):
    lines = [
        f"command = {command}",
        f"argv = {' '.join(argv)}",
        f"timestamp = {time.strftime('%Y-%m-%dT%H:%M:%S%z')}",
        f"config_digest = {config.digest()}",
        f"seed = {config.seed}",
    ]
    lines += [f"{k} = {v}" for k, v in (extra or {}).items()]
    lines += ["", "# config"] + config.to_text().splitlines()
    (out / f"{command}_run.txt").write_text("\n".join(lines) + "\n")


def _dataset(path, kind, config):
    if path:
        return read_dataset_csv(path)
    return collect_training_set(config) if kind == "train" else collect_multidirectional_set(config)


def _model_path(args, out):
    return Path(args.model) if args.model else out / "model.txt"


# -- commands ----------------------------------------------------------------

def cmd_gen(args, config, out):
    ds = _dataset(None, args.kind, config)
    path = Path(args.output) if args.output else out / f"{args.kind}.csv"
    write_dataset_csv(ds, path)
    print(f"{len(ds)} frames -> {path}")
    return {"frames": len(ds), "dataset": path}


def cmd_train(args, config, out):
    train = _dataset(args.data, "train", config)
    model = fit_perception(train, restarts=config.gp_restarts, seed=config.seed)
    model.meta["config_digest"] = config.digest()
    path = _model_path(args, out)
    save_model(model, path)
    print(f"model -> {path} (explained variance {np.round(model.basis.explained_variance_ratio, 3)})")
    info = {"model": path}
    if args.baseline:
        base = fit_baseline_model(train, restarts=config.gp_restarts, seed=config.seed)
        bpath = out / "baseline.txt"
        save_model(base, bpath)
        print(f"baseline -> {bpath}")
        info["baseline"] = bpath
    return info


def cmd_eval(args, config, out):
    from .plotting import plot_eval_table

    model = load_model(_model_path(args, out))
    baseline = None
    if args.baseline:
        baseline = load_model(args.baseline_model or out / "baseline.txt")
        if not isinstance(baseline, BaselineModel):
            raise InputError("--baseline-model does not hold a baseline model")
    multi = _dataset(args.data, "multidir", config)
    reports = evaluate_offline(model, baseline, multi, args.include_no_contact)
    write_table_csv(reports, out / "eval_table.csv")
    write_long_csv(reports, out / "eval_long.csv")
    plot_eval_table(reports, out / "eval_table.svg")
    for r in reports:
        if r is not None:
            print(f"{r.model_name}: On {r.mean_rms('On'):.2f} deg, Off {r.mean_rms('Off'):.2f} deg, "
                  f"lateral {r.lateral_rms_mm:.2f} mm")
    return {"table": out / "eval_table.csv"}


def _parse_start(text):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"--start expects 'x,y', got {text!r}") from None
    return np.array([x, y])


def cmd_follow(args, config, out):
    from .plotting import plot_trajectory

    vertices = load_polyline(args.vertices) if args.vertices else None
    shape = Shape2D.from_config(args.shape, config, vertices)
    model = None if args.oracle else load_model(_model_path(args, out))
    start = _parse_start(args.start) if args.start else None
    failure = None
    try:
        log = follow_contour(model, shape, start, args.steps, config,
                             perceiver=oracle_perceiver if args.oracle else None)
    except TaskFailure as exc:
        failure, log = exc, exc.log
    write_trajectory_csv(log, out / "trajectory.csv")
    plot_trajectory(log, shape, out / "trajectory.svg")
    m = trajectory_metrics(log, shape)
    print(f"{shape.kind}: {m.n_steps} steps, {log.stop_reason}; orientation RMS "
          f"{m.orientation_rms_deg:.2f} deg, max deviation {m.max_deviation_mm:.2f} mm, "
          f"closure {m.loop_closure_mm:.2f} mm")
    info = {"shape": shape.kind, "steps": m.n_steps, "stop_reason": log.stop_reason,
            "orientation_rms_deg": repr(m.orientation_rms_deg),
            "max_deviation_mm": repr(m.max_deviation_mm),
            "loop_closure_mm": repr(m.loop_closure_mm)}
    if failure is not None:
        raise TaskFailure(str(failure), info)
    return info


def parse_components(text):
    try:
        comps = [int(c) for c in text.split(",") if c.strip()]
    except ValueError:
        raise InputError(f"--components expects integers, got {text!r}") from None
    if len(comps) < 2 or any(not 1 <= c <= 5 for c in comps):
        raise InputError("--components needs at least two values in 1..5")
    return comps


def cmd_project(args, config, out):
    from .plotting import plot_pc_scatter

    comps = parse_components(args.components)
    data = _dataset(args.data, "multidir", config)
    if max(comps) <= 3:
        basis = load_model(_model_path(args, out)).basis
    else:
        basis = F.fit_pca(_dataset(args.train_data, "train", config), 5)
    P = F.project(basis, data.frames)[:, [c - 1 for c in comps]]
    path = out / "pc_scatter.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_id", "orientation_deg", "lateral_mm", "slide_dir_deg"]
                        + [f"pc{c}" for c in comps])
        for i in range(len(data)):
            sd = data.slide_dir[i]
            writer.writerow([i, repr(float(data.orientation[i])), repr(float(data.lateral[i])),
                             "" if np.isnan(sd) else repr(float(sd))]
                            + [repr(float(v)) for v in P[i]])
    plot_pc_scatter(P[:, :2], data.orientation, out / "pc_scatter.svg", comps[:2])
    print(f"{len(data)} points on PC{','.join(map(str, comps))} -> {path}")
    return {"components": args.components, "scatter": path}


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval,
            "follow": cmd_follow, "project": cmd_project}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        info = COMMANDS[args.command](args, config, out)
        write_run_metadata(out, args.command, config, argv, info)
        return EXIT_OK
    except (ConfigError, InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TaskFailure as exc:
        write_run_metadata(out, args.command, config, argv, exc.log)
        print(f"task failure: {exc}", file=sys.stderr)
        return EXIT_TASK


if __name__ == "__main__":
    sys.exit(main())
