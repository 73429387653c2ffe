"""Command-line experiment driver.

Subcommands: gen-scenes, train, sweep-lambda, sweep-samples, plan-one,
render. Run ``riskplan <subcommand> --help`` for flags.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import planner
from .confidence import estimate_confidence
from .harness import (
    ExperimentConfig,
    run_lambda_sweep,
    run_sample_sweep,
    sample_start_goal,
    test_scene,
    train_models,
    write_summary_csv,
    write_trials_csv,
)
from .ppm import label_map_rgb, overlay_path, scalar_map_rgb, write_ppm
from .riskmap import DEFAULT_LAMBDA, RiskConfig, write_risk_cost_map
from .surprise import run_scenario
from .taxonomy import builtin_aeroscapes_table, load_cost_table, save_cost_table
from .tensorio import read_label_map, read_scalar_map, write_label_map, write_scalar_map
from .toy_perception import (
    classification_accuracy,
    derived_rng,
    generate_scene,
    sample_bootstrap_stack,
    sample_dropout_stack,
    save_classifier,
    save_ensemble,
)


def _size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from exc


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be >= 0")
    return value


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--table", default=None, help="cost-table CSV (default: built-in)")
    p.add_argument("--size", type=_size, default=(48, 48), metavar="HxW")
    p.add_argument("--serial", action="store_true",
                   help="force serial execution regardless of RISKPLAN_THREADS")


def _add_experiment(p: argparse.ArgumentParser) -> None:
    _add_common(p)
    p.add_argument("--scenes", type=int, default=20)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--clutter", type=float, default=0.3)
    p.add_argument("--classes", type=int, default=12)
    p.add_argument("--train-scenes", type=int, default=6)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--dropout-rate", type=float, default=0.5)
    p.add_argument("--passes", type=int, default=5, help="dropout passes T")
    p.add_argument("--bootstraps", type=int, default=5, help="ensemble size K")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)


def _table(args):
    return load_cost_table(args.table) if args.table else builtin_aeroscapes_table()


def _config(args, **overrides) -> ExperimentConfig:
    base = dict(
        scenes=args.scenes, pairs_per_scene=args.pairs, seed=args.seed,
        output_dir=args.out, height=args.size[0], width=args.size[1],
        num_classes=args.classes, clutter=args.clutter,
        train_scenes=args.train_scenes, hidden_units=args.hidden,
        epochs=args.epochs, learning_rate=args.learning_rate,
        dropout_rate=args.dropout_rate, passes=args.passes,
        bootstraps=args.bootstraps, lam=args.lam,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def cmd_gen_scenes(args) -> int:
    table = _table(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.scenes):
        scene = generate_scene(args.size[0], args.size[1], args.classes,
                               args.clutter, [args.seed, 21, i])
        write_label_map(scene.truth, out / f"scene_{i:03d}.lbl")
        write_ppm(label_map_rgb(scene.truth, table), out / f"scene_{i:03d}.ppm")
    print(f"wrote {args.scenes} scenes to {out}")
    return 0


def cmd_train(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _config(args)
    model, ensemble = train_models(config)
    save_classifier(model, out / "model.tny")
    save_ensemble(ensemble, out / "ensemble.tny")
    scenes = [test_scene(config, i) for i in range(min(4, config.scenes))]
    acc = classification_accuracy(model, scenes)
    print(f"wrote model.tny and {len(ensemble)} ensemble members to {out}")
    print(f"held-out accuracy (deterministic forward): {acc:.4f}")
    return 0


def cmd_sweep_lambda(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _config(args, lambda_values=tuple(args.lambdas))
    rows = run_lambda_sweep(config, table=_table(args))
    write_trials_csv(rows, out / "lambda_trials.csv")
    write_summary_csv(rows, out / "lambda_summary.csv")
    print(f"wrote {len(rows)} trial rows to {out / 'lambda_trials.csv'}")
    return 0


def cmd_sweep_samples(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _config(args, pass_counts=tuple(args.pass_counts),
                     bootstrap_counts=tuple(args.bootstrap_counts))
    rows = run_sample_sweep(config, table=_table(args))
    write_trials_csv(rows, out / "samples_trials.csv")
    write_summary_csv(rows, out / "samples_summary.csv")
    print(f"wrote {len(rows)} trial rows to {out / 'samples_trials.csv'}")
    return 0


def cmd_plan_one(args) -> int:
    table = _table(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _config(args, scenes=1)
    scene = test_scene(config, args.scene_id)

    if args.variant == "bootstrap":
        _, ensemble = train_models(config)
        stack = sample_bootstrap_stack(ensemble[:args.bootstraps], scene)
    else:
        model, _ = train_models(config, ensemble_size=1)
        stack = sample_dropout_stack(model, scene, args.passes,
                                     [args.seed, 26, args.scene_id])

    if args.start and args.goal:
        start = planner.PixelCoord(*args.start)
        goal = planner.PixelCoord(*args.goal)
    else:
        rng = derived_rng([args.seed, 25, args.scene_id])
        start, goal = sample_start_goal(scene.truth, table, rng)

    report = run_scenario(stack, scene.truth, table, RiskConfig(args.lam),
                          args.variant, start, goal)
    maps = estimate_confidence(stack, table)
    write_label_map(scene.truth, out / "truth.lbl")
    write_label_map(maps.prediction, out / "prediction.lbl")
    write_scalar_map(maps.uncertainty, out / "uncertainty.scl")
    planner.write_path(report.path, out / "path.pth")
    write_ppm(overlay_path(label_map_rgb(scene.truth, table), report.path),
              out / "truth_path.ppm")
    write_ppm(overlay_path(label_map_rgb(maps.prediction, table), report.path),
              out / "prediction_path.ppm")
    write_ppm(scalar_map_rgb(maps.uncertainty), out / "uncertainty.ppm")
    print(f"variant={args.variant} lambda={args.lam} start={tuple(start)} goal={tuple(goal)}")
    print(f"expected={report.expected_cost:.3f} actual={report.actual_cost:.3f} "
          f"surprise={report.surprise_factor:.3f}")
    print(f"outputs in {out}")
    return 0


def cmd_render(args) -> int:
    table = _table(args)
    if (args.label is None) == (args.scalar is None):
        print("render: pass exactly one of --label or --scalar", file=sys.stderr)
        return 2
    if args.label:
        rgb = label_map_rgb(read_label_map(args.label), table)
    else:
        rgb = scalar_map_rgb(read_scalar_map(args.scalar))
    if args.path_file:
        rgb = overlay_path(rgb, planner.read_path(args.path_file))
    write_ppm(rgb, args.output)
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskplan",
                                     description="risk-aware grid planning experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenes", help="generate synthetic scenes")
    _add_common(p)
    p.add_argument("--scenes", type=int, default=20)
    p.add_argument("--classes", type=int, default=12)
    p.add_argument("--clutter", type=float, default=0.3)
    p.set_defaults(fn=cmd_gen_scenes)

    p = sub.add_parser("train", help="train the classifier and bootstrap ensemble")
    _add_experiment(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("sweep-lambda", help="surprise across risk weights")
    _add_experiment(p)
    p.add_argument("--lambdas", type=float, nargs="+",
                   default=[0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
    p.set_defaults(fn=cmd_sweep_lambda)

    p = sub.add_parser("sweep-samples", help="surprise and runtime across sample counts")
    _add_experiment(p)
    p.add_argument("--pass-counts", type=int, nargs="+", default=[2, 5, 10])
    p.add_argument("--bootstrap-counts", type=int, nargs="+", default=[2, 5, 10])
    p.set_defaults(fn=cmd_sweep_samples)

    p = sub.add_parser("plan-one", help="plan a single scenario and render it")
    _add_experiment(p)
    p.add_argument("--variant", default="dropout",
                   choices=["ground_truth", "deterministic", "dropout", "bootstrap"])
    p.add_argument("--scene-id", type=int, default=0)
    p.add_argument("--start", type=int, nargs=2, default=None, metavar=("Y", "X"))
    p.add_argument("--goal", type=int, nargs=2, default=None, metavar=("Y", "X"))
    p.set_defaults(fn=cmd_plan_one)

    p = sub.add_parser("render", help="render a map file (plus optional path) to PPM")
    p.add_argument("--label", default=None, help="label map file")
    p.add_argument("--scalar", default=None, help="scalar map file")
    p.add_argument("--path-file", default=None, help="path file to overlay")
    p.add_argument("--table", default=None)
    p.add_argument("--out", dest="output", default="render.ppm")
    p.set_defaults(fn=cmd_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "serial", False):
        os.environ["RISKPLAN_THREADS"] = "0"
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
