"""Experiment driver: scene batches, sweeps, timing, and CSV output.

The protocol mirrors a 20-scenes x 10-pairs evaluation at desk scale: one
classifier and one bootstrap ensemble are trained on held-out training
scenes, then every test scene gets a dropout stack and a bootstrap stack,
and every (scene, pair) trial is planned and scored under each pipeline
variant. All non-timing output is a pure function of the experiment seed.

CSV trial schema (reals with 6 fractional digits, LF endings):
scene_id,variant,lambda,samples,start_y,start_x,goal_y,goal_x,
expected_cost,actual_cost,surprise,plan_ms,sample_ms

The RISKPLAN_THREADS environment variable caps trial parallelism
(0 or 1 = serial). Timing sweeps always run serially.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .confidence import ConfidenceMaps, deterministic_baseline, estimate_confidence
from .planner import PixelCoord, plan
from .riskmap import DEFAULT_LAMBDA, RiskConfig, build_risk_cost_map, ground_truth_cost_map
from .surprise import evaluate_surprise
from .taxonomy import CostTable, builtin_aeroscapes_table
from .tensorio import LabelMap
from .toy_perception import (
    Scene,
    TinyClassifier,
    derived_rng,
    generate_scene,
    load_classifier,
    sample_bootstrap_stack,
    sample_dropout_stack,
    save_ensemble,
    train_bootstrap_ensemble,
    train_classifier,
)

TRIALS_HEADER = ("scene_id,variant,lambda,samples,start_y,start_x,goal_y,goal_x,"
                 "expected_cost,actual_cost,surprise,plan_ms,sample_ms")
SUMMARY_HEADER = ("variant,lambda,samples,n_trials,mean_surprise,sem_surprise,"
                  "mean_expected_cost,mean_actual_cost,mean_plan_ms,mean_sample_ms,"
                  "actual_cost_reduction_vs_lambda0_pct")

# RNG stream namespaces under the experiment seed.
_NS_TEST_SCENE = 21
_NS_TRAIN_SCENE = 22
_NS_MODEL = 23
_NS_ENSEMBLE = 24
_NS_PAIRS = 25
_NS_DROP_STACK = 26


class SceneRejectedError(RuntimeError):
    """No usable start/goal pair exists on this scene."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenes: int = 20
    pairs_per_scene: int = 10
    lambda_values: tuple[float, ...] = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    pass_counts: tuple[int, ...] = (2, 5, 10)
    bootstrap_counts: tuple[int, ...] = (2, 5, 10)
    seed: int = 0
    output_dir: str = "out"
    height: int = 48
    width: int = 48
    num_classes: int = 12
    clutter: float = 0.3
    train_scenes: int = 6
    hidden_units: int = 32
    epochs: int = 50
    learning_rate: float = 0.05
    dropout_rate: float = 0.5
    passes: int = 5
    bootstraps: int = 5
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        for name in ("scenes", "pairs_per_scene", "train_scenes", "passes", "bootstraps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("lambda_values", "pass_counts", "bootstrap_counts"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")


@dataclass(eq=False)
class ExperimentRow:
    scene_id: int
    variant: str
    lam: float
    samples: int
    start: PixelCoord
    goal: PixelCoord
    expected_cost: float
    actual_cost: float
    surprise: float
    plan_ms: float
    sample_ms: float


def thread_count() -> int:
    raw = os.environ.get("RISKPLAN_THREADS", "")
    try:
        return max(0, int(raw)) if raw else 0
    except ValueError:
        return 0


def sample_start_goal(truth: LabelMap, table: CostTable,
                      rng: np.random.Generator) -> tuple[PixelCoord, PixelCoord]:
    """Random passable pair, Chebyshev-separated by >= max(H, W) / 4.

    Separation avoids trivially short paths; after 1000 failed draws the
    separation constraint is dropped, and if even that fails the scene is
    rejected.
    """
    flags = table.impassable_mask()
    passable = ~flags[truth.labels]
    ys, xs = np.nonzero(passable)
    if len(ys) < 2:
        raise SceneRejectedError("fewer than two passable pixels")
    min_sep = max(truth.height, truth.width) / 4.0

    def draw() -> tuple[PixelCoord, PixelCoord]:
        i, j = rng.integers(0, len(ys), size=2)
        return (PixelCoord(int(ys[i]), int(xs[i])),
                PixelCoord(int(ys[j]), int(xs[j])))

    for _ in range(1000):
        start, goal = draw()
        if start == goal:
            continue
        if max(abs(start.y - goal.y), abs(start.x - goal.x)) >= min_sep:
            return start, goal
    for _ in range(1000):
        start, goal = draw()
        if start != goal:
            return start, goal
    raise SceneRejectedError("no valid start/goal pair after relaxation")


def test_scene(config: ExperimentConfig, scene_id: int) -> Scene:
    return generate_scene(config.height, config.width, config.num_classes,
                          config.clutter, [config.seed, _NS_TEST_SCENE, scene_id])


def training_scenes(config: ExperimentConfig) -> list[Scene]:
    return [generate_scene(config.height, config.width, config.num_classes,
                           config.clutter, [config.seed, _NS_TRAIN_SCENE, j])
            for j in range(config.train_scenes)]


def train_models(config: ExperimentConfig,
                 ensemble_size: int | None = None) -> tuple[TinyClassifier, list[TinyClassifier]]:
    """Train the dropout classifier and the bootstrap ensemble pool once.

    The pool holds the largest member count any sweep point needs; a sweep
    point with K members uses the first K (members are independently
    trained, so prefixes are themselves valid ensembles).
    """
    scenes = training_scenes(config)
    model = train_classifier(scenes, hidden_units=config.hidden_units,
                             dropout_rate=config.dropout_rate, epochs=config.epochs,
                             learning_rate=config.learning_rate,
                             seed=[config.seed, _NS_MODEL])
    if ensemble_size is None:
        ensemble_size = max(config.bootstraps, max(config.bootstrap_counts))
    ensemble = train_bootstrap_ensemble(scenes, ensemble_size,
                                        hidden_units=config.hidden_units,
                                        epochs=config.epochs,
                                        learning_rate=config.learning_rate,
                                        seed=[config.seed, _NS_ENSEMBLE])
    return model, ensemble


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - t0) * 1000.0


def _plan_and_score(planning_map, base_cost, truth_map, scene_id, variant, lam,
                    samples, start, goal, sample_ms) -> ExperimentRow:
    path, plan_ms = _timed(plan, planning_map, start, goal)
    report = evaluate_surprise(path, base_cost, truth_map)
    return ExperimentRow(scene_id, variant, lam, samples, start, goal,
                         report.expected_cost, report.actual_cost,
                         report.surprise_factor, plan_ms, sample_ms)


def _scene_lambda_rows(config: ExperimentConfig, table: CostTable,
                       model: TinyClassifier, ensemble: list[TinyClassifier],
                       scene_id: int) -> list[ExperimentRow]:
    scene = test_scene(config, scene_id)
    truth_map = ground_truth_cost_map(scene.truth, table)
    pair_rng = derived_rng([config.seed, _NS_PAIRS, scene_id])
    pairs = [sample_start_goal(scene.truth, table, pair_rng)
             for _ in range(config.pairs_per_scene)]

    drop_stack, drop_ms = _timed(sample_dropout_stack, model, scene, config.passes,
                                 [config.seed, _NS_DROP_STACK, scene_id])
    boot_stack, boot_ms = _timed(sample_bootstrap_stack,
                                 ensemble[:config.bootstraps], scene)
    det_maps = deterministic_baseline(drop_stack, table)
    det_map = build_risk_cost_map(det_maps, RiskConfig(0.0), table=table,
                                  provenance="deterministic")
    sources: list[tuple[str, ConfidenceMaps, float, int]] = [
        ("dropout", estimate_confidence(drop_stack, table), drop_ms, config.passes),
        ("bootstrap", estimate_confidence(boot_stack, table), boot_ms, config.bootstraps),
    ]

    rows = []
    for start, goal in pairs:
        rows.append(_plan_and_score(truth_map, truth_map.costs, truth_map,
                                    scene_id, "ground_truth", 0.0, 0,
                                    start, goal, 0.0))
        rows.append(_plan_and_score(det_map, det_maps.base_cost, truth_map,
                                    scene_id, "deterministic", 0.0, config.passes,
                                    start, goal, drop_ms))
    for lam in config.lambda_values:
        for variant, maps, sample_ms, samples in sources:
            rmap = build_risk_cost_map(maps, RiskConfig(lam), table=table,
                                       provenance=f"{variant}(samples={samples}, lam={lam})")
            for start, goal in pairs:
                rows.append(_plan_and_score(rmap, maps.base_cost, truth_map,
                                            scene_id, variant, lam, samples,
                                            start, goal, sample_ms))
    return rows


def run_lambda_sweep(config: ExperimentConfig, table: CostTable | None = None,
                     model: TinyClassifier | None = None,
                     ensemble: list[TinyClassifier] | None = None) -> list[ExperimentRow]:
    """Surprise across the risk-weight grid, plus per-pair baseline rows.

    Dropout and bootstrap variants are evaluated at every weight in
    lambda_values with the T and K fixed by the config; ground-truth and
    deterministic baseline rows (weight-independent) are emitted once per
    pair with the weight column at 0.
    """
    table = table or builtin_aeroscapes_table()
    if model is None or ensemble is None:
        model, ensemble = train_models(config, ensemble_size=config.bootstraps)

    def one(scene_id: int) -> list[ExperimentRow]:
        return _scene_lambda_rows(config, table, model, ensemble, scene_id)

    threads = thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_scene = list(pool.map(one, range(config.scenes)))
    else:
        per_scene = [one(i) for i in range(config.scenes)]
    return [row for rows in per_scene for row in rows]


def sample_bootstrap_stack_from_files(base_path, count: int, scene: Scene):
    """Bootstrap stack with each member's parameters re-read from disk.

    Models the per-sample cost of fetching separate parameter sets, which is
    what makes large ensembles expensive at sampling time.
    """
    members = [load_classifier(f"{base_path}.k{k}") for k in range(count)]
    return sample_bootstrap_stack(members, scene)


def run_sample_sweep(config: ExperimentConfig, table: CostTable | None = None,
                     model: TinyClassifier | None = None,
                     ensemble: list[TinyClassifier] | None = None) -> list[ExperimentRow]:
    """Surprise and wall time as the sample count varies, at the fixed weight.

    Always serial: the sample_ms column is the measured stack-generation
    time and the bootstrap side re-reads member checkpoints per stack.
    """
    table = table or builtin_aeroscapes_table()
    if model is None or ensemble is None:
        model, ensemble = train_models(config)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_base = out_dir / "ensemble.tny"
    save_ensemble(ensemble, ckpt_base)

    risk = RiskConfig(config.lam)
    rows = []
    for scene_id in range(config.scenes):
        scene = test_scene(config, scene_id)
        truth_map = ground_truth_cost_map(scene.truth, table)
        pair_rng = derived_rng([config.seed, _NS_PAIRS, scene_id])
        pairs = [sample_start_goal(scene.truth, table, pair_rng)
                 for _ in range(config.pairs_per_scene)]

        for t in config.pass_counts:
            stack, sample_ms = _timed(sample_dropout_stack, model, scene, t,
                                      [config.seed, _NS_DROP_STACK, scene_id, t])
            maps = estimate_confidence(stack, table)
            rmap = build_risk_cost_map(maps, risk, table=table,
                                       provenance=f"dropout(samples={t}, lam={config.lam})")
            for start, goal in pairs:
                rows.append(_plan_and_score(rmap, maps.base_cost, truth_map,
                                            scene_id, "dropout", config.lam, t,
                                            start, goal, sample_ms))
        for k in config.bootstrap_counts:
            if k > len(ensemble):
                raise ValueError(f"ensemble pool has {len(ensemble)} members, need {k}")
            stack, sample_ms = _timed(sample_bootstrap_stack_from_files,
                                      ckpt_base, k, scene)
            maps = estimate_confidence(stack, table)
            rmap = build_risk_cost_map(maps, risk, table=table,
                                       provenance=f"bootstrap(samples={k}, lam={config.lam})")
            for start, goal in pairs:
                rows.append(_plan_and_score(rmap, maps.base_cost, truth_map,
                                            scene_id, "bootstrap", config.lam, k,
                                            start, goal, sample_ms))
    return rows


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_trials_csv(rows: list[ExperimentRow], path) -> None:
    lines = [TRIALS_HEADER]
    for r in rows:
        lines.append(",".join([
            str(r.scene_id), r.variant, _fmt(r.lam), str(r.samples),
            str(r.start.y), str(r.start.x), str(r.goal.y), str(r.goal.x),
            _fmt(r.expected_cost), _fmt(r.actual_cost), _fmt(r.surprise),
            _fmt(r.plan_ms), _fmt(r.sample_ms),
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def summarize(rows: list[ExperimentRow]) -> list[dict]:
    """Group trials by (variant, lambda, samples) and average the metrics.

    For dropout/bootstrap groups whose variant also appears at lambda = 0,
    the actual-cost reduction of this lambda relative to lambda = 0 is
    reported as a percentage.
    """
    groups: dict[tuple[str, float, int], list[ExperimentRow]] = {}
    for r in rows:
        groups.setdefault((r.variant, r.lam, r.samples), []).append(r)

    baseline_actual: dict[tuple[str, int], float] = {}
    for (variant, lam, samples), grp in groups.items():
        if lam == 0.0 and variant in ("dropout", "bootstrap"):
            baseline_actual[(variant, samples)] = float(
                np.mean([g.actual_cost for g in grp]))

    out = []
    for (variant, lam, samples), grp in sorted(groups.items()):
        surprises = np.array([g.surprise for g in grp])
        n = len(grp)
        sem = float(surprises.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        mean_actual = float(np.mean([g.actual_cost for g in grp]))
        entry = {
            "variant": variant,
            "lambda": lam,
            "samples": samples,
            "n_trials": n,
            "mean_surprise": float(surprises.mean()),
            "sem_surprise": sem,
            "mean_expected_cost": float(np.mean([g.expected_cost for g in grp])),
            "mean_actual_cost": mean_actual,
            "mean_plan_ms": float(np.mean([g.plan_ms for g in grp])),
            "mean_sample_ms": float(np.mean([g.sample_ms for g in grp])),
            "actual_cost_reduction_vs_lambda0_pct": None,
        }
        base = baseline_actual.get((variant, samples))
        if base is not None and base > 0:
            entry["actual_cost_reduction_vs_lambda0_pct"] = 100.0 * (base - mean_actual) / base
        out.append(entry)
    return out


def write_summary_csv(rows: list[ExperimentRow], path) -> None:
    lines = [SUMMARY_HEADER]
    for e in summarize(rows):
        red = e["actual_cost_reduction_vs_lambda0_pct"]
        lines.append(",".join([
            e["variant"], _fmt(e["lambda"]), str(e["samples"]), str(e["n_trials"]),
            _fmt(e["mean_surprise"]), _fmt(e["sem_surprise"]),
            _fmt(e["mean_expected_cost"]), _fmt(e["mean_actual_cost"]),
            _fmt(e["mean_plan_ms"]), _fmt(e["mean_sample_ms"]),
            "" if red is None else _fmt(red),
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def strip_timing_columns(csv_text: str) -> str:
    """Trial CSV with plan_ms/sample_ms blanked, for determinism comparisons."""
    out = []
    for i, line in enumerate(csv_text.splitlines()):
        if i == 0 or not line:
            out.append(line)
            continue
        cells = line.split(",")
        cells[-2:] = ["", ""]
        out.append(",".join(cells))
    return "\n".join(out) + "\n"
