"""Command-line pipeline: generate -> simulate -> train -> sweep (-> trace).

Every stage reads its settings from a run manifest (built from the flags or
loaded with ``--manifest``) and writes into ``--out``. All randomness is
derived from ``--seed``. Exit codes: 0 ok, 1 invalid input, 2 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .learner import ForestParams, build_training_set, load_forest, save_forest, train_forest, trajectory_features
from .plotting import write_line_chart_svg
from .policy import (
    CostParams,
    prediction_series,
    select_optimal_threshold,
    sweep_thresholds,
    tau_grid,
    write_cost_curve_csv,
)
from .rng import derive_seed
from .scenario import (
    ScenarioConfig,
    ScenarioFormatError,
    ScenarioValidationError,
    load_scenario,
    paper_scenario,
    save_scenario,
)
from .simulator import read_cohort_csv, simulate_cohort, write_cohort_csv

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

SCENARIO_FILE = "scenario.json"
MANIFEST_FILE = "manifest.json"
COHORT_FILE = "cohort.csv"
MODEL_FILE = "model.json"
TRAIN_SUMMARY_FILE = "train_summary.txt"
CURVE_FILE = "cost_curve.csv"
CURVE_SVG_FILE = "cost_curve.svg"
SWEEP_SUMMARY_FILE = "sweep_summary.txt"


@dataclass
class RunManifest:
    seed: int = 42
    scenario_path: str | None = None
    horizon_days: int | None = None
    per_syndrome: int = 100
    snapshot_stride_days: int = 30
    forest: ForestParams = field(default_factory=ForestParams)
    costs: CostParams = field(default_factory=CostParams)
    grid_points: int = 101
    n_eval: int = 2000
    out_dir: str = "rarepath-run"
    version: str = __version__

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        data = dict(data)
        data["forest"] = ForestParams(**data.get("forest", {}))
        data["costs"] = CostParams(**data.get("costs", {}))
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)


def resolve_scenario(manifest: RunManifest) -> ScenarioConfig:
    if manifest.scenario_path:
        config = load_scenario(manifest.scenario_path)
    else:
        config = paper_scenario(manifest.seed)
    if manifest.horizon_days is not None:
        if manifest.horizon_days < 1:
            raise ValueError(f"horizon must be >= 1 day, got {manifest.horizon_days}")
        config = dataclasses.replace(config, horizon_days=manifest.horizon_days)
    return config


def _counts(manifest: RunManifest, config: ScenarioConfig) -> list[int]:
    return [manifest.per_syndrome] * config.n_syndromes


def _write_manifest(manifest: RunManifest) -> None:
    manifest.out.mkdir(parents=True, exist_ok=True)
    (manifest.out / MANIFEST_FILE).write_text(manifest.dumps(), encoding="utf-8")


# -- stages ----------------------------------------------------------------

def cmd_generate(seed: int, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_scenario(paper_scenario(seed), out_path)
    return out_path


def cmd_simulate(manifest: RunManifest, threads: int = 1) -> Path:
    config = resolve_scenario(manifest)
    _write_manifest(manifest)
    save_scenario(config, manifest.out / SCENARIO_FILE)
    cohort = simulate_cohort(config, _counts(manifest, config), manifest.stage_seed("cohort"), threads)
    path = manifest.out / COHORT_FILE
    write_cohort_csv(cohort, path)
    print(f"simulated {len(cohort)} trajectories over {config.horizon_days} days -> {path}")
    return path


def _load_cohort(manifest: RunManifest, config: ScenarioConfig):
    return read_cohort_csv(manifest.out / COHORT_FILE, config, _counts(manifest, config))


def cmd_train(manifest: RunManifest, threads: int = 1) -> Path:
    config = resolve_scenario(manifest)
    cohort = _load_cohort(manifest, config)
    data = build_training_set(cohort, manifest.snapshot_stride_days)
    n_neg, n_pos = data.class_counts()
    if n_neg == 0 or n_pos == 0:
        raise ValueError(
            f"cannot train: the cohort yields {n_pos} rare and {n_neg} non-rare snapshot rows; "
            "both classes are required"
        )
    forest = train_forest(data, manifest.forest, manifest.stage_seed("forest"), threads)
    _write_manifest(manifest)
    path = manifest.out / MODEL_FILE
    save_forest(forest, path)
    n_with = sum(t.first_observed_day is not None for t in cohort)
    oob = "n/a" if forest.oob_accuracy is None else f"{forest.oob_accuracy:.6f}"
    summary = (
        f"rows: {len(data)}\n"
        f"rows_rare: {n_pos}\n"
        f"rows_non_rare: {n_neg}\n"
        f"trajectories_with_observations: {n_with}/{len(cohort)}\n"
        f"trees: {len(forest.trees)}\n"
        f"oob_accuracy: {oob}\n"
    )
    (manifest.out / TRAIN_SUMMARY_FILE).write_text(summary, encoding="utf-8")
    print(summary, end="")
    return path


def cmd_sweep(manifest: RunManifest, threads: int = 1, svg: bool = True) -> float:
    config = resolve_scenario(manifest)
    forest = load_forest(manifest.out / MODEL_FILE)
    curve = sweep_thresholds(
        config, forest, manifest.costs, tau_grid(manifest.grid_points), manifest.n_eval,
        manifest.stage_seed("evaluation"), threads,
    )
    tau_star = select_optimal_threshold(curve)
    _write_manifest(manifest)
    write_cost_curve_csv(curve, manifest.out / CURVE_FILE)
    if svg:
        write_line_chart_svg(
            manifest.out / CURVE_SVG_FILE, curve.taus.tolist(), curve.normalized_costs.tolist(),
            "Normalized expected pathway cost", "threshold tau", "normalized cost",
            y_range=(0.0, 1.0), marker_x=tau_star,
        )
    best = int(np.flatnonzero(curve.taus == tau_star)[0])
    summary = (
        f"tau_star: {tau_star:.6f}\n"
        f"mean_cost_at_tau_star: {curve.mean_costs[best]:.6f}\n"
        f"mean_cost_tau_0: {curve.mean_costs[0]:.6f}\n"
        f"mean_cost_tau_1: {curve.mean_costs[-1]:.6f}\n"
    )
    (manifest.out / SWEEP_SUMMARY_FILE).write_text(summary, encoding="utf-8")
    print(f"tau* = {tau_star:.6f}")
    return tau_star


def default_trace_id(cohort) -> int:
    for i, t in enumerate(cohort):
        if t.is_rare and t.first_observed_day is not None:
            return i
    return 0


def cmd_trace(manifest: RunManifest, trajectory_id: int | None = None, svg: bool = True) -> Path:
    """Daily prediction of one training-cohort patient."""
    config = resolve_scenario(manifest)
    cohort = _load_cohort(manifest, config)
    forest = load_forest(manifest.out / MODEL_FILE)
    tid = default_trace_id(cohort) if trajectory_id is None else trajectory_id
    if not 0 <= tid < len(cohort):
        raise ValueError(f"trajectory id {tid} outside 0..{len(cohort) - 1}")
    traj = cohort[tid]
    series = prediction_series(traj, forest)
    lines = ["day,observed_symptoms,prediction"]
    for day, p in zip(series.days.tolist(), series.probs):
        seen = ";".join(str(s) for s in np.flatnonzero(traj.observed[:, day]))
        lines.append(f"{day},{seen},{p:.6f}")
    path = manifest.out / f"trace_{tid}.csv"
    manifest.out.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if series.days.size == 0:
        print(f"trajectory {tid} (syndrome {traj.syndrome_id}) never shows an observable symptom; empty trace")
    else:
        if svg:
            write_line_chart_svg(
                manifest.out / f"trace_{tid}.svg", series.days.tolist(), series.probs.tolist(),
                f"Rare-disease prediction, trajectory {tid}", "day", "predicted probability",
                y_range=(0.0, 1.0), step=True,
            )
        print(f"trace of trajectory {tid} ({series.days.size} days) -> {path}")
    return path


def cmd_all(manifest: RunManifest, threads: int = 1, svg: bool = True) -> float:
    if not manifest.scenario_path:
        cmd_generate(manifest.seed, manifest.out / SCENARIO_FILE)
    cmd_simulate(manifest, threads)
    cmd_train(manifest, threads)
    tau_star = cmd_sweep(manifest, threads, svg)
    cmd_trace(manifest, None, svg)
    return tau_star


# -- argument parsing ------------------------------------------------------

def _common_parser() -> argparse.ArgumentParser:
    d = RunManifest()
    c = CostParams()
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--manifest", type=Path, help="load all run settings from this manifest JSON")
    p.add_argument("--scenario", type=str, help="scenario JSON (default: generate from --seed)")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--out", type=str, default=d.out_dir)
    p.add_argument("--horizon", type=int, help="override the scenario horizon (days)")
    p.add_argument("--per-syndrome", type=int, default=d.per_syndrome, help="training trajectories per syndrome")
    p.add_argument("--stride", type=int, default=d.snapshot_stride_days, help="snapshot stride in days")
    p.add_argument("--trees", type=int, default=d.forest.tree_count)
    p.add_argument("--max-depth", type=int, default=d.forest.max_depth)
    p.add_argument("--min-leaf", type=int, default=d.forest.min_leaf_size)
    p.add_argument("--grid-points", type=int, default=d.grid_points)
    p.add_argument("--n-eval", type=int, default=d.n_eval)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-svg", action="store_true")
    p.add_argument("--cost-per-day", type=float, default=c.cost_wandering_per_day)
    p.add_argument("--cost-specialist", type=float, default=c.cost_specialist)
    p.add_argument("--cost-non-specialist", type=float, default=c.cost_non_specialist)
    p.add_argument("--cost-mean-wandering-days", type=float, default=c.mean_wandering_days)
    p.add_argument("--cost-mean-physicians", type=float, default=c.mean_physicians_consulted)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rarepath", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()
    sub.add_parser("generate", parents=[common], help="write a generated scenario file")
    sub.add_parser("simulate", parents=[common], help="simulate the training cohort")
    sub.add_parser("train", parents=[common], help="train the random forest")
    sub.add_parser("sweep", parents=[common], help="sweep alert thresholds")
    tr = sub.add_parser("trace", parents=[common], help="daily prediction for one trajectory")
    tr.add_argument("--trajectory-id", type=int)
    sub.add_parser("all", parents=[common], help="run every stage")
    return parser


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    if args.manifest is not None:
        return RunManifest.from_dict(json.loads(args.manifest.read_text(encoding="utf-8")))
    return RunManifest(
        seed=args.seed,
        scenario_path=args.scenario,
        horizon_days=args.horizon,
        per_syndrome=args.per_syndrome,
        snapshot_stride_days=args.stride,
        forest=ForestParams(tree_count=args.trees, max_depth=args.max_depth, min_leaf_size=args.min_leaf),
        costs=CostParams(
            cost_wandering_per_day=args.cost_per_day,
            cost_specialist=args.cost_specialist,
            cost_non_specialist=args.cost_non_specialist,
            mean_wandering_days=args.cost_mean_wandering_days,
            mean_physicians_consulted=args.cost_mean_physicians,
        ),
        grid_points=args.grid_points,
        n_eval=args.n_eval,
        out_dir=args.out,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    svg = not args.no_svg
    try:
        manifest = manifest_from_args(args)
        if args.command == "generate":
            path = cmd_generate(manifest.seed, manifest.out / SCENARIO_FILE)
            print(f"scenario -> {path}")
        elif args.command == "simulate":
            cmd_simulate(manifest, args.threads)
        elif args.command == "train":
            cmd_train(manifest, args.threads)
        elif args.command == "sweep":
            cmd_sweep(manifest, args.threads, svg)
        elif args.command == "trace":
            cmd_trace(manifest, args.trajectory_id, svg)
        elif args.command == "all":
            cmd_all(manifest, args.threads, svg)
    except ScenarioValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ScenarioFormatError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
