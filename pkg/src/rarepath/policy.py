"""Threshold alert policy, pathway cost and the Monte Carlo threshold sweep.

The policy checks the forest once a day from the first observed symptom and
refers the patient to an expert centre on the first day the predicted
probability is strictly above ``tau``. The day-``d`` check already sees the
observations of day ``d``, so the shortest possible wandering time is 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .learner import Forest, trajectory_features
from .rng import stream
from .scenario import ScenarioConfig
from .simulator import Trajectory, simulate_trajectory

EVAL_BATCH = 64


@dataclass(frozen=True)
class CostParams:
    """Unit costs of a pathway.

    The defaults are placeholders except ``mean_wandering_days``, the reported
    two-year average delay before diagnosis.
    """

    cost_wandering_per_day: float = 1.0
    cost_specialist: float = 3000.0
    cost_non_specialist: float = 200.0
    mean_wandering_days: float = 730.0
    mean_physicians_consulted: float = 20.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, float(value))


@dataclass(frozen=True)
class PathwayOutcome:
    has_rare_disease: bool
    sent_to_center: bool
    wandering_days: int
    decision_day: int | None
    first_observed_day: int | None


@dataclass(frozen=True, eq=False)
class PredictionSeries:
    """Forest output on each decision day of one trajectory."""

    is_rare: bool
    horizon_days: int
    first_observed_day: int | None
    days: np.ndarray
    probs: np.ndarray

    def outcome(self, tau: float) -> PathwayOutcome:
        return outcomes_for_taus(self, np.array([tau]))[0]


def prediction_series(trajectory: Trajectory, forest: Forest) -> PredictionSeries:
    days, X = trajectory_features(trajectory)
    if X.shape[1] != forest.feature_count:
        raise ValueError(f"trajectory gives {X.shape[1]} features, forest expects {forest.feature_count}")
    probs = forest.predict_matrix(X) if days.size else np.empty(0)
    return PredictionSeries(trajectory.is_rare, trajectory.horizon_days, trajectory.first_observed_day, days, probs)


def _series_batch(trajectories: Sequence[Trajectory], forest: Forest) -> list[PredictionSeries]:
    # one forest pass over the stacked rows; results are identical to per-trajectory calls
    feats = [trajectory_features(t) for t in trajectories]
    for _, X in feats:
        if X.shape[1] != forest.feature_count:
            raise ValueError(f"trajectory gives {X.shape[1]} features, forest expects {forest.feature_count}")
    sizes = [d.size for d, _ in feats]
    stacked = np.vstack([X for _, X in feats]) if sum(sizes) else np.empty((0, forest.feature_count))
    probs = forest.predict_matrix(stacked) if stacked.shape[0] else np.empty(0)
    parts = np.split(probs, np.cumsum(sizes)[:-1])
    return [
        PredictionSeries(t.is_rare, t.horizon_days, t.first_observed_day, d, p)
        for t, (d, _), p in zip(trajectories, feats, parts)
    ]


def _decision_index(series: PredictionSeries, taus: np.ndarray) -> np.ndarray:
    # first index with prob > tau == first index where the running max exceeds tau
    if series.probs.size == 0:
        return np.zeros(taus.size, dtype=np.int64)
    running = np.maximum.accumulate(series.probs)
    return np.searchsorted(running, taus, side="right")


def outcomes_for_taus(series: PredictionSeries, taus: np.ndarray) -> list[PathwayOutcome]:
    first = series.first_observed_day
    if first is None:
        return [PathwayOutcome(series.is_rare, False, 0, None, None) for _ in taus]
    out = []
    for k in _decision_index(series, taus):
        if k < series.days.size:
            day = int(series.days[k])
            out.append(PathwayOutcome(series.is_rare, True, day - first, day, first))
        else:
            out.append(PathwayOutcome(series.is_rare, False, series.horizon_days - 1 - first, None, first))
    return out


def run_alert_policy(trajectory: Trajectory, forest: Forest, tau: float) -> PathwayOutcome:
    """Follow one patient under the rule "refer once the forest says > tau"."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    return prediction_series(trajectory, forest).outcome(tau)


def pathway_cost(outcome: PathwayOutcome, params: CostParams) -> float:
    """Cost of one pathway, by (rare disease?, referred?) cell.

    A rare-disease patient who is never referred is charged the average
    wandering time and physician visits rather than the simulated ones.
    """
    p = params
    if outcome.sent_to_center:
        return p.cost_wandering_per_day * outcome.wandering_days + p.cost_specialist
    if outcome.has_rare_disease:
        return p.cost_wandering_per_day * p.mean_wandering_days + p.cost_non_specialist * p.mean_physicians_consulted
    return p.cost_wandering_per_day * outcome.wandering_days + p.cost_non_specialist


def _costs_for_taus(series: PredictionSeries, taus: np.ndarray, params: CostParams) -> np.ndarray:
    p = params
    first = series.first_observed_day
    if first is None:
        return np.full(taus.size, pathway_cost(PathwayOutcome(series.is_rare, False, 0, None, None), p))
    k = _decision_index(series, taus)
    sent = k < series.days.size
    wander_sent = series.days[np.minimum(k, series.days.size - 1)] - first
    if series.is_rare:
        unsent = p.cost_wandering_per_day * p.mean_wandering_days + p.cost_non_specialist * p.mean_physicians_consulted
    else:
        unsent = p.cost_wandering_per_day * (series.horizon_days - 1 - first) + p.cost_non_specialist
    return np.where(sent, p.cost_wandering_per_day * wander_sent + p.cost_specialist, unsent)


# -- Monte Carlo -----------------------------------------------------------

def evaluation_syndromes(config: ScenarioConfig, n_eval: int, seed: int) -> np.ndarray:
    rng = stream(seed, "eval-syndromes")
    return rng.choice(config.n_syndromes, size=n_eval, p=np.asarray(config.prevalences))


def evaluation_cohort(config: ScenarioConfig, n_eval: int, seed: int) -> Iterator[Trajectory]:
    """Fresh patients drawn from the syndrome distribution.

    Streams are keyed under ``"eval-trajectory"``, a different domain from
    training cohorts, so the same seed never reuses training patients.
    """
    for i, syndrome in enumerate(evaluation_syndromes(config, n_eval, seed)):
        yield simulate_trajectory(config, int(syndrome), stream(seed, i, "eval-trajectory"))


def evaluation_series(
    config: ScenarioConfig, forest: Forest, n_eval: int, seed: int, threads: int = 1
) -> list[PredictionSeries]:
    if n_eval < 1:
        raise ValueError(f"n_eval must be >= 1, got {n_eval}")
    syndromes = evaluation_syndromes(config, n_eval, seed)

    def batch(start: int) -> list[PredictionSeries]:
        trajs = [
            simulate_trajectory(config, int(syndromes[i]), stream(seed, i, "eval-trajectory"))
            for i in range(start, min(start + EVAL_BATCH, n_eval))
        ]
        return _series_batch(trajs, forest)

    starts = range(0, n_eval, EVAL_BATCH)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(batch, starts))
    else:
        parts = [batch(s) for s in starts]
    return [s for part in parts for s in part]


def _mean_and_stderr(costs: np.ndarray) -> tuple[float, float]:
    n = costs.size
    mean = math.fsum(costs) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((costs - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


@dataclass(frozen=True, eq=False)
class CostCurve:
    taus: np.ndarray
    mean_costs: np.ndarray
    std_errs: np.ndarray
    normalized_costs: np.ndarray

    def __len__(self) -> int:
        return self.taus.size


def normalize_costs(costs: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1]; a flat curve maps to all zeros."""
    lo, hi = costs.min(), costs.max()
    if hi == lo:
        return np.zeros_like(costs)
    return (costs - lo) / (hi - lo)


def cost_curve_from_series(series: Sequence[PredictionSeries], taus: Sequence[float], params: CostParams) -> CostCurve:
    taus = np.asarray(taus, dtype=np.float64)
    costs = np.vstack([_costs_for_taus(s, taus, params) for s in series])
    stats = [_mean_and_stderr(costs[:, j]) for j in range(taus.size)]
    means = np.array([m for m, _ in stats])
    errs = np.array([e for _, e in stats])
    return CostCurve(taus, means, errs, normalize_costs(means))


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    taus = np.asarray(grid, dtype=np.float64)
    if taus.ndim != 1 or taus.size == 0:
        raise ValueError("threshold grid must be a non-empty sequence")
    if np.any(taus < 0) or np.any(taus > 1) or np.any(np.diff(taus) < 0):
        raise ValueError("threshold grid must be sorted and lie in [0, 1]")
    return taus


def estimate_expected_cost(
    config: ScenarioConfig,
    forest: Forest,
    tau: float,
    params: CostParams,
    n_eval: int,
    seed: int,
    threads: int = 1,
) -> tuple[float, float]:
    """Monte Carlo mean cost over syndromes drawn from the prevalences.

    Returns ``(mean, standard_error)``; the standard error is 0 when
    ``n_eval == 1``.
    """
    curve = sweep_thresholds(config, forest, params, [tau], n_eval, seed, threads)
    return float(curve.mean_costs[0]), float(curve.std_errs[0])


def sweep_thresholds(
    config: ScenarioConfig,
    forest: Forest,
    params: CostParams,
    grid: Sequence[float],
    n_eval: int,
    seed: int,
    threads: int = 1,
) -> CostCurve:
    """Expected cost on every grid threshold, all from one evaluation cohort."""
    taus = _check_grid(grid)
    return cost_curve_from_series(evaluation_series(config, forest, n_eval, seed, threads), taus, params)


def select_optimal_threshold(curve: CostCurve) -> float:
    """Threshold with the lowest mean cost; the smallest one on ties."""
    if len(curve) == 0:
        raise ValueError("empty cost curve")
    best = curve.mean_costs.min()
    return float(curve.taus[curve.mean_costs == best].min())


def tau_grid(points: int) -> np.ndarray:
    """``points`` evenly spaced thresholds from 0 to 1."""
    if points < 1:
        raise ValueError(f"need at least one grid point, got {points}")
    if points == 1:
        return np.array([0.0])
    return np.round(np.linspace(0.0, 1.0, points), 12)


def write_cost_curve_csv(curve: CostCurve, path: str | Path) -> None:
    lines = ["tau,mean_cost,std_err,normalized_cost"]
    for row in zip(curve.taus, curve.mean_costs, curve.std_errs, curve.normalized_costs):
        lines.append(",".join(f"{v:.6f}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
