"""Daily patient-pathway simulation.

Day 0 is syndrome onset. A trajectory holds two ``(n_symptoms, horizon)``
boolean arrays: ``presence`` is the ground truth (latent symptoms included)
and ``observed`` is what the patient can report, i.e. presence with latent
rows blanked.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .rng import stream
from .scenario import ScenarioConfig, SymptomKind

# below this standardised bound plain rejection accepts at least ~30% of draws
_NAIVE_REJECTION_MAX_BOUND = 0.5


def sample_truncated_normal(mu: float, sigma: float, rng: np.random.Generator) -> float:
    """Draw from Normal(mu, sigma) conditioned on being >= 0.

    Plain rejection when the truncation point is not far in the upper tail,
    otherwise Robert's (1995) translated-exponential proposal.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return max(float(mu), 0.0)
    a = -mu / sigma
    if a <= _NAIVE_REJECTION_MAX_BOUND:
        while True:
            z = rng.standard_normal()
            if z >= a:
                return mu + sigma * z
    alpha = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        z = a + rng.exponential(1.0 / alpha)
        if rng.random() <= math.exp(-0.5 * (z - alpha) ** 2):
            return mu + sigma * z


def sample_onset_day(mu: float, sigma: float, rng: np.random.Generator) -> int:
    """Onset day: a left-truncated normal draw rounded half-up to an integer."""
    return int(math.floor(sample_truncated_normal(mu, sigma, rng) + 0.5))


def episode_days(rate: float, rng: np.random.Generator) -> int:
    # ceil keeps every episode at least one day long at daily resolution
    return max(1, math.ceil(rng.exponential(1.0 / rate)))


def sample_recurrent_timeline(
    onset_day: int, on_rate: float, off_rate: float, horizon: int, rng: np.random.Generator
) -> np.ndarray:
    """Alternating present/absent episodes starting present at ``onset_day``."""
    timeline = np.zeros(horizon, dtype=bool)
    day = onset_day
    present = True
    while day < horizon:
        length = episode_days(on_rate if present else off_rate, rng)
        if present:
            timeline[day : day + length] = True
        day += length
        present = not present
    return timeline


@dataclass(frozen=True, eq=False)
class Trajectory:
    syndrome_id: int
    is_rare: bool
    horizon_days: int
    presence: np.ndarray
    observed: np.ndarray
    first_observed_day: int | None

    @property
    def n_symptoms(self) -> int:
        return self.presence.shape[0]

    def same_as(self, other: "Trajectory") -> bool:
        return (
            self.syndrome_id == other.syndrome_id
            and self.is_rare == other.is_rare
            and self.horizon_days == other.horizon_days
            and self.first_observed_day == other.first_observed_day
            and np.array_equal(self.presence, other.presence)
            and np.array_equal(self.observed, other.observed)
        )


def _first_day(observed: np.ndarray) -> int | None:
    any_day = observed.any(axis=0)
    return int(np.argmax(any_day)) if any_day.any() else None


def make_trajectory(config: ScenarioConfig, syndrome_id: int, presence: np.ndarray) -> Trajectory:
    visible = np.array([s.kind is not SymptomKind.LATENT for s in config.symptoms], dtype=bool)
    presence = np.asarray(presence, dtype=bool)
    observed = presence & visible[:, None]
    presence.flags.writeable = False
    observed.flags.writeable = False
    return Trajectory(
        syndrome_id=syndrome_id,
        is_rare=config.syndromes[syndrome_id].is_rare,
        horizon_days=config.horizon_days,
        presence=presence,
        observed=observed,
        first_observed_day=_first_day(observed),
    )


def simulate_trajectory(config: ScenarioConfig, syndrome_id: int, rng: np.random.Generator) -> Trajectory:
    """Simulate one patient with the given syndrome.

    Links are visited in symptom order. Each one consumes a Bernoulli draw
    and, when the symptom occurs, an onset draw (plus episode draws for
    recurrent symptoms).
    """
    if not 0 <= syndrome_id < config.n_syndromes:
        raise ValueError(f"invalid syndrome_id {syndrome_id}")
    horizon = config.horizon_days
    presence = np.zeros((config.n_symptoms, horizon), dtype=bool)
    for link in config.links_for(syndrome_id):
        if not rng.random() < link.occur_prob:
            continue
        onset = sample_onset_day(link.onset_mean_days, link.onset_sd_days, rng)
        if onset >= horizon:
            continue
        if config.kind_of(link.symptom_id) is SymptomKind.RECURRENT:
            presence[link.symptom_id] = sample_recurrent_timeline(
                onset, link.episode_on_rate, link.episode_off_rate, horizon, rng
            )
        else:
            presence[link.symptom_id, onset:] = True
    return make_trajectory(config, syndrome_id, presence)


@dataclass(frozen=True)
class ObservationHistory:
    """Observed days strictly before ``t``, per symptom."""

    days_observed: tuple[tuple[int, ...], ...]
    t: int
    first_observed_day: int | None

    @property
    def n_symptoms(self) -> int:
        return len(self.days_observed)


def history_at(trajectory: Trajectory, t: int) -> ObservationHistory:
    if not 0 <= t <= trajectory.horizon_days:
        raise ValueError(f"t={t} outside [0, {trajectory.horizon_days}]")
    prefix = trajectory.observed[:, :t]
    days = tuple(tuple(int(d) for d in np.flatnonzero(row)) for row in prefix)
    firsts = [d[0] for d in days if d]
    return ObservationHistory(days, t, min(firsts) if firsts else None)


def cohort_syndromes(counts: Sequence[int]) -> list[int]:
    """Syndrome id of each cohort index: all of syndrome 0 first, then 1, ..."""
    if any(c < 0 for c in counts):
        raise ValueError(f"counts must be non-negative, got {list(counts)}")
    return [s for s, c in enumerate(counts) for _ in range(int(c))]


def simulate_cohort(
    config: ScenarioConfig, counts: Sequence[int], master_seed: int, threads: int = 1
) -> list[Trajectory]:
    """Simulate ``counts[k]`` patients of each syndrome ``k``.

    Patient ``i`` draws from its own stream keyed by ``(master_seed, i)`` so
    the cohort is the same for any ``threads`` value.
    """
    if len(counts) != config.n_syndromes:
        raise ValueError(f"expected {config.n_syndromes} counts, got {len(counts)}")
    ids = cohort_syndromes(counts)

    def one(i: int) -> Trajectory:
        return simulate_trajectory(config, ids[i], stream(master_seed, i, "trajectory"))

    if threads > 1 and len(ids) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(len(ids))))
    return [one(i) for i in range(len(ids))]


COHORT_COLUMNS = ("trajectory_id", "syndrome_id", "symptom_id", "day", "present", "observed")


def write_cohort_csv(cohort: Sequence[Trajectory], path: str | Path) -> None:
    """One row per (trajectory, symptom, day) where the symptom is present."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COHORT_COLUMNS)
        for tid, traj in enumerate(cohort):
            sym, day = np.nonzero(traj.presence)
            obs = traj.observed[sym, day]
            w.writerows(
                (tid, traj.syndrome_id, s, d, 1, int(o))
                for s, d, o in zip(sym.tolist(), day.tolist(), obs.tolist())
            )


def read_cohort_csv(path: str | Path, config: ScenarioConfig, counts: Sequence[int]) -> list[Trajectory]:
    """Rebuild a cohort written by :func:`write_cohort_csv`.

    Trajectories without any present symptom leave no rows, so the cohort
    layout (``counts``) has to be supplied.
    """
    ids = cohort_syndromes(counts)
    presence = np.zeros((len(ids), config.n_symptoms, config.horizon_days), dtype=bool)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != COHORT_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            tid, syn, sym, day = (int(v) for v in row[:4])
            if not 0 <= tid < len(ids) or ids[tid] != syn:
                raise ValueError(f"{path}: row {row} does not match the cohort layout {list(counts)}")
            presence[tid, sym, day] = True
    return [make_trajectory(config, ids[i], presence[i]) for i in range(len(ids))]
