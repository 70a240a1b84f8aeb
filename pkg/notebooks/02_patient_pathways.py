"""
Simulating patient pathways
===========================

Draw onset days, recurrent episodes and whole daily trajectories, then cut
an observation history at some day ``t``.
"""

# %%
import numpy as np

from rarepath.rng import stream
from rarepath.scenario import paper_scenario
from rarepath.simulator import (
    history_at,
    sample_onset_day,
    sample_recurrent_timeline,
    simulate_cohort,
    simulate_trajectory,
)

rng = stream(0, "demo")

# %%
# Onset days: a normal draw truncated at day 0, rounded to the day.
onsets = np.array([sample_onset_day(30.0, 20.0, rng) for _ in range(20_000)])
print("onset mean %.2f, min %d, share on day 0: %.3f" % (onsets.mean(), onsets.min(), np.mean(onsets == 0)))

# %%
# A recurrent symptom: present ~5 days, absent ~30 days, repeat.
timeline = sample_recurrent_timeline(10, 1 / 5, 1 / 30, 200, rng)
print("".join("#" if x else "." for x in timeline[:120]))

# %%
# A rare-syndrome patient: presence includes latent symptoms, observed does not.
config = paper_scenario(42)
traj = simulate_trajectory(config, 1, stream(0, 7))
print("first observed day:", traj.first_observed_day)
for s in range(config.n_symptoms):
    if traj.presence[s].any():
        print(s, config.kind_of(s).value, "present from", int(np.argmax(traj.presence[s])),
              "observed days:", int(traj.observed[s].sum()))

# %%
# What the patient has reported before day t.
if traj.first_observed_day is not None:
    h = history_at(traj, traj.first_observed_day + 60)
    print({s: d[:5] for s, d in enumerate(h.days_observed) if d})

# %%
# A training cohort: 100 patients per syndrome, one random stream each.
cohort = simulate_cohort(config, [100] * 4, 1)
for syn in range(4):
    firsts = [t.first_observed_day for t in cohort if t.syndrome_id == syn]
    seen = [f for f in firsts if f is not None]
    print(f"syndrome {syn}: {len(seen)}/100 with an observed symptom, median first day "
          f"{np.median(seen) if seen else float('nan'):.0f}")
