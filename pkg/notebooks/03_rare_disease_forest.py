"""
Predicting a rare disease from the history
==========================================

Turn histories into fixed-width feature vectors, train the random forest and
follow its prediction day by day for one rare-syndrome patient.
"""

# %%
from pathlib import Path

import numpy as np

from rarepath.learner import ForestParams, build_training_set, feature_names, train_forest
from rarepath.plotting import write_line_chart_svg
from rarepath.policy import prediction_series
from rarepath.scenario import paper_scenario
from rarepath.simulator import simulate_cohort

config = paper_scenario(42)
cohort = simulate_cohort(config, [100] * 4, 1)

# %%
# Snapshots: every day a new symptom shows up, plus one every 30 days.
data = build_training_set(cohort, 30)
n_neg, n_pos = data.class_counts()
print(f"{len(data)} rows ({n_pos} rare, {n_neg} not rare), {data.feature_count} features")
print(feature_names(config.n_symptoms))

# %%
forest = train_forest(data, ForestParams(tree_count=100), seed=2)
print("out-of-bag accuracy: %.3f" % forest.oob_accuracy)

# %%
# Daily prediction for the first rare patient with an observed symptom.
patient = next(t for t in cohort if t.is_rare and t.first_observed_day is not None)
series = prediction_series(patient, forest)
jumps = np.flatnonzero(np.diff(series.probs)) + 1
for k in jumps[:10]:
    day = int(series.days[k])
    print(f"day {day:4d}: observed {np.flatnonzero(patient.observed[:, day]).tolist()} -> {series.probs[k]:.3f}")

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)
window = series.days < series.days[0] + 200
write_line_chart_svg(
    out / "prediction_over_time.svg", series.days[window].tolist(), series.probs[window].tolist(),
    "Predicted rare-disease probability", "day", "probability", y_range=(0, 1), step=True,
)
