"""
Choosing the alert threshold
============================

Estimate the expected pathway cost of the rule "refer once the forest says
more than tau" on a grid of thresholds, with one shared evaluation cohort.
"""

# %%
from pathlib import Path

from rarepath.learner import ForestParams, build_training_set, train_forest
from rarepath.plotting import write_line_chart_svg
from rarepath.policy import CostParams, select_optimal_threshold, sweep_thresholds, tau_grid
from rarepath.scenario import paper_scenario
from rarepath.simulator import simulate_cohort

config = paper_scenario(42)
forest = train_forest(build_training_set(simulate_cohort(config, [100] * 4, 1), 30), ForestParams(), seed=2)

# %%
# Placeholder unit costs; only the two-year mean wandering time is a
# reported figure.
params = CostParams()
print(params)

# %%
curve = sweep_thresholds(config, forest, params, tau_grid(101), n_eval=2000, seed=3)
tau_star = select_optimal_threshold(curve)
print("refer everyone (tau=0): %.1f" % curve.mean_costs[0])
print("refer no one  (tau=1): %.1f" % curve.mean_costs[-1])
best = list(curve.taus).index(tau_star)
print("best tau = %.2f: %.1f +/- %.1f" % (tau_star, curve.mean_costs[best], curve.std_errs[best]))

# %%
out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)
write_line_chart_svg(
    out / "cost_curve.svg", curve.taus.tolist(), curve.normalized_costs.tolist(),
    "Normalized expected cost", "threshold tau", "normalized cost", y_range=(0, 1), marker_x=tau_star,
)
