"""
The syndrome-symptom world model
================================

Build the four-syndrome, ten-symptom world used throughout, look at its
links, and round-trip it through the JSON scenario format.
"""

# %%
from pathlib import Path

from rarepath.scenario import load_scenario, paper_scenario, save_scenario, validate_scenario

config = paper_scenario(42)
for syn in config.syndromes:
    print(f"#{syn.id} {syn.name:<20} rare={syn.is_rare!s:<5} prevalence={syn.prevalence}")

# %%
# Symptom kinds: latent ones are never seen by the patient, permanent ones
# stay once they appear, recurrent ones come and go.
for sym in config.symptoms:
    print(sym.id, sym.kind.value)

# %%
# One link per (syndrome, symptom): occurrence probability and onset law.
# Syndrome 0 ("nothing to report") has none.
for link in config.links:
    kind = config.kind_of(link.symptom_id).value
    print(
        f"syndrome {link.syndrome_id} -> symptom {link.symptom_id} ({kind:<16}) "
        f"p={link.occur_prob:.2f} onset ~ N({link.onset_mean_days:.0f}, {link.onset_sd_days:.0f}) days"
    )

# %%
# Scenario files are canonical JSON, so save -> load -> save is byte-stable.
out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)
save_scenario(config, out / "scenario.json")
again = load_scenario(out / "scenario.json")
print("round trip equal:", again == config, "| violations:", validate_scenario(again))
