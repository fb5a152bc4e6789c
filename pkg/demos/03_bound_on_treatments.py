# %% [markdown]
# # Choosing the bound on the number of treatments
#
# Every procedure spreads its error budget over a sequence gamma_1..gamma_N
# that sums to one over an assumed maximum number of arms N. A bigger N means
# smaller levels for each test. How much that costs depends on the procedure.

# %%
import numpy as np

from onlinetrial import MeanSpec, TrialConfig, make_procedure, run_studies
from onlinetrial.scenarios import materialize_entry

k = 10
for name in ("bonferroni", "lond", "lord", "saffron", "addis"):
    first = [make_procedure(name, 0.025, mult * k).next_level() for mult in (1, 2, 5)]
    print(f"{name:11s}", " ".join(f"{x:.5f}" for x in first))

# %% [markdown]
# Sensitivity (share of effective arms found) with 2K/5 + 1 effective arms
# placed at random, fully sequential entry.

# %%
spec = MeanSpec("fixed_random", 2 * k // 5 + 1)
times = materialize_entry("fully_seq", k).times
procs = ["bonferroni", "lond", "lord", "saffron", "addis", "addis_spending"]
table = {}
for mult in (1, 2, 5):
    cfg = TrialConfig(mu=(0.0,) * k, entry_times=times, n_bound=mult * k)
    res = run_studies(cfg, procs, reps=1500, base_seed=3, scenario_id=f"N{mult}", mean_spec=spec)
    table[mult] = [res[p].sensitivity.value for p in procs]
for i, p in enumerate(procs):
    print(f"{p:15s}", " ".join(f"{table[m][i]:.3f}" for m in (1, 2, 5)))
print("relative change K -> 5K:",
      np.round(np.array(table[5]) / np.array(table[1]) - 1, 3))
