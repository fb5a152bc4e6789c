# %% [markdown]
# # Replaying STAMPEDE through the online procedures
#
# Seven experimental arms were compared with a shared control, and the
# comparisons were reported in four groups over time. Each procedure sees the
# p-values in that order. Fully sequential procedures see them one at a time,
# batch procedures see them one group at a time, and BH sees all of them at once.

# %%
from onlinetrial import casestudy, make_procedure

inp = casestudy.stampede()
for arm in inp.arms:
    print(arm.label, arm.p_value, "batch", arm.batch)

# %% [markdown]
# The full table. `alpha_8` is the level an eighth arm would be tested at.

# %%
rows = casestudy.run_case_study(inp)
print(casestudy.format_rows(rows))

# %% [markdown]
# A procedure can also be driven by hand. LOND's level grows with the number
# of discoveries so far, so rejecting G lifts the level for the next arm.

# %%
lond = make_procedure("lond", 0.025, 20)
for arm in inp.arms:
    d = lond.test_one(arm.p_value)
    print(f"{arm.label}: p={d.p_value:.3f} level={d.level:.5f} reject={d.rejected}")
print("alpha_8 =", lond.next_level())

# %% [markdown]
# Swapping the order of B and C matters for ADDIS and ADDIS-spending. Both
# discount large p-values and track candidates, so the history matters.

# %%
swapped = casestudy.run_case_study(casestudy.stampede("swapped"), ("addis", "addis_spending"))
print(casestudy.format_rows(swapped))
