"""Minimum-leakage (Vth, Tox) assignment for a 16 KB cache.

Three sharing schemes are compared over a range of delay budgets:
each component free (I), cell array plus a shared peripheral pair (II),
and one pair for everything (III).
"""
# %%
from cachevolt import ComponentKind, SchemeKind, pareto_frontier
from cachevolt.synthetic import FRONTIER_BUDGETS, synthetic_cache

spec = synthetic_cache(16 * 1024)
curves = {s: pareto_frontier(spec, s, FRONTIER_BUDGETS) for s in SchemeKind}

# %%
print(f"{'budget ns':>9}  " + "  ".join(f"{'scheme ' + s.value + ' mW':>14}" for s in SchemeKind))
for i, b in enumerate(FRONTIER_BUDGETS):
    row = "  ".join(f"{curves[s][i].leakage * 1e3:14.4f}" for s in SchemeKind)
    print(f"{b * 1e9:9.2f}  {row}")

# %% Under scheme II the cell array ends up with the higher Vth and thicker oxide.
for r in curves[SchemeKind.II][::3]:
    core = r.assignment[ComponentKind.CELL_ARRAY]
    peri = r.assignment[ComponentKind.DECODER]
    print(f"{r.budget * 1e9:.2f} ns: cell array {core}, peripherals {peri}")
