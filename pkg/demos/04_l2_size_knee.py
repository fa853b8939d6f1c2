"""Choosing an L2 size under a fixed AMAT budget.

The L1 is fixed. Each L2 size gets the hit-time budget left over once the
L1 hit and the memory penalty are paid, and is then optimized for leakage.
Small L2s miss more often and need fast, leaky devices. Large L2s leak
because they are large. The best size sits in between.
"""
# %%
from cachevolt import Assignment, SchemeKind, optimize_l2
from cachevolt.synthetic import DEFAULT_L1_POINT, KNEE_AMAT_BUDGET, synthetic_hierarchy

h = synthetic_hierarchy()
l1 = [c.size for c in h.l1_candidates].index(16 * 1024)

for split in (SchemeKind.III, SchemeKind.II):
    search = optimize_l2(h, l1, Assignment.uniform(DEFAULT_L1_POINT), KNEE_AMAT_BUDGET, split=split)
    print(f"scheme {split.value}")
    for c in search.candidates:
        mark = "  <- best" if c.index == search.best_index else ""
        print(f"    {c.name:>10}: hit budget {c.hit_budget * 1e9:6.2f} ns, "
              f"system leakage {c.objective * 1e3:7.3f} mW{mark}")
