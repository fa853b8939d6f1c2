"""How many distinct Tox and Vth values does a process need?

For every (m, n) up to 3 x 3, find the lowest total energy of the two-level
system when devices may use at most m oxide thicknesses and n threshold
voltages. Set CACHEVOLT_THREADS to spread cells over threads.
"""
# %%
from cachevolt import tuple_sweep
from cachevolt.synthetic import TUPLE_AMAT_BUDGET, synthetic_hierarchy

h = synthetic_hierarchy()
sweep = tuple_sweep(h, TUPLE_AMAT_BUDGET, 3, 3)
M = sweep.matrix()

# %%
print("total energy [mJ], rows = #tox values, columns = #vth values")
print("        " + "".join(f"{f'n={n}':>10}" for n in (1, 2, 3)))
for m in range(3):
    print(f"  m={m + 1}  " + "".join(f"{M[m, n] * 1e3:10.4f}" for n in range(3)))

best = sweep.cells[(2, 2)]
print(f"dual tox / dual vth uses tox {best.tox_values} and vth {best.vth_values}")
