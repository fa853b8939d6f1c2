"""How far each knob moves leakage and delay.

Hold one knob fixed on every component and sweep the other. The Tox sweep
covers a wider leakage range but barely moves delay, while the Vth sweep
does the opposite.
"""
# %%
from cachevolt import fixed_knob_sweep
from cachevolt.synthetic import synthetic_cache

spec = synthetic_cache(16 * 1024)
for knob, value in (("vth", 0.2), ("tox", 10.0)):
    curve = fixed_knob_sweep(spec, knob, value)
    print(f"{knob} fixed at {value}: delay span {curve.delay_span * 1e9:.3f} ns, "
          f"leakage span {curve.leakage_span * 1e3:.3f} mW")
    for (d, lk), free in list(zip(curve.points, curve.free_values))[::2]:
        print(f"    free={free:<6} delay {d * 1e9:.3f} ns  leakage {lk * 1e3:.3f} mW")
