"""
Synthetic characterization data, cache specs and miss-rate tables.

None of these numbers come from a real process or benchmark run. They are
hand-built scaling rules meant to sit in a plausible 65 nm-like regime:

* gate leakage at the thinnest oxide is about twice the subthreshold leakage
  at the lowest Vth;
* the Vth knob moves delay by ~40 % across its range, the Tox knob by ~10 %;
* cell-array leakage grows linearly with capacity, peripheral leakage with
  its square root, so the cell array dominates by >= 10x;
* access time grows as size**0.35;
* the L2 local miss rate decays exponentially with capacity toward a floor.
"""

from __future__ import annotations

import math

import numpy as np

from .cache import KINDS, CacheSpec, ComponentKind
from .hierarchy import HierarchySpec, MissRateTable
from .tech import (
    DEFAULT_GRID,
    ComponentModel,
    DelayCoeffs,
    LeakageCoeffs,
    TechGrid,
    TechPoint,
    sample_model,
)

REF_SIZE = 16 * 1024
KB = 1024

# per-component shape at the 16 KB reference:
#   subthreshold leakage at (vth_min, tox_min) [W], size exponent,
#   share of access time, Vth delay exponent k3 [1/V]
_PROFILE = {
    ComponentKind.CELL_ARRAY:      dict(sub=2.0e-3, size_exp=1.0, share=0.35, k3=2.0),
    ComponentKind.DECODER:         dict(sub=8.0e-5, size_exp=0.5, share=0.30, k3=2.4),
    ComponentKind.ADDRESS_DRIVERS: dict(sub=4.0e-5, size_exp=0.5, share=0.15, k3=1.8),
    ComponentKind.DATA_DRIVERS:    dict(sub=6.0e-5, size_exp=0.5, share=0.20, k3=2.2),
}
# leakage slopes are device properties, shared by every component of a cache
SUB_SLOPE = -20.0   # 1/V, ~115 mV/decade
GATE_SLOPE = -1.0   # 1/A
GATE_TO_SUB = 2.0       # gate / subthreshold leakage at (vth_min, tox_min)
FLOOR_FRACTION = 0.02   # size-independent floor relative to subthreshold
VTH_DELAY_SPAN = 0.40   # fractional delay increase, vth_min -> vth_max
TOX_DELAY_SPAN = 0.10   # fractional delay increase, tox_min -> tox_max
REF_ACCESS_TIME = 1.0e-9
ACCESS_TIME_EXP = 0.35
REF_READ_ENERGY = 0.1e-9  # J per access at 16 KB
READ_ENERGY_EXP = 0.5


def synthetic_component(kind: ComponentKind, size: int, grid: TechGrid = DEFAULT_GRID,
                        rng: np.random.Generator | None = None, jitter: float = 0.0,
                        sub_slope: float = SUB_SLOPE, gate_slope: float = GATE_SLOPE) -> ComponentModel:
    """Coefficients for one component of a `size`-byte cache.

    With `rng` and `jitter` > 0, the amplitude and the delay shape are scaled
    by independent log-normal factors of width `jitter`.
    """
    prof = _PROFILE[kind]
    s = size / REF_SIZE

    def wiggle(x):
        if rng is None or not jitter:
            return x
        return x * math.exp(jitter * rng.standard_normal())

    v0, t0 = grid.vth_min, grid.tox_min
    dv, dt = grid.vth_max - grid.vth_min, grid.tox_max - grid.tox_min
    sub = wiggle(prof["sub"]) * s ** prof["size_exp"]
    leak = LeakageCoeffs(
        A0=FLOOR_FRACTION * sub,
        A1=sub * math.exp(-sub_slope * v0),
        a1=sub_slope,
        A2=GATE_TO_SUB * sub * math.exp(-gate_slope * t0),
        a2=gate_slope,
    )
    D = wiggle(prof["share"]) * REF_ACCESS_TIME * s ** ACCESS_TIME_EXP
    k3 = wiggle(prof["k3"])
    k1 = VTH_DELAY_SPAN * D / (math.exp(k3 * (v0 + dv)) - math.exp(k3 * v0))
    k2 = TOX_DELAY_SPAN * D / dt
    k0 = D - k1 * math.exp(k3 * v0) - k2 * t0
    return ComponentModel(leak, DelayCoeffs(k0=k0, k1=k1, k2=k2, k3=k3))


def synthetic_cache(size: int, name: str | None = None, grid: TechGrid = DEFAULT_GRID,
                    rng: np.random.Generator | None = None, jitter: float = 0.0) -> CacheSpec:
    if rng is not None and jitter:
        slopes = dict(sub_slope=SUB_SLOPE * math.exp(jitter * rng.standard_normal()),
                      gate_slope=GATE_SLOPE * math.exp(jitter * rng.standard_normal()))
    else:
        slopes = {}
    models = {k: synthetic_component(k, size, grid, rng, jitter, **slopes) for k in KINDS}
    read_energy = REF_READ_ENERGY * (size / REF_SIZE) ** READ_ENERGY_EXP
    return CacheSpec(name or f"{size // KB}KB", size, models, read_energy, grid)


def synthetic_family(count: int, seed: int = 0, size: int = REF_SIZE, jitter: float = 0.15,
                     grid: TechGrid = DEFAULT_GRID) -> list[CacheSpec]:
    """Jittered 16 KB specs; the cell array stays the dominant leaker (>= 10x each peripheral)."""
    rng = np.random.default_rng(seed)
    return [synthetic_cache(size, f"{size // KB}KB-{i}", grid, rng, jitter) for i in range(count)]


TINY_GRID = TechGrid(0.2, 0.5, 0.3, 10.0, 14.0, 4.0)


def tiny_cache() -> CacheSpec:
    """16 KB synthetic cache on a 2 x 2 grid, small enough to check by hand."""
    return synthetic_cache(REF_SIZE, "tiny", TINY_GRID)


def random_spec(rng: np.random.Generator, grid: TechGrid, name: str = "random") -> CacheSpec:
    """Sign-valid random coefficients with no physical calibration, for property tests."""
    models = {}
    v0, t0 = grid.vth_min, grid.tox_min
    for k in KINDS:
        amp = 10 ** rng.uniform(-1, 1)
        a1 = -rng.uniform(2, 25)
        a2 = -rng.uniform(0.2, 1.5)
        leak = LeakageCoeffs(
            A0=amp * rng.uniform(0, 0.1),
            A1=amp * rng.uniform(0.2, 1.0) * math.exp(-a1 * v0),
            a1=a1,
            A2=amp * rng.uniform(0.2, 2.0) * math.exp(-a2 * t0),
            a2=a2,
        )
        D = rng.uniform(0.2, 1.0)
        k3 = rng.uniform(0.5, 4.0)
        k1 = D * rng.uniform(0.1, 0.6) / math.exp(k3 * v0)
        k2 = D * rng.uniform(0.01, 0.1)
        delay = DelayCoeffs(k0=D * rng.uniform(0.0, 0.5), k1=k1, k2=k2, k3=k3)
        models[k] = ComponentModel(leak, delay)
    return CacheSpec(name, 16 * KB, models, 0.0, grid)


def characterization_samples(model: ComponentModel, grid: TechGrid | None = None,
                             noise: float = 0.0, seed: int = 0):
    """Samples of `model` on a 5 x 5 sub-grid (or `grid`), mimicking a simulation sweep."""
    grid = grid or DEFAULT_GRID.coarsen(5, 5)
    rng = np.random.default_rng(seed)
    return sample_model(model, grid.points(), noise=noise, rng=rng)


L1_SIZES = (4 * KB, 8 * KB, 16 * KB, 32 * KB, 64 * KB)
L2_SIZES = (128 * KB, 256 * KB, 512 * KB, 1024 * KB, 2048 * KB)


def l1_miss_rate(size: int) -> float:
    # nearly flat across 4-64 KB
    return round(0.050 - 0.002 * math.log2(size / (4 * KB)), 6)


def l2_local_miss_rate(size: int, l1_size: int = REF_SIZE) -> float:
    floor, amp, scale = 0.08, 0.30, 400 * KB
    shift = 0.002 * math.log2(l1_size / (4 * KB))  # bigger L1 leaves a harder miss stream
    return round(min(1.0, floor + shift + amp * math.exp(-size / scale)), 6)


def synthetic_miss_table(l1_sizes=L1_SIZES, l2_sizes=L2_SIZES, workload="synthetic") -> MissRateTable:
    entries = {(a, b): (l1_miss_rate(a), l2_local_miss_rate(b, a)) for a in l1_sizes for b in l2_sizes}
    return MissRateTable(entries, workload)


MEM_LATENCY = 40e-9
MEM_ENERGY = 5e-9
ACCESSES = 1.0e8
RUNTIME = 1.0


def synthetic_hierarchy(l1_sizes=L1_SIZES, l2_sizes=L2_SIZES, grid: TechGrid = DEFAULT_GRID,
                        mem_latency: float = MEM_LATENCY, mem_energy: float = MEM_ENERGY,
                        accesses: float = ACCESSES, runtime: float = RUNTIME) -> HierarchySpec:
    return HierarchySpec(
        l1_candidates=[synthetic_cache(s, f"L1-{s // KB}KB", grid) for s in l1_sizes],
        l2_candidates=[synthetic_cache(s, f"L2-{s // KB}KB", grid) for s in l2_sizes],
        miss_table=synthetic_miss_table(l1_sizes, l2_sizes),
        mem_latency=mem_latency,
        mem_energy_per_access=mem_energy,
        accesses=accesses,
        runtime=runtime,
    )


# configuration the shipped experiments are run at
DEFAULT_L1_POINT = TechPoint(0.3, 12.0)   # fixed L1 for the L2 search
FIXED_L2_SIZE = 512 * KB
DEFAULT_L2_POINT = TechPoint(0.4, 13.0)   # fixed L2 for the L1 search
KNEE_AMAT_BUDGET = 1.82e-9
L1_AMAT_BUDGET = 1.6e-9
TUPLE_AMAT_BUDGET = 1.4e-9
FRONTIER_BUDGETS = tuple(round(1.05e-9 + i * 0.05e-9, 15) for i in range(10))
