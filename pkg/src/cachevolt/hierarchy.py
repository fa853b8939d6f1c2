"""
Two-level cache and memory-system optimization.

AMAT uses the standard two-level form with a local L2 miss rate:

    amat = l1_hit + l1_miss * (l2_hit + l2_miss * mem_latency)

Hit times are the cache_delay of each level's assignment. Energy over an
evaluation window is leakage power times runtime plus per-access dynamic
energy propagated down the hierarchy by misses.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .cache import KINDS, Assignment, CacheSpec, SchemeKind, cache_delay, cache_leakage
from .errors import DataError, MissingMissRate, NoFeasibleL1, NoFeasibleL2
from .single import (
    DEFAULT_DP_RESOLUTION,
    DEFAULT_ORACLE_CAP,
    OptProblem,
    OptResult,
    optimize,
)
from .tech import TechGrid, TechPoint

OBJECTIVES = ("leakage", "total_energy")


@dataclass(frozen=True)
class MissRateTable:
    entries: Mapping[tuple[int, int], tuple[float, float]]
    workload: str = "synthetic"

    def __post_init__(self):
        for (l1, l2), (m1, m2) in self.entries.items():
            if not (0.0 <= m1 <= 1.0 and 0.0 <= m2 <= 1.0):
                raise DataError(f"miss rates for ({l1}, {l2}) outside [0, 1]: {m1}, {m2}")
        by_l1: dict[int, list[tuple[int, float]]] = {}
        for (l1, l2), (_, m2) in self.entries.items():
            by_l1.setdefault(l1, []).append((l2, m2))
        for l1, rows in by_l1.items():
            rows.sort()
            for (sa, ma), (sb, mb) in zip(rows, rows[1:]):
                if mb > ma:
                    raise DataError(
                        f"L2 local miss rate rises from {ma} at {sa} B to {mb} at {sb} B (l1={l1} B)"
                    )

    def lookup(self, l1_size: int, l2_size: int) -> tuple[float, float]:
        try:
            return self.entries[(l1_size, l2_size)]
        except KeyError:
            raise MissingMissRate(l1_size, l2_size) from None


@dataclass(frozen=True)
class HierarchySpec:
    l1_candidates: Sequence[CacheSpec]
    l2_candidates: Sequence[CacheSpec]
    miss_table: MissRateTable
    mem_latency: float
    mem_energy_per_access: float = 0.0
    accesses: float = 0.0
    runtime: float = 0.0

    def __post_init__(self):
        if not self.l1_candidates or not self.l2_candidates:
            raise ValueError("candidate lists must be non-empty")
        if not self.mem_latency > 0:
            raise ValueError("mem_latency must be positive")
        for l1 in self.l1_candidates:
            for l2 in self.l2_candidates:
                self.miss_table.lookup(l1.size, l2.size)

    def rates(self, l1_index: int, l2_index: int) -> tuple[float, float]:
        return self.miss_table.lookup(self.l1_candidates[l1_index].size,
                                      self.l2_candidates[l2_index].size)


@dataclass(frozen=True)
class SystemAssignment:
    l1_index: int
    l2_index: int
    l1_assignment: Assignment
    l2_assignment: Assignment


@dataclass(frozen=True)
class EnergyBreakdown:
    l1_leakage_energy: float
    l2_leakage_energy: float
    l1_dynamic: float
    l2_dynamic: float
    mem_dynamic: float
    amat: float

    @property
    def total(self) -> float:
        return math.fsum([self.l1_leakage_energy, self.l2_leakage_energy,
                          self.l1_dynamic, self.l2_dynamic, self.mem_dynamic])


def amat(l1_hit: float, l1_miss: float, l2_hit: float, l2_miss: float, mem_latency: float) -> float:
    return l1_hit + l1_miss * (l2_hit + l2_miss * mem_latency)


def system_amat(h: HierarchySpec, s: SystemAssignment) -> float:
    l1, l2 = h.l1_candidates[s.l1_index], h.l2_candidates[s.l2_index]
    m1, m2 = h.rates(s.l1_index, s.l2_index)
    return amat(cache_delay(l1, s.l1_assignment), m1, cache_delay(l2, s.l2_assignment), m2,
                h.mem_latency)


def system_energy(h: HierarchySpec, s: SystemAssignment) -> EnergyBreakdown:
    l1, l2 = h.l1_candidates[s.l1_index], h.l2_candidates[s.l2_index]
    m1, m2 = h.rates(s.l1_index, s.l2_index)
    return EnergyBreakdown(
        l1_leakage_energy=cache_leakage(l1, s.l1_assignment) * h.runtime,
        l2_leakage_energy=cache_leakage(l2, s.l2_assignment) * h.runtime,
        l1_dynamic=h.accesses * l1.read_energy,
        l2_dynamic=h.accesses * m1 * l2.read_energy,
        mem_dynamic=h.accesses * m1 * m2 * h.mem_energy_per_access,
        amat=system_amat(h, s),
    )


def system_leakage(h: HierarchySpec, s: SystemAssignment) -> float:
    return (cache_leakage(h.l1_candidates[s.l1_index], s.l1_assignment)
            + cache_leakage(h.l2_candidates[s.l2_index], s.l2_assignment))


def _objective_value(h, s, objective) -> float:
    if objective == "leakage":
        return system_leakage(h, s)
    if objective == "total_energy":
        return system_energy(h, s).total
    raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


def _unbounded_budget(spec: CacheSpec) -> float:
    """A delay budget no assignment on the grid can exceed."""
    grid = spec.grid
    v = np.array(grid.vth_values())[:, None]
    t = np.array(grid.tox_values())[None, :]
    worst = sum(float(np.max(spec.models[k].delay(v, t))) for k in KINDS)
    return 2.0 * abs(worst) + 1.0


@dataclass(frozen=True)
class LevelCandidate:
    """Outcome of optimizing one candidate cache at a back-solved hit-time budget."""

    index: int
    name: str
    hit_budget: float
    result: OptResult | None
    system: SystemAssignment | None
    breakdown: EnergyBreakdown | None
    objective: float = math.inf

    @property
    def feasible(self) -> bool:
        return self.result is not None and self.result.feasible


@dataclass(frozen=True)
class LevelSearch:
    candidates: list[LevelCandidate]
    best_index: int
    objective: str

    @property
    def best(self) -> LevelCandidate:
        return self.candidates[self.best_index]


def _solve_level(h, spec, hit_budget, scheme, method, cap, resolution):
    if math.isinf(hit_budget):
        hit_budget = _unbounded_budget(spec)
    if hit_budget <= 0:
        return None
    return optimize(OptProblem(spec, scheme, hit_budget), method, cap, resolution)


def optimize_l2(h: HierarchySpec, l1_index: int, l1_assignment: Assignment, amat_budget: float,
                split: SchemeKind = SchemeKind.II, objective: str = "leakage",
                method: str = "auto", cap: int = DEFAULT_ORACLE_CAP,
                resolution: int = DEFAULT_DP_RESOLUTION) -> LevelSearch:
    """Best L2 organization for a fixed L1 under an AMAT budget.

    Each L2 candidate gets the hit-time budget left over after the L1 hit time
    and the memory miss penalty; the single-cache search then minimizes its leakage.
    """
    l1 = h.l1_candidates[l1_index]
    l1_hit = cache_delay(l1, l1_assignment)
    out = []
    for j, l2 in enumerate(h.l2_candidates):
        m1, m2 = h.rates(l1_index, j)
        if m1 == 0:
            hit_budget = math.inf if l1_hit <= amat_budget else -math.inf
        else:
            hit_budget = (amat_budget - l1_hit) / m1 - m2 * h.mem_latency
        res = _solve_level(h, l2, hit_budget, split, method, cap, resolution)
        if res is None or not res.feasible:
            out.append(LevelCandidate(j, l2.name, hit_budget, res, None, None))
            continue
        s = SystemAssignment(l1_index, j, l1_assignment, res.assignment)
        out.append(LevelCandidate(j, l2.name, hit_budget, res, s, system_energy(h, s),
                                  _objective_value(h, s, objective)))
    feasible = [c for c in out if c.feasible]
    if not feasible:
        raise NoFeasibleL2(f"no L2 candidate meets AMAT budget {amat_budget:.4g} s")
    best = min(feasible, key=lambda c: (c.objective, c.breakdown.amat, c.index))
    return LevelSearch(out, best.index, objective)


def optimize_l1(h: HierarchySpec, l2_index: int, l2_assignment: Assignment, amat_budget: float,
                scheme: SchemeKind = SchemeKind.II, objective: str = "leakage",
                method: str = "auto", cap: int = DEFAULT_ORACLE_CAP,
                resolution: int = DEFAULT_DP_RESOLUTION) -> LevelSearch:
    """Best L1 candidate and assignment with the L2 held fixed."""
    l2 = h.l2_candidates[l2_index]
    l2_hit = cache_delay(l2, l2_assignment)
    out = []
    for i, l1 in enumerate(h.l1_candidates):
        m1, m2 = h.rates(i, l2_index)
        hit_budget = amat_budget - m1 * (l2_hit + m2 * h.mem_latency)
        res = _solve_level(h, l1, hit_budget, scheme, method, cap, resolution)
        if res is None or not res.feasible:
            out.append(LevelCandidate(i, l1.name, hit_budget, res, None, None))
            continue
        s = SystemAssignment(i, l2_index, res.assignment, l2_assignment)
        out.append(LevelCandidate(i, l1.name, hit_budget, res, s, system_energy(h, s),
                                  _objective_value(h, s, objective)))
    feasible = [c for c in out if c.feasible]
    if not feasible:
        raise NoFeasibleL1(f"no L1 candidate meets AMAT budget {amat_budget:.4g} s")
    best = min(feasible, key=lambda c: (c.objective, c.breakdown.amat, c.index))
    return LevelSearch(out, best.index, objective)


# ---------------------------------------------------------------------------
# (Tox, Vth) tuple problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TupleBudget:
    max_tox_values: int
    max_vth_values: int

    def __post_init__(self):
        if self.max_tox_values < 1 or self.max_vth_values < 1:
            raise ValueError("tuple budget counts must be >= 1")


@dataclass(frozen=True)
class TupleCell:
    m: int  # distinct tox values
    n: int  # distinct vth values
    feasible: bool
    energy: float
    system: SystemAssignment | None = None
    breakdown: EnergyBreakdown | None = None
    tox_values: tuple[float, ...] = ()
    vth_values: tuple[float, ...] = ()


@dataclass(frozen=True)
class TupleSweep:
    cells: dict[tuple[int, int], TupleCell]
    amat_budget: float
    objective: str
    vth_candidates: tuple[float, ...] = field(default=())
    tox_candidates: tuple[float, ...] = field(default=())

    def matrix(self) -> np.ndarray:
        """Objective values indexed [m - 1, n - 1]; inf marks infeasible cells."""
        M = max(m for m, _ in self.cells)
        N = max(n for _, n in self.cells)
        out = np.full((M, N), np.inf)
        for (m, n), c in self.cells.items():
            if c.feasible:
                out[m - 1, n - 1] = c.energy
        return out


@dataclass(frozen=True)
class _Frontier:
    """Pareto set of (delay, leakage) over whole-cache assignments; delay ascending, leakage descending."""

    delay: np.ndarray
    leak: np.ndarray
    choice: np.ndarray  # (n_points, n_components) indices into the point list


def _prune(delay, leak, choice) -> _Frontier:
    order = np.lexsort((leak, delay))
    delay, leak, choice = delay[order], leak[order], choice[order]
    running = np.minimum.accumulate(leak)
    keep = np.ones(len(leak), dtype=bool)
    keep[1:] = leak[1:] < running[:-1]
    return _Frontier(delay[keep], leak[keep], choice[keep])


def cache_frontier(spec: CacheSpec, points: Sequence[TechPoint]) -> _Frontier:
    """Exact (delay, leakage) Pareto frontier over every per-component assignment from `points`."""
    v = np.array([p.vth for p in points])
    t = np.array([p.tox for p in points])
    front = None
    for k in KINDS:
        d = np.asarray(spec.models[k].delay(v, t), dtype=float)
        lk = np.asarray(spec.models[k].leakage(v, t), dtype=float)
        comp = _prune(d, lk, np.arange(len(points))[:, None])
        if front is None:
            front = comp
            continue
        a, b = len(front.delay), len(comp.delay)
        dd = (front.delay[:, None] + comp.delay[None, :]).ravel()
        ll = (front.leak[:, None] + comp.leak[None, :]).ravel()
        ch = np.hstack([np.repeat(front.choice, b, axis=0), np.tile(comp.choice, (a, 1))])
        front = _prune(dd, ll, ch)
    return front


def _combine(h, i, j, f1, f2, amat_budget):
    """Best energy pairing of an L1 frontier point with an L2 frontier point, or None."""
    m1, m2 = h.rates(i, j)
    l1, l2 = h.l1_candidates[i], h.l2_candidates[j]
    room = amat_budget - m1 * m2 * h.mem_latency
    dyn = h.accesses * (l1.read_energy + m1 * l2.read_energy + m1 * m2 * h.mem_energy_per_access)
    if m1 > 0:
        allow = (room - f1.delay) / m1
        k = np.searchsorted(f2.delay, allow, side="right") - 1
    else:
        k = np.where(f1.delay <= room, len(f2.delay) - 1, -1)
    ok = k >= 0
    if not ok.any():
        return None
    leak = np.where(ok, f1.leak + f2.leak[np.maximum(k, 0)], np.inf)
    a = int(np.argmin(leak))
    return float(leak[a]), a, int(k[a]), dyn


class _Scorer:
    def __init__(self, h, objective):
        if objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
        self.h, self.objective = h, objective

    def __call__(self, leak, dyn):
        if self.objective == "leakage":
            return leak
        return leak * self.h.runtime + dyn


def _best_over_points(h, points, amat_budget, scorer, fronts=None):
    """Exact optimum over all L1/L2 candidates with each component free to pick any of `points`."""
    f1s = [cache_frontier(s, points) for s in h.l1_candidates]
    f2s = [cache_frontier(s, points) for s in h.l2_candidates]
    best = None
    for j in range(len(h.l2_candidates)):
        for i in range(len(h.l1_candidates)):
            hit = _combine(h, i, j, f1s[i], f2s[j], amat_budget)
            if hit is None:
                continue
            leak, a, b, dyn = hit
            score = scorer(leak, dyn)
            if best is None or score < best[0]:
                asg1 = Assignment(tuple(points[c] for c in f1s[i].choice[a]))
                asg2 = Assignment(tuple(points[c] for c in f2s[j].choice[b]))
                best = (score, SystemAssignment(i, j, asg1, asg2))
    return best


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("CACHEVOLT_THREADS", "1")))
    except ValueError:
        return 1


def tuple_sweep(h: HierarchySpec, amat_budget: float, max_m: int, max_n: int,
                values: TechGrid | None = None, objective: str = "total_energy") -> TupleSweep:
    """Best system energy using at most m distinct tox and n distinct vth values, for every (m, n).

    Value candidates default to a 5 x 5 coarsening of the first L1 candidate's
    grid. For each choice of value subsets the optimum over all L1/L2 candidate
    pairs and all component mappings is exact, via Pareto-frontier merging.
    """
    TupleBudget(max_m, max_n)
    scorer = _Scorer(h, objective)
    if values is None:
        values = h.l1_candidates[0].grid.coarsen(5, 5)
    vths, toxs = values.vth_values(), values.tox_values()

    def cell(mn):
        m, n = mn
        best = None
        for tsub in itertools.combinations(toxs, min(m, len(toxs))):
            for vsub in itertools.combinations(vths, min(n, len(vths))):
                pts = [TechPoint(v, t) for v in vsub for t in tsub]
                hit = _best_over_points(h, pts, amat_budget, scorer)
                if hit is not None and (best is None or hit[0] < best[0]):
                    best = (hit[0], hit[1], tsub, vsub)
        if best is None:
            return TupleCell(m, n, False, math.inf)
        score, s, tsub, vsub = best
        return TupleCell(m, n, True, score, s, system_energy(h, s), tsub, vsub)

    keys = [(m, n) for m in range(1, max_m + 1) for n in range(1, max_n + 1)]
    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(cell, keys))
    else:
        cells = [cell(k) for k in keys]
    return TupleSweep(dict(zip(keys, cells)), amat_budget, objective, tuple(vths), tuple(toxs))


def joint_oracle(h: HierarchySpec, amat_budget: float, points: Sequence[TechPoint],
                 objective: str = "total_energy", cap: int = 10**6):
    """Brute-force joint optimum with every component free over `points` on both levels.

    Enumerates every per-level assignment (len(points)**4 each, bounded by
    `cap`), then pairs levels through a delay-sorted prefix minimum. Returns
    ``(score, SystemAssignment)`` or None when nothing meets the budget.
    """
    n = len(points)
    if n ** len(KINDS) > cap:
        raise ValueError(f"{n}**4 level assignments exceed cap {cap}")
    scorer = _Scorer(h, objective)
    v = np.array([p.vth for p in points])
    t = np.array([p.tox for p in points])
    combos = np.array(list(itertools.product(range(n), repeat=len(KINDS))))

    def level_table(spec):
        d = sum(np.asarray(spec.models[k].delay(v, t))[combos[:, c]] for c, k in enumerate(KINDS))
        lk = sum(np.asarray(spec.models[k].leakage(v, t))[combos[:, c]] for c, k in enumerate(KINDS))
        return d, lk

    t1 = [level_table(s) for s in h.l1_candidates]
    t2 = [level_table(s) for s in h.l2_candidates]
    best = None
    for j, (d2, l2) in enumerate(t2):
        order = np.argsort(d2, kind="stable")
        d2s = d2[order]
        pref = np.minimum.accumulate(l2[order])
        pref_arg = np.zeros(len(pref), dtype=int)
        for r in range(1, len(pref)):
            pref_arg[r] = r if l2[order][r] < pref[r - 1] else pref_arg[r - 1]
        for i, (d1, l1) in enumerate(t1):
            m1, m2 = h.rates(i, j)
            room = amat_budget - m1 * m2 * h.mem_latency
            if m1 > 0:
                k = np.searchsorted(d2s, (room - d1) / m1, side="right") - 1
            else:
                k = np.where(d1 <= room, len(d2s) - 1, -1)
            ok = k >= 0
            if not ok.any():
                continue
            leak = np.where(ok, l1 + pref[np.maximum(k, 0)], np.inf)
            a = int(np.argmin(leak))
            dyn = h.accesses * (h.l1_candidates[i].read_energy + m1 * h.l2_candidates[j].read_energy
                                + m1 * m2 * h.mem_energy_per_access)
            score = scorer(float(leak[a]), dyn)
            if best is None or score < best[0]:
                b = int(order[pref_arg[k[a]]])
                s = SystemAssignment(i, j,
                                     Assignment(tuple(points[c] for c in combos[a])),
                                     Assignment(tuple(points[c] for c in combos[b])))
                best = (score, s)
    return best
