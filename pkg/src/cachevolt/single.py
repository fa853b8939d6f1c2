"""
Minimum-leakage (Vth, Tox) assignment for a single cache under a delay budget.

Two solvers share one contract:

* ``optimize_oracle`` enumerates every grid assignment allowed by the sharing
  scheme. Exact, exponential in the number of classes.
* ``optimize_separable`` treats each sharing class as one group of a
  multiple-choice knapsack: candidate points are pruned to their
  (delay, leakage) Pareto set and combined by dynamic programming over
  quantized delay. Delays are rounded up, so every returned assignment
  is truly feasible; the price is at most one quantization step of
  budget per class.

Tie-breaking is deterministic: lowest leakage, then lowest delay, then the
lexicographically smallest (vth, tox) per component in ComponentKind order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cache import (
    Assignment,
    CacheSpec,
    SchemeKind,
    cache_delay,
    cache_leakage,
    class_tables,
    expand_scheme,
)
from .errors import EnumerationTooLarge, OffGridValue
from .tech import TechPoint

DEFAULT_ORACLE_CAP = 10**8
DEFAULT_DP_RESOLUTION = 10**5


@dataclass(frozen=True)
class OptProblem:
    spec: CacheSpec
    scheme: SchemeKind
    delay_budget: float

    def __post_init__(self):
        if not self.delay_budget > 0:
            raise ValueError("delay_budget must be positive")


@dataclass(frozen=True)
class OptResult:
    assignment: Assignment
    leakage: float
    delay: float
    feasible: bool
    method: str
    budget: float = math.inf
    # worst-case budget given up to delay quantization; 0 for exact searches
    slack_bound: float = 0.0

    @property
    def slack(self) -> float:
        return self.budget - self.delay


@dataclass(frozen=True)
class SweepCurve:
    fixed_knob: str
    fixed_value: float
    points: list[tuple[float, float]]  # (delay, leakage), delay ascending
    free_values: list[float] = field(default_factory=list)

    @property
    def delay_span(self) -> float:
        d = [p[0] for p in self.points]
        return max(d) - min(d)

    @property
    def leakage_span(self) -> float:
        lk = [p[1] for p in self.points]
        return max(lk) - min(lk)


def enumeration_count(spec: CacheSpec, scheme: SchemeKind) -> int:
    return len(spec.grid) ** scheme.n_classes


def _result(spec, scheme, pts, idx, budget, method, slack_bound=0.0) -> OptResult:
    asg = expand_scheme(scheme, [pts[i] for i in idx])
    lk = cache_leakage(spec, asg)
    dl = cache_delay(spec, asg)
    return OptResult(asg, lk, dl, dl <= budget, method, budget, slack_bound)


def _min_delay_choice(leak, delay) -> tuple[int, ...]:
    """Per-class minimum delay, ties to lower leakage then lower index. Classes are independent."""
    idx = []
    for L, D in zip(leak, delay):
        order = np.lexsort((np.arange(len(L)), L, D))
        idx.append(int(order[0]))
    return tuple(idx)


def _best_in_block(L, D, budget):
    """Best feasible flat index in a C-ordered block, or None."""
    mask = D <= budget
    if not mask.any():
        return None
    Lm = np.where(mask, L, np.inf)
    lmin = Lm.min()
    tie = Lm == lmin
    Dm = np.where(tie, D, np.inf)
    dmin = Dm.min()
    flat = int(np.flatnonzero(Dm == dmin)[0])
    return flat, float(lmin), float(dmin)


def optimize_oracle(p: OptProblem, cap: int = DEFAULT_ORACLE_CAP) -> OptResult:
    """Exhaustive search over every grid assignment allowed by the scheme."""
    spec, scheme, budget = p.spec, p.scheme, p.delay_budget
    count = enumeration_count(spec, scheme)
    if count > cap:
        raise EnumerationTooLarge(
            f"{count} assignments exceed the oracle cap {cap}; use optimize_separable"
        )
    pts, leak, delay = class_tables(spec, scheme)
    n, K = len(pts), scheme.n_classes
    inner = min(K, 2)
    n_outer = K - inner

    # inner block: last `inner` classes broadcast as an n x n (or length-n) array
    if inner == 1:
        Lin, Din = leak[-1], delay[-1]
    else:
        Lin = leak[-2][:, None] + leak[-1][None, :]
        Din = delay[-2][:, None] + delay[-1][None, :]
    Lin, Din = Lin.ravel(), Din.ravel()

    best = None  # (leak, delay, index tuple)
    for outer in itertools.product(range(n), repeat=n_outer):
        lo = sum(float(leak[c][i]) for c, i in enumerate(outer))
        do = sum(float(delay[c][i]) for c, i in enumerate(outer))
        hit = _best_in_block(lo + Lin, do + Din, budget)
        if hit is None:
            continue
        flat, lk, dl = hit
        if best is None or (lk, dl) < best[:2]:
            tail = np.unravel_index(flat, (n,) * inner)
            best = (lk, dl, outer + tuple(int(i) for i in tail))

    if best is None:
        return _result(spec, scheme, pts, _min_delay_choice(leak, delay), budget, "oracle")
    return _result(spec, scheme, pts, best[2], budget, "oracle")


def _pareto_candidates(L: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Indices of non-dominated candidates, ordered by ascending delay (strictly descending leakage)."""
    order = np.lexsort((np.arange(len(L)), L, D))
    keep = []
    best_l = math.inf
    for i in order:
        if L[i] < best_l:
            keep.append(int(i))
            best_l = L[i]
    return np.array(keep, dtype=int)


def optimize_separable(p: OptProblem, resolution: int = DEFAULT_DP_RESOLUTION) -> OptResult:
    """Multiple-choice knapsack over sharing classes with dominance pruning and quantized-delay DP."""
    spec, scheme, budget = p.spec, p.scheme, p.delay_budget
    pts, leak, delay = class_tables(spec, scheme)
    K = scheme.n_classes

    fronts = [_pareto_candidates(L, D) for L, D in zip(leak, delay)]
    if K == 1:
        # one class: a plain scan, identical to the oracle
        L, D = leak[0], delay[0]
        hit = _best_in_block(L, D, budget)
        if hit is None:
            return _result(spec, scheme, pts, _min_delay_choice(leak, delay), budget, "separable")
        return _result(spec, scheme, pts, (hit[0],), budget, "separable")

    # shift every class to a zero minimum delay so quantized weights are non-negative
    dmin = [float(delay[c][f].min()) for c, f in enumerate(fronts)]
    slack_budget = budget - math.fsum(dmin)
    if slack_budget < 0:
        return _result(spec, scheme, pts, _min_delay_choice(leak, delay), budget, "separable")
    if slack_budget == 0:
        idx = tuple(int(f[0]) for f in fronts)
        return _result(spec, scheme, pts, idx, budget, "separable")

    R = int(resolution)
    q = slack_budget / R
    cand, weights, values = [], [], []
    for c, f in enumerate(fronts):
        d = delay[c][f] - dmin[c]
        ok = d <= slack_budget
        f, d = f[ok], d[ok]
        w = np.minimum(np.ceil(d / q), R).astype(np.int64)
        cand.append(f)
        weights.append(w)
        values.append(leak[c][f])

    f_prev = np.zeros(R + 1)
    choices = []
    for c in range(K):
        cur = np.full(R + 1, np.inf)
        ch = np.full(R + 1, -1, dtype=np.int32)
        for j, (w, v) in enumerate(zip(weights[c], values[c])):
            trial = v + f_prev[: R + 1 - w]
            seg = cur[w:]
            better = trial < seg
            seg[better] = trial[better]
            ch[w:][better] = j
        choices.append(ch)
        f_prev = cur

    if not np.isfinite(f_prev[R]):
        return _result(spec, scheme, pts, _min_delay_choice(leak, delay), budget, "separable")
    b = R
    idx = [0] * K
    for c in range(K - 1, -1, -1):
        j = int(choices[c][b])
        idx[c] = int(cand[c][j])
        b -= int(weights[c][j])
    return _result(spec, scheme, pts, tuple(idx), budget, "separable", slack_bound=K * q)


def optimize(p: OptProblem, method: str = "auto", cap: int = DEFAULT_ORACLE_CAP,
             resolution: int = DEFAULT_DP_RESOLUTION) -> OptResult:
    """Dispatch to the oracle when enumeration fits under `cap`, else to the separable search."""
    if method == "oracle" or (method == "auto" and enumeration_count(p.spec, p.scheme) <= cap):
        return optimize_oracle(p, cap=cap)
    if method in ("auto", "separable"):
        return optimize_separable(p, resolution=resolution)
    raise ValueError(f"unknown method {method!r}")


def pareto_frontier(spec: CacheSpec, scheme: SchemeKind, budgets, method: str = "auto",
                    cap: int = DEFAULT_ORACLE_CAP,
                    resolution: int = DEFAULT_DP_RESOLUTION) -> list[OptResult]:
    """One optimum per budget, budgets sorted ascending.

    A result found for a tighter budget is reused when it beats the search at a
    looser one, which keeps leakage non-increasing even with quantized search.
    """
    budgets = sorted(float(b) for b in budgets)
    if not budgets:
        raise ValueError("budgets must be non-empty")
    out: list[OptResult] = []
    for b in budgets:
        r = optimize(OptProblem(spec, scheme, b), method, cap, resolution)
        if out and out[-1].feasible:
            prev = out[-1]
            if not r.feasible or prev.leakage < r.leakage:
                r = OptResult(prev.assignment, prev.leakage, prev.delay, True, prev.method, b,
                              prev.slack_bound)
        out.append(r)
    return out


def fixed_knob_sweep(spec: CacheSpec, knob: str, value: float) -> SweepCurve:
    """Hold one knob at `value` on every component and sweep the other across its grid."""
    grid = spec.grid
    if knob == "vth":
        if grid.vth_index(value) is None:
            raise OffGridValue(f"vth={value} V is not on the grid")
        value = grid.vth_values()[grid.vth_index(value)]
        pts = [TechPoint(value, t) for t in grid.tox_values()]
    elif knob == "tox":
        if grid.tox_index(value) is None:
            raise OffGridValue(f"tox={value} A is not on the grid")
        value = grid.tox_values()[grid.tox_index(value)]
        pts = [TechPoint(v, value) for v in grid.vth_values()]
    else:
        raise ValueError(f"knob must be 'vth' or 'tox', got {knob!r}")
    rows = []
    for p in pts:
        asg = Assignment.uniform(p)
        free = p.tox if knob == "vth" else p.vth
        rows.append((cache_delay(spec, asg), cache_leakage(spec, asg), free))
    rows.sort(key=lambda r: (r[0], r[2]))
    return SweepCurve(knob, value, [(d, lk) for d, lk, _ in rows], [f for _, _, f in rows])
