import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cachevolt.cache import (
    PERIPHERAL,
    Assignment,
    ComponentKind,
    SchemeKind,
    cache_delay,
    cache_leakage,
    expand_scheme,
)
from cachevolt.errors import EnumerationTooLarge, OffGridValue
from cachevolt.single import (
    OptProblem,
    enumeration_count,
    fixed_knob_sweep,
    optimize,
    optimize_oracle,
    optimize_separable,
    pareto_frontier,
)
from cachevolt.synthetic import random_spec, synthetic_cache, synthetic_family, tiny_cache
from cachevolt.tech import TechGrid, TechPoint

SMALL = TechGrid(0.2, 0.5, 0.1, 10.0, 14.0, 2.0)  # 4 x 3 = 12 points
FAST, SLOW = TechPoint(0.2, 10.0), TechPoint(0.5, 14.0)


def brute_force(spec, scheme, budget):
    """Independent reference: scalar evaluation of every class tuple, lexicographic tie-break."""
    best = None
    for combo in itertools.product(spec.grid.points(), repeat=scheme.n_classes):
        asg = expand_scheme(scheme, combo)
        d = cache_delay(spec, asg)
        if d > budget:
            continue
        key = (cache_leakage(spec, asg), d)
        if best is None or key < best[0]:
            best = (key, asg)
    return best


# --- hand-checked tiny case ---------------------------------------------------------

def test_tiny_uniform_table():
    c = tiny_cache()
    table = {p: (cache_leakage(c, Assignment.uniform(p)), cache_delay(c, Assignment.uniform(p)))
             for p in c.grid.points()}
    assert table[FAST] == pytest.approx((6.5836e-3, 1.0e-9), rel=1e-12)
    assert table[TechPoint(0.2, 14.0)] == pytest.approx((2.3034561855548807e-3, 1.1e-9), rel=1e-12)
    assert table[TechPoint(0.5, 10.0)] == pytest.approx((4.409003679745133e-3, 1.4e-9), rel=1e-12)
    assert table[SLOW] == pytest.approx((1.2885986530001368e-4, 1.5e-9), rel=1e-12)


@pytest.mark.parametrize("budget, expected", [
    (1.05e-9, FAST),
    (1.25e-9, TechPoint(0.2, 14.0)),   # thick oxide beats high Vth at equal reach
    (1.45e-9, TechPoint(0.2, 14.0)),
    (1.5e-9, SLOW),
])
def test_tiny_scheme_iii_by_hand(budget, expected):
    r = optimize_oracle(OptProblem(tiny_cache(), SchemeKind.III, budget))
    assert r.feasible
    assert r.assignment == Assignment.uniform(expected)


def test_infeasible_returns_fastest():
    c = tiny_cache()
    for method in ("oracle", "separable"):
        r = optimize(OptProblem(c, SchemeKind.II, 0.5e-9), method=method)
        assert not r.feasible
        assert r.assignment == Assignment.uniform(FAST)
        assert r.delay == pytest.approx(1.0e-9)


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        OptProblem(tiny_cache(), SchemeKind.I, 0.0)


# --- oracle and separable search ---------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("scheme", list(SchemeKind))
def test_oracle_matches_brute_force(seed, scheme):
    spec = random_spec(np.random.default_rng(seed), SMALL)
    lo = cache_delay(spec, Assignment.uniform(FAST))
    hi = cache_delay(spec, Assignment.uniform(SLOW))
    for frac in (0.1, 0.5, 0.9):
        budget = lo + frac * (hi - lo)
        ref = brute_force(spec, scheme, budget)
        r = optimize_oracle(OptProblem(spec, scheme, budget))
        assert r.feasible
        assert r.assignment == ref[1]
        assert r.leakage == ref[0][0]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), frac=st.floats(0.0, 1.0),
       scheme=st.sampled_from(list(SchemeKind)))
def test_separable_sandwiched_by_oracle(seed, frac, scheme):
    spec = random_spec(np.random.default_rng(seed), SMALL)
    lo = cache_delay(spec, Assignment.uniform(FAST))
    hi = cache_delay(spec, Assignment.uniform(SLOW))
    budget = lo + frac * (hi - lo)
    exact = optimize_oracle(OptProblem(spec, scheme, budget))
    approx = optimize_separable(OptProblem(spec, scheme, budget))
    assert approx.feasible == exact.feasible
    if not exact.feasible:
        return
    assert approx.delay <= budget
    assert approx.leakage >= exact.leakage * (1 - 1e-12)
    if approx.slack_bound > 0:
        tight = optimize_oracle(OptProblem(spec, scheme, budget - approx.slack_bound))
        if tight.feasible:
            assert approx.leakage <= tight.leakage * (1 + 1e-12)


def test_oracle_cap_raises():
    spec = synthetic_cache(16 * 1024)
    assert enumeration_count(spec, SchemeKind.I) == 117**4
    with pytest.raises(EnumerationTooLarge):
        optimize_oracle(OptProblem(spec, SchemeKind.I, 1.2e-9), cap=10**6)
    r = optimize(OptProblem(spec, SchemeKind.I, 1.2e-9), cap=10**6)
    assert r.method == "separable" and r.feasible


def test_unknown_method():
    with pytest.raises(ValueError):
        optimize(OptProblem(tiny_cache(), SchemeKind.I, 1e-9), method="magic")


# --- frontier and scheme ordering ------------------------------------------------------

def test_frontier_monotone_and_sorted():
    spec = synthetic_cache(16 * 1024)
    budgets = [1.5e-9, 1.05e-9, 1.2e-9, 1.35e-9, 1.1e-9]
    curve = pareto_frontier(spec, SchemeKind.II, budgets)
    assert [r.budget for r in curve] == sorted(budgets)
    leaks = [r.leakage for r in curve]
    assert all(a >= b for a, b in zip(leaks, leaks[1:]))
    assert all(r.delay <= r.budget for r in curve)


def test_frontier_order_insensitive():
    spec = synthetic_cache(16 * 1024)
    a = pareto_frontier(spec, SchemeKind.III, [1.1e-9, 1.3e-9, 1.2e-9])
    b = pareto_frontier(spec, SchemeKind.III, [1.3e-9, 1.2e-9, 1.1e-9])
    assert a == b


def test_frontier_rejects_empty():
    with pytest.raises(ValueError):
        pareto_frontier(tiny_cache(), SchemeKind.I, [])


@pytest.mark.parametrize("seed", range(4))
def test_more_freedom_never_hurts(seed):
    spec = random_spec(np.random.default_rng(100 + seed), SMALL)
    lo = cache_delay(spec, Assignment.uniform(FAST))
    hi = cache_delay(spec, Assignment.uniform(SLOW))
    for frac in np.linspace(0.05, 0.95, 5):
        b = lo + frac * (hi - lo)
        l1, l2, l3 = (optimize_oracle(OptProblem(spec, s, b)).leakage for s in SchemeKind)
        assert l1 <= l2 * (1 + 1e-12)
        assert l2 <= l3 * (1 + 1e-12)


def test_conservative_core_on_family():
    for spec in synthetic_family(10, seed=5):
        lo = cache_delay(spec, Assignment.uniform(FAST))
        hi = cache_delay(spec, Assignment.uniform(SLOW))
        for frac in (0.2, 0.5, 0.8):
            r = optimize(OptProblem(spec, SchemeKind.II, lo + frac * (hi - lo)))
            core = r.assignment[ComponentKind.CELL_ARRAY]
            peri = r.assignment[PERIPHERAL[0]]
            assert core.vth >= peri.vth and core.tox >= peri.tox


# --- fixed-knob sweep ---------------------------------------------------------------

def test_sweep_shapes():
    spec = synthetic_cache(16 * 1024)
    by_vth = fixed_knob_sweep(spec, "vth", 0.2)
    by_tox = fixed_knob_sweep(spec, "tox", 10.0)
    assert len(by_vth.points) == spec.grid.n_tox
    assert len(by_tox.points) == spec.grid.n_vth
    assert by_vth.delay_span < by_tox.delay_span
    assert by_vth.leakage_span > by_tox.leakage_span
    delays = [d for d, _ in by_tox.points]
    assert delays == sorted(delays)


def test_sweep_errors():
    spec = tiny_cache()
    with pytest.raises(OffGridValue):
        fixed_knob_sweep(spec, "vth", 0.33)
    with pytest.raises(ValueError):
        fixed_knob_sweep(spec, "area", 1.0)
