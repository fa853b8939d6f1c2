import math

import numpy as np
import pytest

from cachevolt.cache import (
    KINDS,
    PERIPHERAL,
    Assignment,
    CacheSpec,
    ComponentKind,
    SchemeKind,
    cache_area,
    cache_delay,
    cache_leakage,
    class_tables,
    expand_scheme,
)
from cachevolt.errors import ArityMismatch, AssignmentMismatch
from cachevolt.synthetic import synthetic_cache, tiny_cache
from cachevolt.tech import TechPoint, eval_delay, eval_leakage

FAST = TechPoint(0.2, 10.0)
SLOW = TechPoint(0.5, 14.0)


@pytest.fixture(scope="module")
def c16():
    return synthetic_cache(16 * 1024)


def test_corner_values_by_construction(c16):
    # sub-threshold amplitudes 2.18 mW in total, gate twice that, floor 2 %
    assert cache_leakage(c16, Assignment.uniform(FAST)) == pytest.approx(2.18e-3 * 3.02, rel=1e-12)
    # delay shares sum to 1 ns, span +40 % from Vth and +10 % from Tox
    assert cache_delay(c16, Assignment.uniform(FAST)) == pytest.approx(1.0e-9, rel=1e-12)
    assert cache_delay(c16, Assignment.uniform(SLOW)) == pytest.approx(1.5e-9, rel=1e-12)


def test_slow_corner_leakage_pinned(c16):
    # 2.18e-3 * (0.02 + e^-6 + 2 e^-4), checked at high precision
    assert cache_leakage(c16, Assignment.uniform(SLOW)) == pytest.approx(1.2885986530001368e-4, rel=1e-12)


def test_totals_are_sums_of_components(c16):
    rng = np.random.default_rng(0)
    pts = c16.grid.points()
    for _ in range(20):
        asg = Assignment(tuple(pts[i] for i in rng.integers(len(pts), size=4)))
        lk = sum(eval_leakage(c16.models[k].leakage, p) for k, p in asg.items())
        dl = sum(eval_delay(c16.models[k].delay, p) for k, p in asg.items())
        assert cache_leakage(c16, asg) == pytest.approx(lk, rel=1e-14)
        assert cache_delay(c16, asg) == pytest.approx(dl, rel=1e-14)


def test_cell_array_dominates_leakage(c16):
    for p in c16.grid.points():
        cell = eval_leakage(c16.models[ComponentKind.CELL_ARRAY].leakage, p)
        for k in PERIPHERAL:
            assert cell >= 10 * eval_leakage(c16.models[k].leakage, p)


def test_order_independent_total(c16):
    rng = np.random.default_rng(1)
    pts = c16.grid.points()
    asg = Assignment(tuple(pts[i] for i in rng.integers(len(pts), size=4)))
    models = dict(c16.models)
    perm = dict(reversed(list(models.items())))
    flipped = CacheSpec(c16.name, c16.size, perm, c16.read_energy, c16.grid)
    assert cache_leakage(flipped, asg) == cache_leakage(c16, asg)


def test_expand_scheme_ii():
    asg = expand_scheme(SchemeKind.II, [FAST, SLOW])
    assert asg[ComponentKind.CELL_ARRAY] == FAST
    assert all(asg[k] == SLOW for k in PERIPHERAL)


def test_expand_scheme_arity():
    with pytest.raises(ArityMismatch):
        expand_scheme(SchemeKind.III, [FAST, SLOW])
    with pytest.raises(ArityMismatch):
        expand_scheme(SchemeKind.I, [FAST])


def test_assignment_mapping_errors():
    with pytest.raises(AssignmentMismatch):
        Assignment.from_mapping({ComponentKind.CELL_ARRAY: FAST})
    with pytest.raises(AssignmentMismatch):
        Assignment((FAST, FAST))


def test_off_grid_assignment_rejected(c16):
    with pytest.raises(AssignmentMismatch):
        cache_leakage(c16, Assignment.uniform(TechPoint(0.21, 10.0)))


@pytest.mark.parametrize("text, kind", [
    ("I", SchemeKind.I), ("1", SchemeKind.I), ("SchemeII", SchemeKind.II), ("iii", SchemeKind.III),
    ("scheme 3", SchemeKind.III),
])
def test_scheme_parse(text, kind):
    assert SchemeKind.parse(text) is kind


def test_scheme_classes_partition():
    for s in SchemeKind:
        members = [k for c in s.classes for k in c]
        assert sorted(members, key=KINDS.index) == list(KINDS)
        assert len(members) == 4
    assert [s.n_classes for s in SchemeKind] == [4, 2, 1]


def test_class_tables_match_scalar(c16):
    pts, leak, delay = class_tables(c16, SchemeKind.II)
    for i in (0, 17, len(pts) - 1):
        asg = expand_scheme(SchemeKind.II, [pts[i], pts[i]])
        assert leak[0][i] + leak[1][i] == pytest.approx(cache_leakage(c16, asg), rel=1e-13)
        assert delay[0][i] + delay[1][i] == pytest.approx(cache_delay(c16, asg), rel=1e-13)


def test_cache_area_quadratic():
    c = tiny_cache()
    assert cache_area(c, Assignment.uniform(FAST)) == pytest.approx(4.0)
    assert cache_area(c, Assignment.uniform(SLOW)) == pytest.approx(4 * 1.96)


def test_spec_requires_all_components(c16):
    models = dict(c16.models)
    del models[ComponentKind.DECODER]
    with pytest.raises(ValueError):
        CacheSpec("broken", 1024, models)
    assert math.isfinite(cache_leakage(c16, Assignment.uniform(FAST)))
