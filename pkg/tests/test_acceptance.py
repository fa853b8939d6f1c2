"""Acceptance criteria, each run at its stated tolerance on shipped synthetic data."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from cachevolt.cache import PERIPHERAL, Assignment, ComponentKind, SchemeKind, cache_delay
from cachevolt.cli import main
from cachevolt.hierarchy import joint_oracle, optimize_l2, tuple_sweep
from cachevolt.single import OptProblem, fixed_knob_sweep, optimize, optimize_oracle, optimize_separable
from cachevolt.synthetic import (
    DEFAULT_L1_POINT,
    KNEE_AMAT_BUDGET,
    REF_SIZE,
    TUPLE_AMAT_BUDGET,
    characterization_samples,
    random_spec,
    synthetic_cache,
    synthetic_family,
    synthetic_hierarchy,
)
from cachevolt.tech import TechGrid, TechPoint, eval_delay, eval_leakage, fit_delay, fit_leakage

N_SPECS = 100
BUDGET_FRACTIONS = (0.1, 0.3, 0.5, 0.7, 0.9)
CORPUS_GRID = TechGrid(0.2, 0.5, 0.075, 10.0, 14.0, 1.0)  # 5 x 5
FAST, SLOW = TechPoint(0.2, 10.0), TechPoint(0.5, 14.0)
GOLDEN = Path(__file__).parent / "golden"


def budgets_for(spec, fractions=BUDGET_FRACTIONS):
    lo = cache_delay(spec, Assignment.uniform(FAST))
    hi = cache_delay(spec, Assignment.uniform(SLOW))
    return [lo + f * (hi - lo) for f in fractions]


@pytest.fixture(scope="module")
def corpus():
    rng = np.random.default_rng(2024)
    return [random_spec(rng, CORPUS_GRID, f"r{i}") for i in range(N_SPECS)]


def test_oracle_equivalence(corpus, acceptance):
    t0 = time.perf_counter()
    cases = exact = 0
    slack_violations = []
    for spec in corpus:
        for scheme in SchemeKind:
            for b in budgets_for(spec):
                ref = optimize_oracle(OptProblem(spec, scheme, b))
                got = optimize_separable(OptProblem(spec, scheme, b))
                cases += 1
                if got.assignment == ref.assignment:
                    exact += 1
                    continue
                # allowed gap: no worse than the exact optimum at budget - slack_bound
                ok = got.feasible == ref.feasible and got.delay <= b and got.leakage >= ref.leakage * (1 - 1e-12)
                if ok and got.slack_bound > 0:
                    tight = optimize_oracle(OptProblem(spec, scheme, b - got.slack_bound))
                    ok = not tight.feasible or got.leakage <= tight.leakage * (1 + 1e-12)
                if not ok:
                    slack_violations.append((spec.name, scheme.value, b))
    elapsed = time.perf_counter() - t0
    rate = exact / cases
    ok = not slack_violations and rate >= 0.95 and elapsed < 60
    acceptance(1, "separable search matches oracle", ok,
               f"{cases} cases, exact match {rate:.1%}, {len(slack_violations)} outside slack, {elapsed:.1f} s")
    assert ok


def test_scheme_ordering(corpus, acceptance):
    order_violations = 0
    strict_specs = 0
    for spec in corpus:
        strict = False
        for b in budgets_for(spec):
            l1, l2, l3 = (optimize(OptProblem(spec, s, b)).leakage for s in SchemeKind)
            if not (l1 <= l2 * (1 + 1e-12) and l2 <= l3 * (1 + 1e-12)):
                order_violations += 1
            strict |= l3 > l2 * (1 + 1e-9)
        strict_specs += strict
    ok = order_violations == 0 and strict_specs == len(corpus)
    acceptance(2, "SchemeI <= SchemeII <= SchemeIII", ok,
               f"{order_violations} ordering violations, SchemeIII strictly worse in {strict_specs}/{len(corpus)} specs")
    assert ok


def test_conservative_core(acceptance):
    family = synthetic_family(50, seed=0)
    total = good = 0
    for spec in family:
        for b in budgets_for(spec, (0.1, 0.3, 0.5, 0.7, 0.9)):
            r = optimize(OptProblem(spec, SchemeKind.II, b))
            core, peri = r.assignment[ComponentKind.CELL_ARRAY], r.assignment[PERIPHERAL[0]]
            total += 1
            good += r.feasible and core.vth >= peri.vth and core.tox >= peri.tox
    ok = good == total
    acceptance(3, "cell array gets the conservative (vth, tox)", ok, f"{good}/{total} optima")
    assert ok


def test_knob_sweep_trend(acceptance):
    spec = synthetic_cache(REF_SIZE)
    tox_sweep = fixed_knob_sweep(spec, "vth", 0.2)   # vth fixed, tox swept
    vth_sweep = fixed_knob_sweep(spec, "tox", 10.0)  # tox fixed, vth swept
    leak_ok = tox_sweep.leakage_span > vth_sweep.leakage_span
    delay_ok = tox_sweep.delay_span < vth_sweep.delay_span
    ok = leak_ok and delay_ok
    acceptance(4, "tox moves leakage more, vth moves delay more", ok,
               f"leakage span {tox_sweep.leakage_span:.3e} vs {vth_sweep.leakage_span:.3e} W, "
               f"delay span {tox_sweep.delay_span:.3e} vs {vth_sweep.delay_span:.3e} s")
    assert ok


def test_fit_round_trip(acceptance):
    spec = synthetic_cache(REF_SIZE)
    worst_exact = 0.0
    worst_rms = 0.0
    for model in spec.models.values():
        exact = characterization_samples(model)
        lk, dl = fit_leakage(exact), fit_delay(exact)
        worst_exact = max(worst_exact,
                          np.max(np.abs(lk.as_array() / model.leakage.as_array() - 1)),
                          np.max(np.abs(dl.as_array() / model.delay.as_array() - 1)))
        noisy = characterization_samples(model, noise=0.01, seed=11)
        lk, dl = fit_leakage(noisy), fit_delay(noisy)
        rel_l = [eval_leakage(lk, s.point) / s.leakage - 1 for s in noisy]
        rel_d = [eval_delay(dl, s.point) / s.delay - 1 for s in noisy]
        worst_rms = max(worst_rms, float(np.sqrt(np.mean(np.square(rel_l)))),
                        float(np.sqrt(np.mean(np.square(rel_d)))))
    ok = worst_exact <= 1e-6 and worst_rms <= 0.02
    acceptance(5, "fit recovers coefficients; noisy residual small", ok,
               f"max coefficient error {worst_exact:.1e}, max relative RMS {worst_rms:.2%}")
    assert ok


def test_l2_knee(acceptance):
    h = synthetic_hierarchy()
    l1_index = [c.size for c in h.l1_candidates].index(REF_SIZE)
    details, ok = [], len(h.l2_candidates) >= 4
    for split in (SchemeKind.III, SchemeKind.II):
        res = optimize_l2(h, l1_index, Assignment.uniform(DEFAULT_L1_POINT), KNEE_AMAT_BUDGET, split=split)
        scores = [c.objective for c in res.candidates]
        best = res.best_index
        interior = 0 < best < len(scores) - 1 and scores[best] < scores[0] and scores[best] < scores[-1]
        ok &= interior
        details.append(f"{split.value}: best {res.best.name}")
    acceptance(6, "best L2 size is strictly interior", ok, ", ".join(details))
    assert ok


def test_tuple_matrix(acceptance):
    h = synthetic_hierarchy()
    M = tuple_sweep(h, TUPLE_AMAT_BUDGET, 3, 3).matrix()
    finite = np.isfinite(M).all()
    monotone = bool(np.all(np.diff(M, axis=0) <= 0) and np.all(np.diff(M, axis=1) <= 0))
    single_tox_dual_vth = M[0, 1] <= M[1, 0]
    gap = (M[1, 1] - M[1, 2]) / M[1, 2]
    dual_dual = gap <= 0.02

    micro = TechGrid(0.2, 0.5, 0.15, 10.0, 14.0, 2.0)
    small = synthetic_hierarchy(l1_sizes=(4096, 16384), l2_sizes=(131072, 524288))
    budget = 1.45e-9
    full = tuple_sweep(small, budget, 3, 3, values=micro).cells[(3, 3)]
    ref = joint_oracle(small, budget, micro.points())
    oracle_ok = ref is not None and full.feasible and abs(full.energy / ref[0] - 1) <= 1e-12

    ok = finite and monotone and single_tox_dual_vth and dual_dual and oracle_ok
    acceptance(7, "tuple matrix trends and oracle cross-check", ok,
               f"monotone={monotone}, (1,2)={M[0, 1]:.6g} J vs (2,1)={M[1, 0]:.6g} J, "
               f"(2,2) vs (2,3) gap {gap:.2%}, micro-grid oracle match={oracle_ok}")
    assert ok


def test_cli_determinism(tmp_path, acceptance):
    outputs = []
    for run in range(2):
        d = tmp_path / f"run{run}"
        main(["gen-synthetic", str(d)])
        main(["optimize", str(d / "cache_16KB.json"), "--scheme", "II", "--format", "csv",
              "--frontier", "1.05,1.1,1.15,1.2,1.25,1.3,1.35,1.4,1.45,1.5", "-o", str(d / "frontier.csv")])
        main(["hierarchy", str(d / "system.json"), "--amat-ns", "1.82", "--mode", "l2", "--split", "III",
              "--format", "csv", "-o", str(d / "l2.csv")])
        main(["hierarchy", str(d / "system.json"), "--amat-ns", "1.82", "--mode", "l2", "--split", "III",
              "-o", str(d / "l2.json")])
        outputs.append({p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()})
    repeat_ok = outputs[0] == outputs[1]
    golden_ok = (outputs[0]["frontier.csv"] == (GOLDEN / "optimize_16KB_II_frontier.csv").read_bytes()
                 and outputs[0]["l2.csv"] == (GOLDEN / "hierarchy_l2_knee.csv").read_bytes()
                 and outputs[0]["l2.json"] == (GOLDEN / "hierarchy_l2_knee.json").read_bytes())
    best = json.loads(outputs[0]["l2.json"])["best"]["name"]
    ok = repeat_ok and golden_ok
    acceptance(8, "CLI output is byte-identical and matches golden files", ok,
               f"{len(outputs[0])} files repeat-identical={repeat_ok}, golden={golden_ok}, pinned best {best}")
    assert ok
