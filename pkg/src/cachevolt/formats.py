"""
File formats: ingestion with validation, and report emission.

Every numeric key carries a unit suffix (``_nW``, ``_ns``, ``_nJ``, ``_V``,
``_A``). Values are converted to SI on read and back on write.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

from .cache import KINDS, Assignment, CacheSpec, ComponentKind, SchemeKind
from .errors import DataError, ParseError
from .hierarchy import (
    EnergyBreakdown,
    HierarchySpec,
    LevelSearch,
    MissRateTable,
    SystemAssignment,
    TupleSweep,
)
from .single import OptResult, SweepCurve
from .tech import (
    CharacterizationSample,
    ComponentModel,
    DelayCoeffs,
    LeakageCoeffs,
    TechGrid,
    TechPoint,
)

NANO = 1e-9
SAMPLE_FIELDS = ("vth_V", "tox_A", "leakage_nW", "delay_ns")


def num(x: float) -> float:
    """Round to 12 significant digits so reports are stable against last-bit noise."""
    x = float(x)
    if not math.isfinite(x):
        return x
    return float(f"{x:.12g}")


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        # mkstemp creates 0600; give the result ordinary umask permissions
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _load_json(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", exc.lineno) from None


def _need(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{where}: missing key {key!r}")
    return obj[key]


def _float(obj: dict, key: str, where: str) -> float:
    val = _need(obj, key, where)
    try:
        return float(val)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: {key} is not a number ({val!r})") from None


# --- characterization samples ------------------------------------------------

def _sample_from_fields(row: dict, line: int | None) -> CharacterizationSample:
    try:
        vals = [float(row[k]) for k in SAMPLE_FIELDS]
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]}", line) from None
    except (TypeError, ValueError):
        raise ParseError(f"non-numeric value in {row}", line) from None
    v, t, lk, dl = vals
    try:
        return CharacterizationSample(TechPoint(v, t), lk * NANO, dl * NANO)
    except ValueError as exc:
        raise ParseError(str(exc), line) from None


def read_samples(path) -> list[CharacterizationSample]:
    """Samples from CSV (header ``vth_V,tox_A,leakage_nW,delay_ns``) or the equivalent JSON array."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = _load_json(path)
        if not isinstance(data, list):
            raise ParseError(f"{path}: expected a JSON array of samples", 1)
        out = [_sample_from_fields(row if isinstance(row, dict) else {}, None) for row in data]
        if not out:
            raise ParseError(f"{path}: no samples")
        return out
    text = path.read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ParseError(f"{path}: empty file", 1)
    header = [h.strip() for h in rows[0]]
    if tuple(header) != SAMPLE_FIELDS:
        raise ParseError(f"expected header {','.join(SAMPLE_FIELDS)}, got {','.join(header)}", 1)
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(SAMPLE_FIELDS):
            raise ParseError(f"expected {len(SAMPLE_FIELDS)} fields, got {len(row)}", lineno)
        out.append(_sample_from_fields(dict(zip(SAMPLE_FIELDS, row)), lineno))
    if not out:
        raise ParseError(f"{path}: header only, no samples", 2)
    return out


def samples_csv(samples: Iterable[CharacterizationSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAMPLE_FIELDS)
    for s in samples:
        w.writerow([fmt(s.point.vth), fmt(s.point.tox), fmt(s.leakage / NANO), fmt(s.delay / NANO)])
    return buf.getvalue()


# --- component models and cache specs ----------------------------------------

def model_to_dict(m: ComponentModel) -> dict:
    L, D = m.leakage, m.delay
    return {
        "leakage": {"A0_nW": num(L.A0 / NANO), "A1_nW": num(L.A1 / NANO), "a1_per_V": num(L.a1),
                    "A2_nW": num(L.A2 / NANO), "a2_per_A": num(L.a2)},
        "delay": {"k0_ns": num(D.k0 / NANO), "k1_ns": num(D.k1 / NANO),
                  "k2_ns_per_A": num(D.k2 / NANO), "k3_per_V": num(D.k3)},
        "ref_area": num(m.ref_area),
        "area_exponent": num(m.area_exponent),
    }


def model_from_dict(d: dict, where: str = "model") -> ComponentModel:
    lk = _need(d, "leakage", where)
    dl = _need(d, "delay", where)
    try:
        return ComponentModel(
            LeakageCoeffs(
                A0=_float(lk, "A0_nW", where) * NANO,
                A1=_float(lk, "A1_nW", where) * NANO,
                a1=_float(lk, "a1_per_V", where),
                A2=_float(lk, "A2_nW", where) * NANO,
                a2=_float(lk, "a2_per_A", where),
            ),
            DelayCoeffs(
                k0=_float(dl, "k0_ns", where) * NANO,
                k1=_float(dl, "k1_ns", where) * NANO,
                k2=_float(dl, "k2_ns_per_A", where) * NANO,
                k3=_float(dl, "k3_per_V", where),
            ),
            ref_area=float(d.get("ref_area", 1.0)),
            area_exponent=float(d.get("area_exponent", 2.0)),
        )
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{where}: {exc}") from None


def grid_to_dict(g: TechGrid) -> dict:
    return {"vth_min_V": g.vth_min, "vth_max_V": g.vth_max, "vth_step_V": g.vth_step,
            "tox_min_A": g.tox_min, "tox_max_A": g.tox_max, "tox_step_A": g.tox_step}


def grid_from_dict(d: dict, where: str = "grid") -> TechGrid:
    try:
        return TechGrid(*(_float(d, k, where) for k in
                          ("vth_min_V", "vth_max_V", "vth_step_V", "tox_min_A", "tox_max_A", "tox_step_A")))
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{where}: {exc}") from None


def spec_to_dict(spec: CacheSpec) -> dict:
    out = {
        "name": spec.name,
        "size_bytes": spec.size,
        "read_energy_nJ": num(spec.read_energy / NANO),
        "grid": grid_to_dict(spec.grid),
        "components": {k.value: model_to_dict(spec.models[k]) for k in KINDS},
    }
    if spec.associativity is not None:
        out["associativity"] = spec.associativity
    return out


def spec_from_dict(d: dict, where: str = "cache spec") -> CacheSpec:
    name = str(_need(d, "name", where))
    where = f"{where} {name!r}"
    comps = _need(d, "components", where)
    models = {}
    for k in KINDS:
        models[k] = model_from_dict(_need(comps, k.value, where), f"{where}.{k.value}")
    grid = grid_from_dict(d["grid"], f"{where}.grid") if "grid" in d else TechGrid()
    try:
        return CacheSpec(name, int(_need(d, "size_bytes", where)), models,
                         _float(d, "read_energy_nJ", where) * NANO if "read_energy_nJ" in d else 0.0,
                         grid, d.get("associativity"))
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{where}: {exc}") from None


def read_spec(path) -> CacheSpec:
    return spec_from_dict(_load_json(path), str(path))


def read_model(path) -> ComponentModel:
    return model_from_dict(_load_json(path), str(path))


# --- miss tables and hierarchy bundles ---------------------------------------

def miss_table_from_dict(d: dict, where: str = "miss table") -> tuple[MissRateTable, float, float]:
    """Returns ``(table, mem_latency [s], mem_energy [J])``."""
    entries = {}
    for i, e in enumerate(_need(d, "entries", where)):
        w = f"{where}.entries[{i}]"
        key = (int(_need(e, "l1_bytes", w)), int(_need(e, "l2_bytes", w)))
        if key in entries:
            raise ParseError(f"{w}: duplicate entry for {key}")
        entries[key] = (_float(e, "l1_miss", w), _float(e, "l2_local_miss", w))
    table = MissRateTable(entries, str(d.get("workload", "unnamed")))
    return table, _float(d, "mem_latency_ns", where) * NANO, _float(d, "mem_energy_nJ", where) * NANO


def miss_table_to_dict(t: MissRateTable, mem_latency: float, mem_energy: float) -> dict:
    return {
        "workload": t.workload,
        "mem_latency_ns": num(mem_latency / NANO),
        "mem_energy_nJ": num(mem_energy / NANO),
        "entries": [{"l1_bytes": a, "l2_bytes": b, "l1_miss": m1, "l2_local_miss": m2}
                    for (a, b), (m1, m2) in sorted(t.entries.items())],
    }


def point_to_dict(p: TechPoint) -> dict:
    return {"vth_V": num(p.vth), "tox_A": num(p.tox)}


def point_from_dict(d: dict, where: str) -> TechPoint:
    return TechPoint(_float(d, "vth_V", where), _float(d, "tox_A", where))


def assignment_to_dict(a: Assignment) -> dict:
    return {k.value: point_to_dict(p) for k, p in a.items()}


def assignment_from_dict(d: dict, where: str = "assignment") -> Assignment:
    """Either a single ``{vth_V, tox_A}`` broadcast to all components, or one point per component."""
    if "vth_V" in d:
        return Assignment.uniform(point_from_dict(d, where))
    return Assignment.from_mapping(
        {k: point_from_dict(_need(d, k.value, where), f"{where}.{k.value}") for k in KINDS}
    )


def _resolve(obj, base: Path):
    """Inline object, or a path (relative to the bundle) to a JSON file holding it."""
    if isinstance(obj, str):
        return _load_json(base / obj)
    return obj


class SystemBundle:
    """A hierarchy plus the fixed-level defaults the L1/L2 searches need."""

    def __init__(self, hierarchy: HierarchySpec, fixed_l1=None, fixed_l2=None):
        self.hierarchy = hierarchy
        self.fixed_l1 = fixed_l1  # (index, Assignment) or None
        self.fixed_l2 = fixed_l2


def _fixed_level(d, specs, where):
    if d is None:
        return None
    idx = int(_need(d, "index", where))
    if not 0 <= idx < len(specs):
        raise ParseError(f"{where}: index {idx} out of range")
    body = d.get("assignment", d)
    asg = assignment_from_dict(body, where)
    asg = Assignment(tuple(specs[idx].grid.snap(p) for p in asg.points))
    return idx, asg


def read_system(path) -> SystemBundle:
    path = Path(path)
    d = _load_json(path)
    where = str(path)
    base = path.parent
    l1 = [spec_from_dict(_resolve(s, base), f"{where}.l1[{i}]") for i, s in enumerate(_need(d, "l1", where))]
    l2 = [spec_from_dict(_resolve(s, base), f"{where}.l2[{i}]") for i, s in enumerate(_need(d, "l2", where))]
    table, mem_latency, mem_energy = miss_table_from_dict(_resolve(_need(d, "miss_table", where), base),
                                                          f"{where}.miss_table")
    try:
        h = HierarchySpec(l1, l2, table, mem_latency, mem_energy,
                          accesses=_float(d, "accesses", where),
                          runtime=_float(d, "runtime_ns", where) * NANO)
    except ValueError as exc:
        if isinstance(exc, (ParseError, DataError)):
            raise
        raise ParseError(f"{where}: {exc}") from None
    return SystemBundle(h, _fixed_level(d.get("fixed_l1"), l1, f"{where}.fixed_l1"),
                        _fixed_level(d.get("fixed_l2"), l2, f"{where}.fixed_l2"))


def system_to_dict(h: HierarchySpec, fixed_l1=None, fixed_l2=None) -> dict:
    out = {
        "l1": [spec_to_dict(s) for s in h.l1_candidates],
        "l2": [spec_to_dict(s) for s in h.l2_candidates],
        "miss_table": miss_table_to_dict(h.miss_table, h.mem_latency, h.mem_energy_per_access),
        "accesses": h.accesses,
        "runtime_ns": num(h.runtime / NANO),
    }
    for key, fixed in (("fixed_l1", fixed_l1), ("fixed_l2", fixed_l2)):
        if fixed is not None:
            idx, asg = fixed
            out[key] = {"index": idx, "assignment": assignment_to_dict(asg)}
    return out


# --- reports -----------------------------------------------------------------

_SHORT = {
    ComponentKind.CELL_ARRAY: "cell",
    ComponentKind.DECODER: "dec",
    ComponentKind.ADDRESS_DRIVERS: "addr",
    ComponentKind.DATA_DRIVERS: "data",
}
OPT_CSV_FIELDS = ["budget_ns", "leakage_nW", "delay_ns", "feasible"] + [
    f"{knob}_{_SHORT[k]}" for k in KINDS for knob in ("vth", "tox")
]


def opt_result_to_dict(r: OptResult, scheme: SchemeKind | None = None) -> dict:
    out = {}
    if scheme is not None:
        out["scheme"] = scheme.value
    out.update({
        "budget_ns": num(r.budget / NANO) if math.isfinite(r.budget) else None,
        "leakage_nW": num(r.leakage / NANO),
        "delay_ns": num(r.delay / NANO),
        "feasible": bool(r.feasible),
        "method": r.method,
        "slack_ns": num(r.slack / NANO) if math.isfinite(r.budget) else None,
        "slack_bound_ns": num(r.slack_bound / NANO),
        "assignment": assignment_to_dict(r.assignment),
    })
    return out


def opt_results_csv(results: Sequence[OptResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(OPT_CSV_FIELDS)
    for r in results:
        row = [fmt(r.budget / NANO), fmt(r.leakage / NANO), fmt(r.delay / NANO), str(r.feasible).lower()]
        for p in r.assignment.points:
            row += [fmt(p.vth), fmt(p.tox)]
        w.writerow(row)
    return buf.getvalue()


def sweep_to_dict(c: SweepCurve) -> dict:
    return {
        "fixed_knob": c.fixed_knob,
        "fixed_value": num(c.fixed_value),
        "points": [{"free_value": num(f), "delay_ns": num(d / NANO), "leakage_nW": num(lk / NANO)}
                   for f, (d, lk) in zip(c.free_values, c.points)],
    }


def sweeps_csv(curves: Sequence[SweepCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fixed_knob", "fixed_value", "free_value", "delay_ns", "leakage_nW"])
    for c in curves:
        for f, (d, lk) in zip(c.free_values, c.points):
            w.writerow([c.fixed_knob, fmt(c.fixed_value), fmt(f), fmt(d / NANO), fmt(lk / NANO)])
    return buf.getvalue()


def breakdown_to_dict(b: EnergyBreakdown) -> dict:
    return {
        "l1_leakage_energy_nJ": num(b.l1_leakage_energy / NANO),
        "l2_leakage_energy_nJ": num(b.l2_leakage_energy / NANO),
        "l1_dynamic_nJ": num(b.l1_dynamic / NANO),
        "l2_dynamic_nJ": num(b.l2_dynamic / NANO),
        "mem_dynamic_nJ": num(b.mem_dynamic / NANO),
        "total_energy_nJ": num(b.total / NANO),
        "amat_ns": num(b.amat / NANO),
    }


def system_assignment_to_dict(s: SystemAssignment) -> dict:
    return {"l1_index": s.l1_index, "l2_index": s.l2_index,
            "l1_assignment": assignment_to_dict(s.l1_assignment),
            "l2_assignment": assignment_to_dict(s.l2_assignment)}


def level_search_to_dict(search: LevelSearch, mode: str, amat_budget: float, h: HierarchySpec) -> dict:
    specs = h.l2_candidates if mode == "l2" else h.l1_candidates
    cands = []
    for c in search.candidates:
        entry = {
            "index": c.index,
            "name": c.name,
            "size_bytes": specs[c.index].size,
            "hit_budget_ns": num(c.hit_budget / NANO) if math.isfinite(c.hit_budget) else None,
            "feasible": c.feasible,
        }
        if c.feasible:
            entry["leakage_nW"] = num(c.result.leakage / NANO)
            entry["hit_time_ns"] = num(c.result.delay / NANO)
            entry["method"] = c.result.method
            entry["breakdown"] = breakdown_to_dict(c.breakdown)
            entry["assignment"] = assignment_to_dict(c.result.assignment)
        cands.append(entry)
    best = search.best
    return {
        "mode": mode,
        "amat_budget_ns": num(amat_budget / NANO),
        "objective": search.objective,
        "candidates": cands,
        "best": {"index": best.index, "name": best.name,
                 "system_assignment": system_assignment_to_dict(best.system),
                 "breakdown": breakdown_to_dict(best.breakdown)},
    }


def level_search_csv(search: LevelSearch) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "name", "hit_budget_ns", "feasible", "leakage_nW", "total_energy_nJ", "amat_ns", "best"])
    for c in search.candidates:
        hb = fmt(c.hit_budget / NANO) if math.isfinite(c.hit_budget) else ""
        if c.feasible:
            w.writerow([c.index, c.name, hb, "true", fmt(c.result.leakage / NANO),
                        fmt(c.breakdown.total / NANO), fmt(c.breakdown.amat / NANO),
                        str(c.index == search.best_index).lower()])
        else:
            w.writerow([c.index, c.name, hb, "false", "", "", "", "false"])
    return buf.getvalue()


def tuple_sweep_csv(t: TupleSweep) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "n", "total_energy_nJ", "feasible"])
    for (m, n), c in sorted(t.cells.items()):
        if c.feasible:
            total = c.energy if t.objective == "total_energy" else c.breakdown.total
            w.writerow([m, n, fmt(total / NANO), "true"])
        else:
            w.writerow([m, n, "", "false"])
    return buf.getvalue()


def tuple_sweep_to_dict(t: TupleSweep) -> dict:
    cells = []
    for (m, n), c in sorted(t.cells.items()):
        entry: dict[str, Any] = {"m": m, "n": n, "feasible": c.feasible}
        if c.feasible:
            total = c.energy if t.objective == "total_energy" else c.breakdown.total
            entry["total_energy_nJ"] = num(total / NANO)
            entry["tox_values_A"] = [num(x) for x in c.tox_values]
            entry["vth_values_V"] = [num(x) for x in c.vth_values]
            entry["system_assignment"] = system_assignment_to_dict(c.system)
            entry["breakdown"] = breakdown_to_dict(c.breakdown)
        cells.append(entry)
    return {"amat_budget_ns": num(t.amat_budget / NANO), "objective": t.objective,
            "vth_candidates_V": list(t.vth_candidates), "tox_candidates_A": list(t.tox_candidates),
            "cells": cells}
