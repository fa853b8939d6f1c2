"""Whole-cache aggregation over the four cache components and the three Vth/Tox sharing schemes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import ArityMismatch, AssignmentMismatch
from .tech import DEFAULT_GRID, ComponentModel, TechGrid, TechPoint, area_factor


class ComponentKind(Enum):
    CELL_ARRAY = "cell_array"  # memory cells + sense amplifiers
    DECODER = "decoder"
    ADDRESS_DRIVERS = "address_drivers"
    DATA_DRIVERS = "data_drivers"

    @property
    def is_core(self) -> bool:
        return self is ComponentKind.CELL_ARRAY


KINDS: tuple[ComponentKind, ...] = tuple(ComponentKind)
PERIPHERAL: tuple[ComponentKind, ...] = KINDS[1:]


class SchemeKind(Enum):
    """How the four components share (Vth, Tox) pairs."""

    I = "I"      # independent pair per component
    II = "II"    # one pair for the cell array, one shared by the peripherals
    III = "III"  # one pair for the whole cache

    @property
    def classes(self) -> tuple[tuple[ComponentKind, ...], ...]:
        if self is SchemeKind.I:
            return tuple((k,) for k in KINDS)
        if self is SchemeKind.II:
            return ((ComponentKind.CELL_ARRAY,), PERIPHERAL)
        return (KINDS,)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @classmethod
    def parse(cls, text) -> "SchemeKind":
        if isinstance(text, SchemeKind):
            return text
        key = str(text).strip().upper()
        if key.startswith("SCHEME"):
            key = key[6:].strip()
        key = {"1": "I", "2": "II", "3": "III"}.get(key, key)
        return cls(key)


@dataclass(frozen=True)
class Assignment:
    """The TechPoint chosen for each component, stored in ComponentKind order."""

    points: tuple[TechPoint, TechPoint, TechPoint, TechPoint]

    def __post_init__(self):
        if len(self.points) != len(KINDS):
            raise AssignmentMismatch(f"assignment needs {len(KINDS)} points, got {len(self.points)}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[ComponentKind, TechPoint]) -> "Assignment":
        missing = [k.value for k in KINDS if k not in mapping]
        if missing:
            raise AssignmentMismatch(f"assignment missing components: {', '.join(missing)}")
        return cls(tuple(mapping[k] for k in KINDS))

    @classmethod
    def uniform(cls, p: TechPoint) -> "Assignment":
        return cls((p,) * len(KINDS))

    def __getitem__(self, kind: ComponentKind) -> TechPoint:
        return self.points[KINDS.index(kind)]

    def items(self):
        return zip(KINDS, self.points)

    def as_dict(self) -> dict[ComponentKind, TechPoint]:
        return dict(self.items())

    def replace(self, kind: ComponentKind, p: TechPoint) -> "Assignment":
        pts = list(self.points)
        pts[KINDS.index(kind)] = p
        return Assignment(tuple(pts))


@dataclass(frozen=True)
class CacheSpec:
    name: str
    size: int
    models: Mapping[ComponentKind, ComponentModel]
    read_energy: float = 0.0
    grid: TechGrid = DEFAULT_GRID
    associativity: int | None = field(default=None, compare=False)

    def __post_init__(self):
        missing = [k.value for k in KINDS if k not in self.models]
        if missing:
            raise ValueError(f"cache spec {self.name!r} missing components: {', '.join(missing)}")
        if self.size <= 0:
            raise ValueError("cache size must be positive")
        if self.read_energy < 0:
            raise ValueError("read_energy must be non-negative")

    def __hash__(self):
        return hash((self.name, self.size, self.read_energy, self.grid))


def check_assignment(spec: CacheSpec, asg: Assignment) -> None:
    for kind, p in asg.items():
        if not spec.grid.contains(p):
            raise AssignmentMismatch(f"{kind.value} point {p} is off grid for cache {spec.name!r}")


def cache_leakage(spec: CacheSpec, asg: Assignment) -> float:
    check_assignment(spec, asg)
    # fsum is exactly rounded, so the total does not depend on component order
    return math.fsum(float(spec.models[k].leakage(p.vth, p.tox)) for k, p in asg.items())


def cache_delay(spec: CacheSpec, asg: Assignment) -> float:
    check_assignment(spec, asg)
    return math.fsum(float(spec.models[k].delay(p.vth, p.tox)) for k, p in asg.items())


def cache_area(spec: CacheSpec, asg: Assignment) -> float:
    """Total relative area, each component scaled by its oxide-dependent area factor."""
    check_assignment(spec, asg)
    return math.fsum(area_factor(spec.models[k], p.tox, spec.grid) for k, p in asg.items())


def expand_scheme(scheme: SchemeKind, class_points: Sequence[TechPoint]) -> Assignment:
    """Broadcast one point per sharing class onto the four components.

    SchemeII takes ``[core, peripheral]``.
    """
    classes = scheme.classes
    if len(class_points) != len(classes):
        raise ArityMismatch(
            f"scheme {scheme.value} takes {len(classes)} class points, got {len(class_points)}"
        )
    mapping = {}
    for members, p in zip(classes, class_points):
        for kind in members:
            mapping[kind] = p
    return Assignment.from_mapping(mapping)


def class_tables(spec: CacheSpec, scheme: SchemeKind,
                 points: Sequence[TechPoint] | None = None) -> tuple[list[TechPoint], list[np.ndarray], list[np.ndarray]]:
    """Per-class leakage and delay over candidate points.

    Returns ``(points, leak, delay)`` where ``leak[c][i]`` is the summed leakage
    of class ``c``'s members at ``points[i]``. Points default to the cache grid
    in lexicographic (vth, tox) order.
    """
    pts = list(spec.grid.points() if points is None else points)
    v = np.array([p.vth for p in pts])
    t = np.array([p.tox for p in pts])
    leak, delay = [], []
    for members in scheme.classes:
        leak.append(sum(spec.models[k].leakage(v, t) for k in members))
        delay.append(sum(spec.models[k].delay(v, t) for k in members))
    return pts, leak, delay
