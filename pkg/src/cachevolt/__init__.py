"""Vth / Tox assignment for leakage-optimal caches and cache hierarchies."""

from .cache import (
    KINDS,
    Assignment,
    CacheSpec,
    ComponentKind,
    SchemeKind,
    cache_area,
    cache_delay,
    cache_leakage,
    expand_scheme,
)
from .errors import (
    ArityMismatch,
    AssignmentMismatch,
    CacheVoltError,
    DataError,
    DegenerateDesign,
    EnumerationTooLarge,
    FitDiverged,
    FitError,
    InsufficientSamples,
    MissingMissRate,
    NoFeasibleL1,
    NoFeasibleL2,
    OffGridValue,
    OutOfRange,
    ParseError,
)
from .hierarchy import (
    EnergyBreakdown,
    HierarchySpec,
    MissRateTable,
    SystemAssignment,
    TupleBudget,
    amat,
    joint_oracle,
    optimize_l1,
    optimize_l2,
    system_amat,
    system_energy,
    tuple_sweep,
)
from .single import (
    OptProblem,
    OptResult,
    SweepCurve,
    fixed_knob_sweep,
    optimize,
    optimize_oracle,
    optimize_separable,
    pareto_frontier,
)
from .tech import (
    DEFAULT_GRID,
    CharacterizationSample,
    ComponentModel,
    DelayCoeffs,
    LeakageCoeffs,
    TechGrid,
    TechPoint,
    area_factor,
    eval_delay,
    eval_leakage,
    fit_delay,
    fit_leakage,
)

__version__ = "0.1.0"
