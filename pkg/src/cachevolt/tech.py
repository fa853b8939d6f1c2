"""
Device-level leakage and delay models for one cache component.

Leakage is modeled as a constant floor plus one exponential in Vth
(subthreshold) and one exponential in Tox (gate tunneling):

    P(vth, tox) = A0 + A1 * exp(a1 * vth) + A2 * exp(a2 * tox)

Delay is linear in Tox and a weak exponential in Vth:

    T(vth, tox) = k0 + k1 * exp(k3 * vth) + k2 * tox

Units are SI volts / angstroms / watts / seconds throughout. The fit routines
recover both coefficient sets from characterization samples with a bounded,
damped Gauss-Newton solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import (
    DegenerateDesign,
    FitDiverged,
    InsufficientSamples,
    OffGridValue,
    OutOfRange,
)

# Rounding applied to enumerated grid values so 0.2 + 4 * 0.025 compares equal to 0.3.
_GRID_DECIMALS = 12
_GRID_TOL = 1e-9


@dataclass(frozen=True, order=True)
class TechPoint:
    """One (Vth, Tox) knob setting: volts, angstroms."""

    vth: float
    tox: float

    def __str__(self):
        return f"({self.vth:g} V, {self.tox:g} A)"


def _axis_count(lo: float, hi: float, step: float) -> int:
    return int(math.floor((hi - lo) / step + _GRID_TOL)) + 1


@dataclass(frozen=True)
class TechGrid:
    """Discrete Vth x Tox design grid."""

    vth_min: float = 0.2
    vth_max: float = 0.5
    vth_step: float = 0.025
    tox_min: float = 10.0
    tox_max: float = 14.0
    tox_step: float = 0.5

    def __post_init__(self):
        if not (self.vth_step > 0 and self.tox_step > 0):
            raise ValueError("grid steps must be strictly positive")
        if self.vth_min > self.vth_max or self.tox_min > self.tox_max:
            raise ValueError("grid minimum exceeds maximum")

    @property
    def n_vth(self) -> int:
        return _axis_count(self.vth_min, self.vth_max, self.vth_step)

    @property
    def n_tox(self) -> int:
        return _axis_count(self.tox_min, self.tox_max, self.tox_step)

    def __len__(self):
        return self.n_vth * self.n_tox

    def vth_values(self) -> list[float]:
        return [round(self.vth_min + i * self.vth_step, _GRID_DECIMALS) for i in range(self.n_vth)]

    def tox_values(self) -> list[float]:
        return [round(self.tox_min + i * self.tox_step, _GRID_DECIMALS) for i in range(self.n_tox)]

    def points(self) -> list[TechPoint]:
        """All grid points, ordered lexicographically by (vth, tox)."""
        return [TechPoint(v, t) for v in self.vth_values() for t in self.tox_values()]

    def __iter__(self) -> Iterator[TechPoint]:
        return iter(self.points())

    def _axis_index(self, value, lo, step, n):
        x = (value - lo) / step
        i = int(round(x))
        if abs(x - i) > 1e-6 or not 0 <= i < n:
            return None
        return i

    def vth_index(self, vth: float) -> int | None:
        return self._axis_index(vth, self.vth_min, self.vth_step, self.n_vth)

    def tox_index(self, tox: float) -> int | None:
        return self._axis_index(tox, self.tox_min, self.tox_step, self.n_tox)

    def contains(self, p: TechPoint) -> bool:
        return self.vth_index(p.vth) is not None and self.tox_index(p.tox) is not None

    def snap(self, p: TechPoint) -> TechPoint:
        """Return the canonical grid value of `p`, raising OffGridValue if it is not on the grid."""
        i, j = self.vth_index(p.vth), self.tox_index(p.tox)
        if i is None or j is None:
            raise OffGridValue(f"{p} is not on grid {self}")
        return TechPoint(self.vth_values()[i], self.tox_values()[j])

    def in_bounds(self, p: TechPoint) -> bool:
        return (self.vth_min - _GRID_TOL <= p.vth <= self.vth_max + _GRID_TOL
                and self.tox_min - _GRID_TOL <= p.tox <= self.tox_max + _GRID_TOL)

    def coarsen(self, n_vth: int = 5, n_tox: int = 5) -> "TechGrid":
        """Evenly thinned sub-grid keeping both endpoints, used for value-candidate sets."""
        def thin(lo, hi, step, n_have, n_want):
            if n_want >= n_have:
                return step
            if n_want < 2:
                raise ValueError("coarsened axis needs at least two values")
            stride = (n_have - 1) // (n_want - 1)
            if (n_have - 1) % (n_want - 1):
                raise ValueError(f"cannot thin {n_have} values evenly to {n_want}")
            return step * stride

        return TechGrid(
            self.vth_min, self.vth_max, thin(self.vth_min, self.vth_max, self.vth_step, self.n_vth, n_vth),
            self.tox_min, self.tox_max, thin(self.tox_min, self.tox_max, self.tox_step, self.n_tox, n_tox),
        )


DEFAULT_GRID = TechGrid()


@dataclass(frozen=True)
class LeakageCoeffs:
    """Leakage fit: A0 + A1*exp(a1*vth) + A2*exp(a2*tox), in watts."""

    A0: float
    A1: float
    a1: float
    A2: float
    a2: float

    def __post_init__(self):
        if self.A1 < 0 or self.A2 < 0:
            raise ValueError("leakage amplitudes A1, A2 must be non-negative")
        if self.a1 > 0 or self.a2 > 0:
            raise ValueError("leakage exponents a1, a2 must be non-positive")

    def __call__(self, vth, tox):
        return self.A0 + self.A1 * np.exp(self.a1 * vth) + self.A2 * np.exp(self.a2 * tox)

    def as_array(self) -> np.ndarray:
        return np.array([self.A0, self.A1, self.a1, self.A2, self.a2])


@dataclass(frozen=True)
class DelayCoeffs:
    """Delay fit: k0 + k1*exp(k3*vth) + k2*tox, in seconds."""

    k0: float
    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        if self.k1 < 0 or self.k2 < 0 or self.k3 < 0:
            raise ValueError("delay coefficients k1, k2, k3 must be non-negative")

    def __call__(self, vth, tox):
        return self.k0 + self.k1 * np.exp(self.k3 * vth) + self.k2 * tox

    def as_array(self) -> np.ndarray:
        return np.array([self.k0, self.k1, self.k2, self.k3])


@dataclass(frozen=True)
class ComponentModel:
    leakage: LeakageCoeffs
    delay: DelayCoeffs
    ref_area: float = 1.0
    area_exponent: float = 2.0

    def __post_init__(self):
        if not self.ref_area > 0:
            raise ValueError("ref_area must be positive")
        if self.area_exponent < 0:
            # a negative exponent would shrink the cell as the oxide thickens
            raise ValueError("area_exponent must be non-negative")


@dataclass(frozen=True)
class CharacterizationSample:
    point: TechPoint
    leakage: float
    delay: float

    def __post_init__(self):
        if not (self.leakage > 0 and self.delay > 0):
            raise ValueError("sample leakage and delay must be positive")


def eval_leakage(c: LeakageCoeffs, p: TechPoint) -> float:
    return float(c(p.vth, p.tox))


def eval_delay(c: DelayCoeffs, p: TechPoint) -> float:
    return float(c(p.vth, p.tox))


def area_factor(m: ComponentModel, tox: float, grid: TechGrid = DEFAULT_GRID) -> float:
    """Relative cell area at `tox`; the cell grows in both dimensions with the oxide."""
    if not grid.tox_min - _GRID_TOL <= tox <= grid.tox_max + _GRID_TOL:
        raise OutOfRange(f"tox={tox} A outside [{grid.tox_min}, {grid.tox_max}]")
    return m.ref_area * (tox / grid.tox_min) ** m.area_exponent


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

MAX_ITER = 500
REL_TOL = 1e-12
MIN_SAMPLES = 5


@dataclass(frozen=True)
class FitReport:
    params: np.ndarray
    sse: float
    iterations: int


def damped_gauss_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    p0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_iter: int = MAX_ITER,
    rel_tol: float = REL_TOL,
) -> FitReport:
    """Box-constrained Levenberg-Marquardt with Marquardt diagonal scaling.

    Steps are projected onto [lower, upper]. Converges when an accepted step
    changes the objective by less than `rel_tol` relative, or when no damping
    level yields a decrease (the floating-point floor of an exact fit).
    """
    p = np.clip(np.asarray(p0, dtype=float), lower, upper)
    r = residual(p)
    f = float(r @ r)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        if f == 0.0:
            return FitReport(p, f, it)
        J = jacobian(p)
        g = J.T @ r
        H = J.T @ J
        d = np.maximum(np.diag(H), 1e-300)
        try:
            step = np.linalg.solve(H + lam * np.diag(d), -g)
        except np.linalg.LinAlgError:
            step = -g / (d * (1.0 + lam))
        p_new = np.clip(p + step, lower, upper)
        r_new = residual(p_new)
        f_new = float(r_new @ r_new)
        if np.isfinite(f_new) and f_new < f:
            done = (f - f_new) <= rel_tol * f
            p, r, f = p_new, r_new, f_new
            lam = max(lam / 3.0, 1e-15)
            if done:
                return FitReport(p, f, it)
        else:
            lam *= 4.0
            if lam > 1e20:
                return FitReport(p, f, it)
    raise FitDiverged(f"no convergence within {max_iter} iterations (sse={f:.3e})")


def _design_arrays(samples: Sequence[CharacterizationSample], what: str):
    if len(samples) < MIN_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_SAMPLES} samples, got {len(samples)}")
    v = np.array([s.point.vth for s in samples], dtype=float)
    t = np.array([s.point.tox for s in samples], dtype=float)
    y = np.array([getattr(s, what) for s in samples], dtype=float)
    n_v = len(np.unique(np.round(v, 9)))
    n_t = len(np.unique(np.round(t, 9)))
    if n_v < 2 or n_t < 2:
        raise DegenerateDesign(
            f"samples span {n_v} distinct vth and {n_t} distinct tox values; need >= 2 of each"
        )
    return v, t, y


def _loglinear_slope(x: np.ndarray, group: np.ndarray, y: np.ndarray, sign: float) -> float | None:
    """Mean slope of log(sign * (y - extreme)) against x within each group of equal `group` values.

    For decaying exponentials the extreme is the group minimum; the offset
    floor is removed before taking logs.
    """
    slopes = []
    for key in np.unique(np.round(group, 9)):
        mask = np.abs(group - key) < 1e-9
        xs, ys = x[mask], y[mask]
        if len(np.unique(np.round(xs, 9))) < 2:
            continue
        diff = ys - ys.min()
        keep = diff > diff.max() * 1e-12
        if keep.sum() < 2 or len(np.unique(np.round(xs[keep], 9))) < 2:
            continue
        slope = np.polyfit(xs[keep], np.log(diff[keep]), 1)[0]
        if np.isfinite(slope) and sign * slope > 0:
            slopes.append(slope)
    if not slopes:
        return None
    return float(np.mean(slopes))


def fit_leakage(samples: Sequence[CharacterizationSample]) -> LeakageCoeffs:
    """Least-squares leakage coefficients with a1, a2 <= 0 and A1, A2 >= 0."""
    v, t, y = _design_arrays(samples, "leakage")
    scale = float(np.mean(np.abs(y)))
    ys = y / scale
    vc, tc = float(np.mean(v)), float(np.mean(t))
    dv, dt = v - vc, t - tc
    span_v = float(np.ptp(v))
    span_t = float(np.ptp(t))

    a1 = _loglinear_slope(v, t, ys, sign=-1.0) or -1.0 / span_v
    a2 = _loglinear_slope(t, v, ys, sign=-1.0) or -1.0 / span_t

    # amplitudes given the pre-fit exponents (centered form: B * exp(a * (x - c)))
    X = np.column_stack([np.ones_like(ys), np.exp(a1 * dv), np.exp(a2 * dt)])
    A0, B1, B2 = np.linalg.lstsq(X, ys, rcond=None)[0]
    B1, B2 = max(B1, 1e-6), max(B2, 1e-6)

    def model_parts(p):
        return np.exp(p[2] * dv), np.exp(p[4] * dt)

    def residual(p):
        e1, e2 = model_parts(p)
        return p[0] + p[1] * e1 + p[3] * e2 - ys

    def jacobian(p):
        e1, e2 = model_parts(p)
        return np.column_stack([np.ones_like(ys), e1, p[1] * dv * e1, e2, p[3] * dt * e2])

    lower = np.array([-np.inf, 0.0, -np.inf, 0.0, -np.inf])
    upper = np.array([np.inf, np.inf, 0.0, np.inf, 0.0])
    rep = damped_gauss_newton(residual, jacobian, np.array([A0, B1, a1, B2, a2]), lower, upper)
    A0, B1, a1, B2, a2 = rep.params
    return LeakageCoeffs(
        A0=float(A0 * scale),
        A1=float(B1 * scale * math.exp(-a1 * vc)),
        a1=float(a1),
        A2=float(B2 * scale * math.exp(-a2 * tc)),
        a2=float(a2),
    )


def fit_delay(samples: Sequence[CharacterizationSample]) -> DelayCoeffs:
    """Least-squares delay coefficients with k1, k2, k3 >= 0."""
    v, t, y = _design_arrays(samples, "delay")
    scale = float(np.mean(np.abs(y)))
    ys = y / scale
    vc, tc = float(np.mean(v)), float(np.mean(t))
    dv, dt = v - vc, t - tc

    k3 = _loglinear_slope(v, t, ys, sign=1.0) or 1.0 / float(np.ptp(v))
    X = np.column_stack([np.ones_like(ys), np.exp(k3 * dv), dt])
    c0, c1, c2 = np.linalg.lstsq(X, ys, rcond=None)[0]
    c1, c2 = max(c1, 1e-6), max(c2, 0.0)

    def residual(p):
        return p[0] + p[1] * np.exp(p[3] * dv) + p[2] * dt - ys

    def jacobian(p):
        e = np.exp(p[3] * dv)
        return np.column_stack([np.ones_like(ys), e, dt, p[1] * dv * e])

    lower = np.array([-np.inf, 0.0, 0.0, 0.0])
    upper = np.full(4, np.inf)
    rep = damped_gauss_newton(residual, jacobian, np.array([c0, c1, c2, k3]), lower, upper)
    c0, c1, c2, k3 = rep.params
    return DelayCoeffs(
        k0=float((c0 - c2 * tc) * scale),
        k1=float(c1 * scale * math.exp(-k3 * vc)),
        k2=float(c2 * scale),
        k3=float(k3),
    )


def fit_component(samples: Sequence[CharacterizationSample], ref_area: float = 1.0,
                  area_exponent: float = 2.0) -> ComponentModel:
    return ComponentModel(fit_leakage(samples), fit_delay(samples), ref_area, area_exponent)


def fit_rms(model: ComponentModel, samples: Sequence[CharacterizationSample]) -> tuple[float, float]:
    """Root-mean-square residuals (leakage, delay) of `model` on `samples`."""
    rl = [eval_leakage(model.leakage, s.point) - s.leakage for s in samples]
    rd = [eval_delay(model.delay, s.point) - s.delay for s in samples]
    return float(np.sqrt(np.mean(np.square(rl)))), float(np.sqrt(np.mean(np.square(rd))))


def sample_model(model: ComponentModel, points: Sequence[TechPoint], noise: float = 0.0,
                 rng: np.random.Generator | None = None) -> list[CharacterizationSample]:
    """Synthetic characterization samples from `model`, with optional multiplicative noise."""
    if noise and rng is None:
        rng = np.random.default_rng(0)
    out = []
    for p in points:
        lk, dl = eval_leakage(model.leakage, p), eval_delay(model.delay, p)
        if noise:
            lk *= 1.0 + noise * rng.standard_normal()
            dl *= 1.0 + noise * rng.standard_normal()
        out.append(CharacterizationSample(p, lk, dl))
    return out
