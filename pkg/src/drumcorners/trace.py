"""Short-time heat trace coefficients, fits from spectra, and the corner classifier.

For a simply connected planar domain the trace ``sum_k exp(-lambda_k t)``
behaves like ``c_m1/t + c_mhalf/sqrt(t) + c_0 + O(sqrt t)``.  Each corner of
interior angle theta adds ``(pi - theta)^2 / (24 pi theta)`` to ``c_0``; that
number is positive unless theta = pi, which is what makes corners audible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AngleOutOfRange,
    FitFailure,
    IllConditionedFit,
    NotSimplyConnected,
    TailTooLarge,
)
from .geometry import DIRICHLET, NEUMANN, ROBIN, BoundaryCondition, Polygon, SmoothDomain
from .spectrum import Spectrum

SQRT_PI = math.sqrt(math.pi)


def corner_defect(theta):
    """Corner contribution ``-1/12 + (pi^2 + theta^2)/(24 pi theta)``.

    Both the raw and the simplified ``(pi - theta)^2/(24 pi theta)`` forms
    are evaluated and must agree.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(~((th > 0) & (th < 2 * math.pi))):
        raise AngleOutOfRange("corner angle must lie in (0, 2*pi)")
    raw = -1.0 / 12 + (math.pi**2 + th * th) / (24 * math.pi * th)
    simple = (math.pi - th) ** 2 / (24 * math.pi * th)
    if not np.allclose(raw, simple, rtol=0, atol=1e-12):
        raise AssertionError("corner defect forms disagree")
    return float(simple) if np.ndim(simple) == 0 else simple


def corner_defect_raw(theta):
    th = np.asarray(theta, dtype=float)
    return -1.0 / 12 + (math.pi**2 + th * th) / (24 * math.pi * th)


@dataclass(frozen=True)
class TraceExpansion:
    c_m1: float
    c_mhalf: float
    c_0: float
    remainder_order: float = 0.5

    def __call__(self, t):
        t = np.asarray(t, float)
        return self.c_m1 / t + self.c_mhalf / np.sqrt(t) + self.c_0

    def to_dict(self):
        return {"c_m1": self.c_m1, "c_mhalf": self.c_mhalf, "c_0": self.c_0,
                "remainder_order": self.remainder_order}


def _robin_shift(perimeter, bc: BoundaryCondition):
    if bc.kind == ROBIN:
        return -perimeter * bc.c / (2 * math.pi)
    return 0.0


def _leading(area, perimeter, bc):
    sign = -1.0 if bc.kind == DIRICHLET else 1.0
    return area / (4 * math.pi), sign * perimeter / (8 * SQRT_PI)


def polygon_trace_coeffs(poly: Polygon, bc: BoundaryCondition) -> TraceExpansion:
    """Coefficients of t^-1, t^-1/2, t^0 for a simply connected polygon."""
    if poly.euler_char != 1:
        raise NotSimplyConnected("only simply connected polygons are supported")
    a, b = _leading(poly.area, poly.perimeter, bc)
    angles = np.asarray(poly.angles)
    c0 = poly.euler_char / 6 + float(np.sum(corner_defect(angles))) + _robin_shift(poly.perimeter, bc)
    return TraceExpansion(a, b, c0)


def smooth_trace_coeffs(dom: SmoothDomain, bc: BoundaryCondition) -> TraceExpansion:
    """The polygon formulas with no corners."""
    if dom.euler_char != 1:
        raise NotSimplyConnected("only simply connected domains are supported")
    a, b = _leading(dom.area, dom.perimeter, bc)
    return TraceExpansion(a, b, dom.euler_char / 6 + _robin_shift(dom.perimeter, bc))


def trace_coeffs(dom, bc):
    if isinstance(dom, Polygon):
        return polygon_trace_coeffs(dom, bc)
    if isinstance(dom, SmoothDomain):
        return smooth_trace_coeffs(dom, bc)
    if hasattr(dom, "polygon"):
        return polygon_trace_coeffs(dom.polygon, bc)
    raise TypeError(f"no trace formula for {type(dom).__name__}")


# ------------------------------------------------------------------ traces from spectra


def weyl_count_tail(cutoff, area, t):
    """Bound on sum_{lambda > cutoff} exp(-lambda t) from the one-term Weyl density.

    With N(lambda) ~ area lambda / 4pi (plus slack for the boundary term),
    the tail is ``(area/4pi) (cutoff + 1/t) exp(-cutoff t)`` times 1.5.
    """
    return 1.5 * area / (4 * math.pi) * (cutoff + 1.0 / t) * math.exp(-cutoff * t)


def heat_trace_from_spectrum(spec: Spectrum, t, area=None, abs_tol=None):
    """``sum exp(-lambda t)`` with a Weyl-law tail bound.

    Returns ``(trace, tail_bound)``.  Without ``area`` the area is inferred
    from the counting function at the cutoff.
    """
    t = float(t)
    ev = spec.eigenvalues
    val = float(np.sum(np.exp(-ev * t)))
    if area is None:
        area = 4 * math.pi * max(len(spec), 1) / max(spec.cutoff, 1e-300)
    tail = weyl_count_tail(spec.cutoff, area, t)
    if abs_tol is not None and tail > abs_tol:
        raise TailTooLarge(f"spectral tail bound {tail:.3g} at t={t:g} exceeds {abs_tol:.3g}")
    return val, tail


@dataclass
class TraceFit:
    expansion: TraceExpansion
    c_half: float  # fitted sqrt(t) coefficient (remainder proxy)
    stderr: np.ndarray  # standard errors of the free coefficients
    free: tuple  # names of the fitted coefficients
    t_grid: np.ndarray
    trace: np.ndarray
    fitted: np.ndarray
    condition: float

    @property
    def residuals(self):
        return self.trace - self.fitted

    @property
    def c0_stderr(self):
        return float(self.stderr[self.free.index("c_0")])

    def to_dict(self):
        return {**self.expansion.to_dict(), "c_half": self.c_half,
                "c0_stderr": self.c0_stderr, "condition": self.condition,
                "max_abs_residual": float(np.max(np.abs(self.residuals))) if self.trace.size else 0.0}


def _fit(t, y, known_cols, free_cols, names, cond_max):
    # relative weighting: every sample matters, regardless of the t^-1 blow-up
    w = 1.0 / np.abs(y)
    A = np.column_stack(free_cols) * w[:, None]
    rhs = (y - sum(known_cols, np.zeros_like(y))) * w
    cond = float(np.linalg.cond(A))
    if not math.isfinite(cond) or cond > cond_max:
        raise IllConditionedFit(f"fit matrix condition number {cond:.3g}")
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    res = rhs - A @ coef
    dof = max(len(y) - len(names), 1)
    s2 = float(res @ res) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    return coef, np.sqrt(np.diag(cov)), cond


def fit_trace_values(t_grid, trace, known=None, bc: BoundaryCondition | None = None,
                     sqrt_term=True, cond_max=1e12) -> TraceFit:
    """Least-squares fit of trace samples to ``a/t + b/sqrt(t) + c_0 (+ d sqrt t)``.

    With ``known = {"area": .., "perimeter": ..}`` the first two coefficients
    are pinned (their sign taken from ``bc``) and only ``c_0`` (and ``d``)
    are fitted.
    """
    t = np.asarray(t_grid, float)
    y = np.asarray(trace, float)
    if t.size < 3 or t.size != y.size:
        raise FitFailure("need at least 3 matching (t, trace) samples")
    basis = {"c_m1": 1 / t, "c_mhalf": 1 / np.sqrt(t), "c_0": np.ones_like(t), "c_half": np.sqrt(t)}
    names = ["c_m1", "c_mhalf", "c_0"] + (["c_half"] if sqrt_term else [])
    pinned = {}
    if known is not None:
        bc = bc or BoundaryCondition.dirichlet()
        a, b = _leading(known["area"], known["perimeter"], bc)
        pinned = {"c_m1": a, "c_mhalf": b}
    free = [n for n in names if n not in pinned]
    if t.size < len(free):
        raise FitFailure("more free coefficients than samples")
    coef, se, cond = _fit(t, y, [pinned[n] * basis[n] for n in pinned], [basis[n] for n in free], free, cond_max)
    vals = dict(pinned)
    vals.update(zip(free, coef))
    fitted = sum(vals[n] * basis[n] for n in names)
    exp = TraceExpansion(float(vals["c_m1"]), float(vals["c_mhalf"]), float(vals["c_0"]))
    return TraceFit(exp, float(vals.get("c_half", 0.0)), se, tuple(free), t, y, fitted, cond)


def fit_trace_expansion(spec: Spectrum, t_grid, known=None, bc: BoundaryCondition | None = None,
                        tail_tol=1e-6, **kw) -> TraceFit:
    """Fit the short-time expansion to the trace of a spectrum.

    The smallest t must keep the spectral tail bound below ``tail_tol``
    relative to the trace.
    """
    t = np.sort(np.asarray(t_grid, float))
    area = known["area"] if known else None
    vals = []
    for ti in t:
        v, tail = heat_trace_from_spectrum(spec, ti, area)
        if tail > tail_tol * abs(v):
            raise TailTooLarge(f"t={ti:g} is too small for cutoff {spec.cutoff:.4g} (tail {tail:.3g})")
        vals.append(v)
    return fit_trace_values(t, np.array(vals), known, bc, **kw)


def default_t_grid(spec: Spectrum, area, t_max=5e-3, n=24, tail_tol=1e-6):
    """Geometric grid from the smallest t the cutoff allows up to ``t_max``."""
    lam = max(spec.cutoff, 1.0)
    # smallest t with tail <= tail_tol * area/(4 pi t): solve crudely by bisection in log t
    lo, hi = 1e-8, t_max
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        if weyl_count_tail(lam, area, mid) <= tail_tol * area / (4 * math.pi * mid):
            hi = mid
        else:
            lo = mid
    t_min = hi * 1.05
    if t_min >= t_max:
        raise TailTooLarge(f"cutoff {lam:.4g} too small for t_max={t_max:g}")
    return np.geomspace(t_min, t_max, n)


POLYGONAL = "Polygonal"
SMOOTH = "Smooth"
INCONCLUSIVE = "Inconclusive"


@dataclass
class CornerVerdict:
    verdict: str
    excess: float
    ci: float
    fit: TraceFit | None = field(default=None, repr=False)

    def to_dict(self):
        d = {"verdict": self.verdict, "excess": self.excess, "ci": self.ci}
        if self.fit is not None:
            d["fit"] = self.fit.to_dict()
        return d


def classify_corners(spec: Spectrum, known: dict, t_grid=None, bc: BoundaryCondition | None = None,
                     min_ci=1e-3, **fit_kw) -> CornerVerdict:
    """Decide from a spectrum whether the drum has corners.

    ``excess = c_0 - chi/6`` (minus the Robin boundary term).  Corners make
    the excess strictly positive.  ``ci`` is the fit's standard error,
    floored at ``min_ci`` because the O(sqrt t) model error is not captured
    by the residual scatter alone.  Polygonal if excess > 3 ci, Smooth if
    |excess| < ci, otherwise Inconclusive.  Extra keywords go to the fit
    (e.g. ``sqrt_term=False`` for straight-edged drums).
    """
    bc = bc or BoundaryCondition.dirichlet()
    chi = known.get("euler_char", 1)
    if chi != 1:
        raise NotSimplyConnected("classifier assumes a simply connected drum")
    if len(spec) < 50:
        return CornerVerdict(INCONCLUSIVE, math.nan, math.inf)
    try:
        if t_grid is None:
            t_grid = default_t_grid(spec, known["area"])
        fit = fit_trace_expansion(spec, t_grid, known, bc, **fit_kw)
    except (TailTooLarge, IllConditionedFit, FitFailure):
        return CornerVerdict(INCONCLUSIVE, math.nan, math.inf)
    excess = fit.expansion.c_0 - chi / 6 - _robin_shift(known["perimeter"], bc)
    ci = max(fit.c0_stderr, min_ci)
    if excess > 3 * ci:
        verdict = POLYGONAL
    elif abs(excess) < ci:
        verdict = SMOOTH
    else:
        verdict = INCONCLUSIVE
    return CornerVerdict(verdict, float(excess), float(ci), fit)
