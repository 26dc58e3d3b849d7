"""Green's functions and heat kernels of the infinite circular sector.

The Green's function ``G(s)`` (resolvent kernel of the Laplacian at ``-s``)
is a Kontorovich-Lebedev integral over the imaginary Bessel order ``mu``:

    G = (1/pi^2) int_0^inf K_{i mu}(r sqrt s) K_{i mu}(r0 sqrt s) B(mu) dmu

with an angular factor ``B`` per boundary condition.  The first term of every
``B`` is ``cosh((pi - |phi - phi0|) mu)``, which on its own gives the free
Green's function ``K_0(sqrt s |z - z0|) / 2pi``.  We evaluate that part in
closed form and integrate only the remainder, which decays exponentially in
``mu`` even on the diagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import k0

from .errors import (
    DiagonalSingularity,
    DivergentConfiguration,
    NonPositiveTime,
    PointOutsideDomain,
    UnstableResult,
    UnsupportedBC,
)
from .geometry import DIRICHLET, NEUMANN, ROBIN, BoundaryCondition, Sector
from .kernels import heat_plane
from .specfun import (
    KLIntegrand,
    KLResult,
    QuadratureBudget,
    kl_integrate,
    laplace_real_samples,
    stehfest_and_gwr,
)

DIAG_TOL = 1e-6


@dataclass(frozen=True)
class SectorPoint:
    r: float
    phi: float

    def cartesian(self):
        return np.array([self.r * math.cos(self.phi), self.r * math.sin(self.phi)])


def _check_point(p: SectorPoint, gamma: float):
    if not p.r > 0:
        raise PointOutsideDomain("the corner r = 0 is excluded; use the trace module's corner term")
    if not (0.0 <= p.phi <= gamma):
        raise PointOutsideDomain(f"angle {p.phi} outside [0, {gamma}]")


def _sinh_ratio(a, b, mu):
    """sinh(a mu) / sinh(b mu) for b > 0, without overflow for large mu."""
    mu = np.asarray(mu, float)
    out = np.empty_like(mu)
    small = mu < 1e-8
    out[small] = a / b
    m = mu[~small]
    aa = abs(a)
    num = -np.expm1(-2 * aa * m)
    den = -np.expm1(-2 * b * m)
    out[~small] = math.copysign(1.0, a) * np.exp((aa - b) * m) * num / den
    return out


def free_brace(mu, phi, phi0):
    return np.cosh((math.pi - abs(phi - phi0)) * np.asarray(mu, float))


def brace_dirichlet(mu, gamma, phi, phi0):
    mu = np.asarray(mu, float)
    S = phi + phi0 - gamma
    D = phi - phi0
    return (free_brace(mu, phi, phi0)
            - _sinh_ratio(math.pi, gamma, mu) * np.cosh(S * mu)
            + _sinh_ratio(math.pi - gamma, gamma, mu) * np.cosh(D * mu))


def brace_neumann(mu, gamma, phi, phi0):
    mu = np.asarray(mu, float)
    S = phi + phi0 - gamma
    D = phi - phi0
    return (free_brace(mu, phi, phi0)
            + _sinh_ratio(math.pi, gamma, mu) * np.cosh(S * mu)
            + _sinh_ratio(math.pi - gamma, gamma, mu) * np.cosh(D * mu))


def _robin_regular(mu, gamma, phi, phi0, alpha, beta):
    """Robin extra term minus its pole part (the pole sits in the e^{-S mu} piece)."""
    mu = np.asarray(mu, float)
    S = phi + phi0 - gamma
    return -_sinh_ratio(math.pi, gamma, mu) * np.exp(S * mu) * alpha / (alpha + beta * mu)


def _robin_pole_numerator(mu, gamma, phi, phi0, c):
    # -ratio * e^{-S mu} * alpha/(alpha - beta mu) == c * ratio * e^{-S mu} / (mu - c)
    mu = np.asarray(mu, float)
    S = phi + phi0 - gamma
    return c * _sinh_ratio(math.pi, gamma, mu) * np.exp(-S * mu)


def brace_robin(mu, gamma, phi, phi0, alpha, beta):
    """Full Robin angular factor (pointwise; singular at mu = alpha/beta)."""
    mu = np.asarray(mu, float)
    S = phi + phi0 - gamma
    extra = -_sinh_ratio(math.pi, gamma, mu) * (
        np.exp(S * mu) * alpha / (alpha + beta * mu) + np.exp(-S * mu) * alpha / (alpha - beta * mu))
    return brace_neumann(mu, gamma, phi, phi0) + extra


def angular_green(mu, gamma, phi, phi0, kind):
    """Separated-variables angular Green's function for the Dirichlet/Neumann wedge.

    Solves ``g'' - mu^2 g = -delta(phi - phi0)`` on ``[0, gamma]`` with
    ``g = 0`` (Dirichlet) or ``g' = 0`` (Neumann) at both edges.  The
    representation ``G = (2/pi^2) int K K mu sinh(pi mu) g dmu`` then matches
    the brace form through ``brace = 2 mu sinh(pi mu) g``.
    """
    mu = np.asarray(mu, float)
    lo, hi = min(phi, phi0), max(phi, phi0)
    f = np.sinh if kind == DIRICHLET else np.cosh
    return f(mu * lo) * f(mu * (gamma - hi)) / (mu * np.sinh(gamma * mu))


def remainder_decay(gamma, phi, phi0):
    """Exponential decay rate delta of (Bessel product) x (brace - free term).

    The image term grows like exp((pi - gamma + |S|) mu) and the last term
    like exp((pi - 2 gamma + |D|) mu) for gamma < pi (exp((|D| - pi) mu) for
    gamma > pi); the Bessel product decays like exp(-pi mu).
    """
    S = phi + phi0 - gamma
    D = abs(phi - phi0)
    d2 = gamma - abs(S)
    if gamma == math.pi:
        d3 = math.inf
    else:
        d3 = min(2 * gamma, 2 * math.pi) - D
    return min(d2, d3)


def _remainder_integrand(s, sector: Sector, p: SectorPoint, p0: SectorPoint) -> KLIntegrand:
    g = sector.gamma
    bc = sector.bc
    phi, phi0 = p.phi, p0.phi
    delta = remainder_decay(g, phi, phi0)
    if not delta > 0:
        raise DivergentConfiguration(
            f"angular factor not dominated by the Bessel decay (delta = {delta:.3g}); "
            "points on the edges are excluded")
    growth = math.pi - delta
    if bc.kind == DIRICHLET:
        fac = lambda mu: brace_dirichlet(mu, g, phi, phi0) - free_brace(mu, phi, phi0)  # noqa: E731
        return KLIntegrand(p.r, p0.r, s, fac, growth)
    if bc.kind == NEUMANN:
        fac = lambda mu: brace_neumann(mu, g, phi, phi0) - free_brace(mu, phi, phi0)  # noqa: E731
        return KLIntegrand(p.r, p0.r, s, fac, growth)
    alpha, beta = bc.alpha, bc.beta
    c = alpha / beta
    if c < 0:
        raise UnsupportedBC("sector Robin kernels are supported for alpha/beta >= 0 only")
    if c == 0.0:
        fac = lambda mu: (brace_neumann(mu, g, phi, phi0) - free_brace(mu, phi, phi0)  # noqa: E731
                          + _robin_regular(mu, g, phi, phi0, alpha, beta))
        return KLIntegrand(p.r, p0.r, s, fac, growth)
    fac = lambda mu: (brace_neumann(mu, g, phi, phi0) - free_brace(mu, phi, phi0)  # noqa: E731
                      + _robin_regular(mu, g, phi, phi0, alpha, beta))
    num = lambda mu: _robin_pole_numerator(mu, g, phi, phi0, c)  # noqa: E731
    return KLIntegrand(p.r, p0.r, s, fac, growth, pole=c, pole_numerator=num)


def green_sector_remainder(s, sector: Sector, p: SectorPoint, p0: SectorPoint,
                           budget: QuadratureBudget | None = None) -> KLResult:
    """Sector Green's function minus the free Green's function (finite on the diagonal)."""
    if not s > 0:
        raise NonPositiveTime("spectral parameter s must be positive")
    _check_point(p, sector.gamma)
    _check_point(p0, sector.gamma)
    return kl_integrate(_remainder_integrand(s, sector, p, p0), budget or QuadratureBudget())


def green_free(s, p: SectorPoint, p0: SectorPoint):
    d = float(np.hypot(*(p.cartesian() - p0.cartesian())))
    return k0(math.sqrt(s) * d) / (2 * math.pi)


def green_sector_detail(s, sector: Sector, p: SectorPoint, p0: SectorPoint,
                        budget: QuadratureBudget | None = None) -> KLResult:
    d = float(np.hypot(*(p.cartesian() - p0.cartesian())))
    if d < DIAG_TOL * max(p.r, p0.r):
        raise DiagonalSingularity("Green's function is singular at p = p0")
    rem = green_sector_remainder(s, sector, p, p0, budget)
    return KLResult(rem.value + green_free(s, p, p0), rem.tail_bound, rem.mu_end, rem.n_panels)


def green_sector(s, sector: Sector, p: SectorPoint, p0: SectorPoint,
                 budget: QuadratureBudget | None = None) -> float:
    """Sector Green's function at spectral parameter ``s > 0``."""
    return green_sector_detail(s, sector, p, p0, budget).value


@dataclass(frozen=True)
class SectorHeatResult:
    value: float
    stehfest: float
    gwr: float
    rel_disagreement: float


def heat_sector_detail(t, sector: Sector, p: SectorPoint, p0: SectorPoint,
                       budget: QuadratureBudget | None = None, *, N=18, M=10,
                       agree=1e-3) -> SectorHeatResult:
    """Sector heat kernel: free kernel plus the inverted remainder transform.

    The remainder transform is sampled at ``s_k = k ln2 / t`` and inverted
    twice (Gaver-Stehfest and Gaver-Wynn-rho) from the same samples; the
    methods must agree to ``agree`` relative to the full kernel value.
    """
    if not t > 0:
        raise NonPositiveTime("t must be positive")
    _check_point(p, sector.gamma)
    _check_point(p0, sector.gamma)
    budget = budget or QuadratureBudget(rel_tol=1e-14, abs_tol=1e-300)
    integrand_at = lambda s: kl_integrate(_remainder_integrand(s, sector, p, p0), budget).value  # noqa: E731
    vals = laplace_real_samples(integrand_at, t, max(N, 2 * M))
    st, gw = stehfest_and_gwr(vals, t, N, M)
    free = float(heat_plane(t, p.cartesian(), p0.cartesian()))
    v_st, v_gw = free + st, free + gw
    scale = max(abs(v_gw), abs(free))
    dis = abs(v_st - v_gw) / scale
    if dis > agree:
        raise UnstableResult(f"Stehfest {v_st:.8g} and GWR {v_gw:.8g} disagree ({dis:.2g} relative)")
    return SectorHeatResult(v_gw, v_st, v_gw, dis)


def heat_sector(t, sector: Sector, p: SectorPoint, p0: SectorPoint,
                budget: QuadratureBudget | None = None) -> float:
    """Sector heat kernel at time ``t`` (see :func:`heat_sector_detail`)."""
    return heat_sector_detail(t, sector, p, p0, budget).value
