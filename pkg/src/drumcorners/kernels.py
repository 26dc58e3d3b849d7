"""Closed-form model heat kernels and the Neumann-to-Robin Duhamel series.

Sign convention: the Laplacian is ``-sum d^2/dx_j^2`` and every kernel solves
``(d/dt + Laplacian) H = 0``.  Points are arrays whose last axis has length 2;
all evaluators broadcast over leading axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import _accel
from ._accel import njit
from .errors import (
    NonConvergent,
    NonPositiveTime,
    PointOutsideDomain,
    QuadratureFailure,
    ToleranceNotMet,
    UnsupportedBC,
)
from .geometry import DIRICHLET, NEUMANN, ROBIN, BoundaryCondition
from .specfun import erfcx

_EIG_CUTOFF = 40.0  # keep modes with lambda * t <= this


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise NonPositiveTime("heat kernels need t > 0")
    return t


def _xy(z):
    z = np.asarray(z, dtype=float)
    return z[..., 0], z[..., 1]


# ------------------------------------------------------------------ 1D factors


def line1d(t, x, xp):
    """Free heat kernel on the real line."""
    t = _check_t(t)
    d = np.asarray(x, float) - np.asarray(xp, float)
    return np.exp(-d * d / (4 * t)) / np.sqrt(4 * math.pi * t)


def halfline1d(t, x, xp, bc: BoundaryCondition):
    """Heat kernel on ``[0, inf)`` by images, with the Robin correction term."""
    t = _check_t(t)
    x = np.asarray(x, float)
    xp = np.asarray(xp, float)
    if np.any(x < 0) or np.any(xp < 0):
        raise PointOutsideDomain("half-line points need x >= 0")
    g = 1.0 / np.sqrt(4 * math.pi * t)
    direct = g * np.exp(-(x - xp) ** 2 / (4 * t))
    image = g * np.exp(-(x + xp) ** 2 / (4 * t))
    if bc.kind == DIRICHLET:
        return direct - image
    out = direct + image
    c = bc.c
    # -c exp(c(x+x') + c^2 t) erfc((x+x')/sqrt(4t) + c sqrt(t))
    #  = -c exp(-(x+x')^2/4t) erfcx(b)   for b > 0 (no overflow)
    b = (x + xp) / np.sqrt(4 * t) + c * np.sqrt(t)
    with np.errstate(over="ignore", invalid="ignore"):
        corr = np.where(
            b > 0,
            -c * np.exp(-(x + xp) ** 2 / (4 * t)) * erfcx(np.maximum(b, 0.0)),
            -c * np.exp(c * (x + xp) + c * c * t) * (2.0 - erfcx(-np.minimum(b, 0.0)) * np.exp(-b * b)),
        )
    return out + corr


def interval1d(t, x, xp, L, bc: BoundaryCondition, cutoff=_EIG_CUTOFF):
    """Heat kernel on ``[0, L]`` from its eigenfunction expansion.

    Returns ``(value, tail_bound)``.  The tail bound compares the omitted
    modes with a Gaussian integral.
    """
    t = float(_check_t(t))
    x = np.asarray(x, float)
    xp = np.asarray(xp, float)
    if np.any((x < 0) | (x > L)) or np.any((xp < 0) | (xp > L)):
        raise PointOutsideDomain("interval points need 0 <= x <= L")
    kmax = math.sqrt(cutoff / t)
    if bc.kind == DIRICHLET:
        n = np.arange(1, int(kmax * L / math.pi) + 2)
        k = n * math.pi / L
        lam = k * k
        phi = lambda s: math.sqrt(2.0 / L) * np.sin(np.multiply.outer(s, k))  # noqa: E731
    elif bc.kind == NEUMANN or bc.c == 0.0:
        n = np.arange(0, int(kmax * L / math.pi) + 2)
        k = n * math.pi / L
        lam = k * k
        norm = np.where(n == 0, math.sqrt(1.0 / L), math.sqrt(2.0 / L))
        phi = lambda s: norm * np.cos(np.multiply.outer(s, k))  # noqa: E731
    else:
        from .eigensolve.closed import robin_interval_modes

        count = int(kmax * L / math.pi) + 3
        lam, phi = robin_interval_modes(L, bc.c, count)
    w = np.exp(-lam * t)
    val = np.sum(phi(x) * phi(xp) * w, axis=-1)
    lam_last = float(lam[-1])
    # omitted modes: |phi|^2 <= 2/L (Robin: bounded by the same up to O(c/k)); spacing pi/L in k
    tail = (2.0 / L) * (L / math.pi) * math.sqrt(math.pi / (4 * t)) * math.erfc(math.sqrt(lam_last * t))
    return val, tail


def interval1d_images(t, x, xp, L, bc: BoundaryCondition, n_images=None):
    """Dirichlet/Neumann interval kernel by the method of images (Jacobi theta form)."""
    t = float(_check_t(t))
    if bc.kind not in (DIRICHLET, NEUMANN):
        raise UnsupportedBC("image sums exist only for Dirichlet and Neumann")
    x = np.asarray(x, float)[..., None]
    xp = np.asarray(xp, float)[..., None]
    if n_images is None:
        n_images = int(math.ceil(math.sqrt(4 * t * 40) / (2 * L))) + 2
    n = np.arange(-n_images, n_images + 1)
    g = 1.0 / math.sqrt(4 * math.pi * t)
    direct = np.exp(-(x - xp + 2 * n * L) ** 2 / (4 * t))
    image = np.exp(-(x + xp + 2 * n * L) ** 2 / (4 * t))
    sign = -1.0 if bc.kind == DIRICHLET else 1.0
    return g * np.sum(direct + sign * image, axis=-1)


# ------------------------------------------------------------------ planar kernels


def heat_plane(t, z, zp):
    """Free heat kernel on R^2: (4 pi t)^-1 exp(-|z - z'|^2 / 4t)."""
    t = _check_t(t)
    x, y = _xy(z)
    xp, yp = _xy(zp)
    r2 = (x - xp) ** 2 + (y - yp) ** 2
    return np.exp(-r2 / (4 * t)) / (4 * math.pi * t)


def heat_halfplane(t, z, zp, bc: BoundaryCondition):
    """Heat kernel on ``{y >= 0}`` for Dirichlet, Neumann or Robin conditions."""
    x, y = _xy(z)
    xp, yp = _xy(zp)
    return line1d(t, x, xp) * halfline1d(t, y, yp, bc)


def robin_correction(t, z, zp, c):
    """H_corr: the Robin kernel minus the Neumann kernel on the half-plane."""
    t = _check_t(t)
    x, y = _xy(z)
    xp, yp = _xy(zp)
    b = (y + yp) / np.sqrt(4 * t) + c * np.sqrt(t)
    return -c * line1d(t, x, xp) * np.exp(-(y + yp) ** 2 / (4 * t)) * erfcx(b)


def heat_quarterplane(t, z, zp, bc_x: BoundaryCondition, bc_y: BoundaryCondition):
    """Heat kernel on ``{x >= 0, y >= 0}``; ``bc_x`` applies on the edge x = 0."""
    for bc in (bc_x, bc_y):
        if bc.kind not in (DIRICHLET, NEUMANN):
            raise UnsupportedBC("quarter-plane kernel is provided for Dirichlet/Neumann edges only")
    x, y = _xy(z)
    xp, yp = _xy(zp)
    return halfline1d(t, x, xp, bc_x) * halfline1d(t, y, yp, bc_y)


def heat_rectangle(t, z, zp, a, b, bc: BoundaryCondition, cutoff=_EIG_CUTOFF, abs_tol=None):
    """Heat kernel on ``[0, a] x [0, b]`` as a product of 1D eigen-expansions.

    Returns ``(value, tail_bound)``; raises :class:`ToleranceNotMet` when
    ``abs_tol`` is given and the tail bound exceeds it.
    """
    x, y = _xy(z)
    xp, yp = _xy(zp)
    X, tx = interval1d(t, x, xp, a, bc, cutoff)
    Y, ty = interval1d(t, y, yp, b, bc, cutoff)
    tail = float(tx * np.max(np.abs(Y)) + ty * np.max(np.abs(X)) + tx * ty)
    if abs_tol is not None and tail > abs_tol:
        raise ToleranceNotMet(f"eigen-sum tail {tail:.3g} exceeds {abs_tol:.3g}")
    return X * Y, tail


def heat_rectangle_images(t, z, zp, a, b, bc: BoundaryCondition):
    x, y = _xy(z)
    xp, yp = _xy(zp)
    return interval1d_images(t, x, xp, a, bc) * interval1d_images(t, y, yp, b, bc)


# ------------------------------------------------------------------ evaluators


@dataclass(frozen=True)
class KernelEvaluator:
    """Uniform ``(t, z, z') -> value`` interface over the kernels above."""

    domain: str
    bc: BoundaryCondition
    fn: Callable = field(repr=False)

    def __call__(self, t, z, zp):
        return self.fn(t, z, zp)


def plane_evaluator():
    return KernelEvaluator("plane", BoundaryCondition.neumann(), heat_plane)


def halfplane_evaluator(bc: BoundaryCondition):
    return KernelEvaluator("halfplane", bc, lambda t, z, zp: heat_halfplane(t, z, zp, bc))


def quarterplane_evaluator(bc: BoundaryCondition):
    return KernelEvaluator("quarterplane", bc, lambda t, z, zp: heat_quarterplane(t, z, zp, bc, bc))


def rectangle_evaluator(a, b, bc: BoundaryCondition):
    return KernelEvaluator("rectangle", bc, lambda t, z, zp: heat_rectangle(t, z, zp, a, b, bc)[0])


# ------------------------------------------------------------------ Duhamel series


@dataclass(frozen=True)
class StraightBoundary:
    """Boundary line ``origin + u * direction`` (unit direction), u in R."""

    origin: tuple = (0.0, 0.0)
    direction: tuple = (1.0, 0.0)

    def __call__(self, u):
        u = np.asarray(u, float)
        o = np.asarray(self.origin, float)
        d = np.asarray(self.direction, float)
        d = d / np.hypot(*d)
        return o + u[..., None] * d

    def project(self, p):
        o = np.asarray(self.origin, float)
        d = np.asarray(self.direction, float)
        d = d / np.hypot(*d)
        q = np.asarray(p, float) - o
        return float(q @ d), float(abs(q[0] * d[1] - q[1] * d[0]))


@dataclass
class RobinSeriesResult:
    value: float
    terms: np.ndarray  # k_m(t, x, y), m = 0..M
    term_magnitudes: np.ndarray  # A_m = int_0^t int_boundary |c k_m(s, z, y)| dz ds

    @property
    def ratios(self):
        k = np.abs(self.terms)
        with np.errstate(divide="ignore", invalid="ignore"):
            return k[1:] / k[:-1]


@lru_cache(maxsize=None)
def _gauss_hermite(n):
    return np.polynomial.hermite.hermgauss(n)


@lru_cache(maxsize=None)
def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _cheb_nodes(n, a, b):
    k = np.arange(n)
    x = np.cos((2 * k + 1) * math.pi / (2 * n))[::-1]
    return a + 0.5 * (b - a) * (x + 1.0)


def _fejer_weights(n, a, b):
    """Fejer (first kind) weights for the Chebyshev nodes of ``_cheb_nodes``."""
    k = np.arange(n)
    theta = (2 * k + 1) * math.pi / (2 * n)
    w = np.ones(n)
    for j in range(1, n // 2 + 1):
        w -= 2 * np.cos(2 * j * theta) / (4 * j * j - 1)
    w *= 2.0 / n
    return (0.5 * (b - a) * w)[::-1]


def _bary_matrix(nodes, query):
    """Barycentric interpolation matrix for Chebyshev first-kind nodes."""
    n = len(nodes)
    k = np.arange(n)
    theta = (2 * k + 1) * math.pi / (2 * n)
    wts = ((-1.0) ** k * np.sin(theta))[::-1]
    diff = query[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    m = wts / diff
    m /= m.sum(axis=1, keepdims=True)
    rows = np.nonzero(exact.any(axis=1))[0]
    for r in rows:
        m[r] = exact[r].astype(float)
    return m


def _cubic_weights(frac):
    """4-point Lagrange weights for offsets -1, 0, 1, 2 at fractional position ``frac``."""
    f = frac
    return np.stack([
        -f * (f - 1) * (f - 2) / 6,
        (f + 1) * (f - 1) * (f - 2) / 2,
        -(f + 1) * f * (f - 2) / 2,
        (f + 1) * f * (f - 1) / 6,
    ], axis=-1)


@njit
def _interp_gather_numba(A, pos):
    # A: (J, K, n_u) ; pos: (J, K, I, L) fractional grid positions -> (J, K, I, L)
    J, K, I, L = pos.shape
    n_u = A.shape[2]
    out = np.empty((J, K, I, L))
    for j in range(J):
        for k in range(K):
            for i in range(I):
                for l in range(L):
                    p = min(max(pos[j, k, i, l], 0.0), n_u - 1.0)
                    b = min(max(int(math.floor(p)), 1), n_u - 3)
                    f = p - b
                    w0 = -f * (f - 1) * (f - 2) / 6
                    w1 = (f + 1) * (f - 1) * (f - 2) / 2
                    w2 = -(f + 1) * f * (f - 2) / 2
                    w3 = (f + 1) * f * (f - 1) / 6
                    out[j, k, i, l] = (w0 * A[j, k, b - 1] + w1 * A[j, k, b]
                                       + w2 * A[j, k, b + 1] + w3 * A[j, k, b + 2])
    return out


def _interp_gather_numpy(A, pos):
    J, K, n_u = A.shape
    p = np.clip(pos, 0.0, n_u - 1.0)
    b = np.clip(np.floor(p).astype(np.int64), 1, n_u - 3)
    w = _cubic_weights(p - b)
    jj = np.arange(J)[:, None, None, None]
    kk = np.arange(K)[None, :, None, None]
    out = np.zeros(pos.shape)
    for q in range(4):
        out += w[..., q] * A[jj, kk, b - 1 + q]
    return out


_interp_gather = _accel.pick(_interp_gather_numba, _interp_gather_numpy)


def _scaled(H, extra):
    """``H * exp(extra)`` evaluated as ``sign(H) exp(log|H| + extra)``; zero where H underflowed."""
    H = np.asarray(H, float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        v = np.sign(H) * np.exp(np.log(np.abs(H)) + extra)
    return np.where(H != 0.0, v, 0.0)


def robin_from_neumann(H_N, c, boundary, t, x, y, M=12, *, n_tau=32, n_theta=40, n_herm=12,
                       h_u=None, tol=1e-12, impl=None) -> RobinSeriesResult:
    """Robin heat kernel from a Neumann kernel by the Duhamel series.

    ``k_0 = H_N`` and ``k_m(t,x,y) = -c int_0^t int_boundary H_N(s,x,z) k_{m-1}(t-s,z,y) dz ds``
    (outward normal derivative plus ``c u`` vanishing on the boundary).

    Intermediate terms live on a (Chebyshev in sqrt(tau)) x (uniform in u)
    grid of boundary points, divided by the free kernel from ``y`` restricted
    to the boundary so that what is interpolated (barycentric in tau, cubic
    in u) is smooth.  The time integral uses ``s = tau sin^2(theta)``
    (Gauss-Legendre in theta), which absorbs the endpoint singularities at
    both ends, and the boundary integral uses Gauss-Hermite nodes placed on
    the Gaussian formed by the kernel and the reference profile.

    Parameters
    ----------
    H_N : callable or KernelEvaluator
        Symmetric Neumann kernel accepting broadcast arrays ``(t, z, z')``.
    c : float
        Robin coefficient alpha/beta.
    boundary : StraightBoundary
        Boundary curve parameterised by arc length.
    x, y : point
        Evaluation points; ``y`` must lie off the boundary.
    M : int
        Highest series index.
    """
    t = float(t)
    if not t > 0:
        raise NonPositiveTime("t must be positive")
    if M < 1:
        raise ValueError("need M >= 1")
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    terms = np.zeros(M + 1)
    mags = np.zeros(M + 1)
    terms[0] = float(H_N(t, x, y))
    if c == 0.0:
        return RobinSeriesResult(terms[0], terms, mags)

    ux, dx = boundary.project(x)
    uy, dy = boundary.project(y)
    if dy <= 1e-12:
        raise QuadratureFailure("source point y must lie off the boundary")
    # Gaussian reach sqrt(4 t log(1/tol)) around both projections, plus margin
    reach = 1.5 * math.sqrt(4 * t * math.log(1.0 / tol))
    lo, hi = min(ux, uy) - reach, max(ux, uy) + reach
    if h_u is None:
        h_u = min(0.05, 0.12 * math.sqrt(t))
    n_u = max(int(math.ceil((hi - lo) / h_u)) + 1, 4)
    ugrid = lo + h_u * np.arange(n_u)
    zgrid = boundary(ugrid)  # (n_u, 2)

    def log_ref(tau, u):
        # log of the free kernel from y restricted to the boundary
        return -((u - uy) ** 2 + dy * dy) / (4 * tau) - np.log(4 * math.pi * tau)

    # tau = t v^2 with v on Chebyshev nodes: the terms are smooth in sqrt(tau)
    v = _cheb_nodes(n_tau, 0.0, 1.0)
    tau = t * v * v
    wtau = _fejer_weights(n_tau, 0.0, 1.0) * 2 * t * v
    th, wth = _gauss_legendre(n_theta)
    th = 0.25 * math.pi * (th + 1.0)
    wth = 0.25 * math.pi * wth
    sn2, cs2 = np.sin(th) ** 2, np.cos(th) ** 2
    sc = np.sin(th) * np.cos(th)
    wh, whw = _gauss_hermite(n_herm)
    whw = whw * np.exp(wh * wh)

    # k_m on the boundary is stored relative to the reference profile: F_m = f_m * exp(log_ref)
    F0 = H_N(tau[:, None], zgrid[None, :, :], y)  # (J, I)
    f = _scaled(F0, -log_ref(tau[:, None], ugrid[None, :]))

    # sigma = tau sin^2, tau - sigma = tau cos^2; the product of the sigma-kernel and the
    # reference profile at tau - sigma is a Gaussian in u' centred at u cos^2 + uy sin^2
    # of width 2 sqrt(tau) sin cos, which is where the Hermite nodes go
    sig = tau[:, None] * sn2  # (J, K)
    rest = tau[:, None] * cs2
    spread = 2 * np.sqrt(tau)[:, None] * sc  # (J, K)
    centre = ugrid[None, :] * cs2[:, None] + uy * sn2[:, None]  # (K, I)
    uq = centre[None, :, :, None] + spread[:, :, None, None] * wh  # (J, K, I, L)
    Hk = H_N(sig[:, :, None, None], zgrid[None, None, :, None, :], boundary(uq))
    Kern = _scaled(Hk, log_ref(rest[:, :, None, None], uq) - log_ref(tau[:, None, None, None], ugrid[None, None, :, None]))
    jac = 2 * tau[:, None] * sc * spread * wth  # (J, K)
    Kern *= jac[:, :, None, None] * whw
    pos = (uq - lo) / h_u
    Ltau = _bary_matrix(v, (v[:, None] * np.sqrt(cs2)[None, :]).reshape(-1))  # (J*K, J)

    # final transfer to x
    spread_x = 2 * math.sqrt(t) * sc  # (K,)
    uqx = (ux * cs2 + uy * sn2)[:, None] + spread_x[:, None] * wh  # (K, L)
    Hx = H_N((t * sn2)[:, None], x, boundary(uqx))
    Kx = _scaled(Hx, log_ref((t * cs2)[:, None], uqx))
    Kx *= (2 * t * sc * spread_x * wth)[:, None] * whw
    Ltau_x = _bary_matrix(v, np.sqrt(cs2))  # (K, J)
    pos_x = ((uqx - lo) / h_u)[None, :, None, :]

    gather = {"numba": _interp_gather_numba, "numpy": _interp_gather_numpy}.get(impl, _interp_gather)
    ref_grid = np.exp(log_ref(tau[:, None], ugrid[None, :]))

    def to_x(fm):
        A = (Ltau_x @ fm)[None]  # (1, K, I)
        return float(np.sum(Kx * gather(A, pos_x)[0, :, 0, :]))

    def magnitude(fm):
        return float(abs(c) * h_u * np.sum(wtau[:, None] * np.abs(fm * ref_grid)))

    mags[0] = magnitude(f)
    J = n_tau
    for m in range(1, M + 1):
        terms[m] = -c * to_x(f)
        A = (Ltau @ f).reshape(J, n_theta, n_u)
        f = -c * np.einsum("jkil,jkil->ji", Kern, gather(A, pos))
        mags[m] = magnitude(f)
        if not np.all(np.isfinite(f)):
            raise QuadratureFailure("non-finite Duhamel term")
    k = np.abs(terms)
    half = max(1, M // 2)
    if k[M] > 0 and k[half] > 0 and k[M] >= k[half]:
        raise NonConvergent(f"Duhamel terms not decaying: |k_{M}|={k[M]:.3g} >= |k_{half}|={k[half]:.3g}")
    return RobinSeriesResult(float(np.sum(terms)), terms, mags)
