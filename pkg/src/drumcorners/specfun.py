"""Special functions and quadrature engines.

* ``erfc`` / ``erfcx`` (scaled complementary error function),
* ``bessel_k_imag``: K_{i mu}(x) from its integral representation,
* ``kl_integrate``: integrals over the order mu of K_{i mu}(r sqrt s) K_{i mu}(r0 sqrt s)
  times an angular factor, with principal-value handling of one simple pole,
* ``inverse_laplace``: fixed Talbot, Gaver-Stehfest and Gaver-Wynn-rho.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import special as _sp

from . import _accel
from ._accel import njit
from .errors import (
    DivergentConfiguration,
    EvaluationFailure,
    NonPositiveArgument,
    ToleranceNotMet,
    UnstableResult,
)

# ------------------------------------------------------------------ error function


def erfc(x):
    """Complementary error function (scipy backed)."""
    return _sp.erfc(x)


def erfcx(x):
    """``exp(x**2) * erfc(x)``; finite for large positive x."""
    return _sp.erfcx(x)


def exp_erfc(a, b):
    """``exp(a) * erfc(b)`` without overflow when ``a`` is large and ``b > 0``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        direct = np.exp(a) * _sp.erfc(b)
        scaled = np.exp(a - b * b) * _sp.erfcx(b)
    return np.where(b > 0, scaled, direct)


# ------------------------------------------------------------------ K_{i mu}(x)
#
# K_{i mu}(x) = 1/2 int_R exp(-x cosh u + i mu u) du.  Shifting the contour to
# Im u = v (|v| < pi/2) pulls out exp(-mu v) exactly, which removes the
# exp(-pi mu / 2) cancellation that the real-axis integral suffers for mu >> x.
# The shifted integrand is entire and decays doubly exponentially, so the
# trapezoid rule converges geometrically.

_KIV_SLACK = 3.0  # mu * (pi/2 - v); amplifies roundoff by about e**3
_KIV_CUT = 40.0


def _kiv_plan(mu: float, x: float):
    if mu * math.pi / 2 <= _KIV_SLACK or mu <= x:
        v = 0.0
    else:
        v = math.pi / 2 - _KIV_SLACK / mu
    cv, sv = math.cos(v), math.sin(v)
    # truncate where the Gaussian-like envelope has decayed by e**-(cut + slack)
    target = _KIV_CUT + mu * (math.pi / 2 - v) + x * cv
    U = math.acosh(max(1.0, target / (x * cv)))
    # highest local oscillation frequency inside the window
    fmax = mu + x * sv * math.sinh(U) + x * cv * math.sinh(U)
    h = min(0.25, math.pi / (1.15 * fmax + 4.0))
    n = int(math.ceil(U / h))
    return v, cv, sv, h, n


@njit
def _kiv_trap_numba(mu, x, v, cv, sv, h, n):
    # symmetric trapezoid: f(-u) = conj-type partner, so sum 2*Re over u > 0
    total = math.exp(-x * cv) * 0.5
    for k in range(1, n + 1):
        u = k * h
        amp = math.exp(-x * cv * math.cosh(u))
        total += amp * math.cos(mu * u - x * sv * math.sinh(u))
    return 2.0 * h * total * 0.5 * math.exp(-mu * v)


def _kiv_trap_numpy(mu, x, v, cv, sv, h, n):
    u = h * np.arange(1, n + 1)
    amp = np.exp(-x * cv * np.cosh(u))
    total = math.exp(-x * cv) * 0.5 + float(np.sum(amp * np.cos(mu * u - x * sv * np.sinh(u))))
    return 2.0 * h * total * 0.5 * math.exp(-mu * v)


_kiv_trap = _accel.pick(_kiv_trap_numba, _kiv_trap_numpy)


def bessel_k_imag(mu, x, *, impl=None) -> float:
    """Modified Bessel function of the second kind of imaginary order, K_{i mu}(x).

    Parameters
    ----------
    mu : float
        Order parameter; the function is even in ``mu``.
    x : float
        Positive real argument.
    impl : {"numba", "numpy"}, optional
        Force one kernel; default follows ``DRUMCORNERS_NO_NUMBA``.
    """
    x = float(x)
    if not x > 0:
        raise NonPositiveArgument("K_{i mu}(x) needs x > 0")
    mu = abs(float(mu))
    kern = {"numba": _kiv_trap_numba, "numpy": _kiv_trap_numpy}.get(impl, _kiv_trap)
    return float(kern(mu, x, *_kiv_plan(mu, x)))


def bessel_k_imag_array(mus, x, *, impl=None) -> np.ndarray:
    """K_{i mu}(x) for an array of orders at one argument."""
    mus = np.abs(np.asarray(mus, dtype=float))
    out = np.empty_like(mus)
    x = float(x)
    if not x > 0:
        raise NonPositiveArgument("K_{i mu}(x) needs x > 0")
    kern = {"numba": _kiv_trap_numba, "numpy": _kiv_trap_numpy}.get(impl, _kiv_trap)
    flat = out.reshape(-1)
    for i, mu in enumerate(mus.reshape(-1)):
        flat[i] = kern(float(mu), x, *_kiv_plan(float(mu), x))
    return out


# ------------------------------------------------------------------ KL integrals


@dataclass(frozen=True)
class QuadratureBudget:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_panels: int = 4000
    mu_cutoff: Optional[float] = None  # hard truncation; None = adaptive
    nodes_per_panel: int = 16

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class KLIntegrand:
    """(1/pi^2) K_{i mu}(r sqrt s) K_{i mu}(r0 sqrt s) * [phi(mu) + g(mu)/(mu - pole)].

    ``growth`` is the exponential growth rate of the angular factor for large
    mu (``pi - delta`` in the usual notation); the Bessel product decays like
    ``exp(-pi mu)``, so the integral converges iff ``growth < pi``.  When
    ``growth`` is omitted it is estimated from the factor itself.
    """

    r: float
    r0: float
    s: float
    phi_factor: Callable[[np.ndarray], np.ndarray]
    growth: Optional[float] = None
    pole: Optional[float] = None
    pole_numerator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not (self.r > 0 and self.r0 > 0 and self.s > 0):
            raise NonPositiveArgument("r, r0 and s must be positive")
        if (self.pole is None) != (self.pole_numerator is None):
            raise ValueError("pole and pole_numerator go together")

    def bessel_product(self, mu) -> np.ndarray:
        sq = math.sqrt(self.s)
        k1 = bessel_k_imag_array(mu, self.r * sq)
        if self.r0 == self.r:
            return k1 * k1
        return k1 * bessel_k_imag_array(mu, self.r0 * sq)

    def __call__(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        f = np.asarray(self.phi_factor(mu), dtype=float)
        if self.pole is not None:
            f = f + self.pole_numerator(mu) / (mu - self.pole)
        return self.bessel_product(mu) * f / math.pi ** 2

    def decay_rate(self) -> float:
        """delta = pi - growth of the angular factor."""
        if self.growth is not None:
            return math.pi - self.growth
        m1, m2 = 20.0, 30.0
        f = np.abs(np.asarray(self.phi_factor(np.array([m1, m2])), dtype=float))
        if f[0] == 0 and f[1] == 0:
            return math.pi
        g = math.log(max(f[1], 1e-300) / max(f[0], 1e-300)) / (m2 - m1)
        return math.pi - max(g, 0.0)


@dataclass(frozen=True)
class KLResult:
    value: float
    tail_bound: float
    mu_end: float
    n_panels: int


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_nodes(a, b, n):
    x, w = _gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def kl_integrate(integrand: KLIntegrand, budget: QuadratureBudget = QuadratureBudget()) -> KLResult:
    """Integrate a :class:`KLIntegrand` over mu in [0, inf).

    Panels are added until the geometric tail estimate drops below
    ``max(abs_tol, rel_tol * |value|)``.  The tail rate is the larger of the
    measured panel-to-panel envelope ratio and ``exp(-delta * width)``.
    A pole at ``mu* > 0`` is integrated as a Cauchy principal value over the
    symmetric window [0, 2 mu*] after subtracting the pole part.
    """
    delta = integrand.decay_rate()
    if not delta > 0:
        raise DivergentConfiguration(
            f"angular factor grows like exp({math.pi - delta:.4g} mu); the Bessel product cannot absorb it")
    npan = budget.nodes_per_panel
    width = float(min(2.0, max(0.5, 1.0 / delta)))
    total = 0.0
    start = 0.0
    panels = 0

    pole = integrand.pole
    # a pole far out in the decayed tail needs no special handling
    if pole is not None and pole > 0 and pole * delta <= 60.0:
        # PV over [0, 2 pole]: int (F(mu) - F(pole)) / (mu - pole); the pole part integrates to zero
        ksub = max(2, int(math.ceil(2 * pole / width)))
        if ksub % 2:
            ksub += 1
        edges = np.linspace(0.0, 2 * pole, ksub + 1)

        def regular(mu):
            mu = np.asarray(mu, dtype=float)
            return integrand.bessel_product(mu) * integrand.phi_factor(mu) / math.pi ** 2

        def numer(mu):
            mu = np.asarray(mu, dtype=float)
            return integrand.bessel_product(mu) * integrand.pole_numerator(mu) / math.pi ** 2

        f_star = float(numer(np.array([pole]))[0])
        for a, b in zip(edges[:-1], edges[1:]):
            mu, w = _panel_nodes(a, b, npan)
            vals = regular(mu) + (numer(mu) - f_star) / (mu - pole)
            total += float(np.dot(w, vals))
            panels += 1
        start = 2 * pole
    elif pole is not None and pole <= 0:
        if pole == 0:
            raise DivergentConfiguration("pole at mu = 0 is not integrable")
        # pole outside the integration range: integrand is regular

    env_prev = None
    tail = math.inf
    limit = budget.mu_cutoff
    while True:
        b = start + width
        if limit is not None:
            b = min(b, limit)
        mu, w = _panel_nodes(start, b, npan)
        vals = integrand(mu)
        if not np.all(np.isfinite(vals)):
            raise ToleranceNotMet(f"non-finite integrand near mu={start:.3g}")
        total += float(np.dot(w, vals))
        panels += 1
        env = float(np.max(np.abs(vals)))
        start = b
        rho = math.exp(-delta * width)
        if env_prev is not None and env_prev > 0:
            rho = max(rho, min(env / env_prev, 1.0))
        env_prev = env
        tail = math.inf if rho >= 1.0 else env * width * rho / (1.0 - rho)
        if limit is not None and start >= limit:
            # hard cutoff: analytic tail from the decay rate only
            tail = env / delta
            break
        if panels >= 3 and tail <= max(budget.abs_tol, budget.rel_tol * abs(total)):
            break
        if env == 0.0 and panels >= 3:
            tail = 0.0
            break
        if panels >= budget.max_panels:
            raise ToleranceNotMet(f"KL quadrature did not converge by mu={start:.3g} (tail {tail:.3g})")
    return KLResult(total, tail, start, panels)


# ------------------------------------------------------------------ inverse Laplace


@dataclass(frozen=True)
class InverseLaplaceResult:
    value: float
    error_estimate: float
    method: str


def _talbot(F, t, M):
    r = 2.0 * M / (5.0 * t)
    theta = np.pi * np.arange(1, M) / M
    cot = 1.0 / np.tan(theta)
    s = r * theta * (cot + 1j)
    sigma = theta + (theta * cot - 1.0) * cot
    try:
        F0 = complex(F(complex(r)))
        Fk = np.array([complex(F(sk)) for sk in s])
    except Exception as exc:  # noqa: BLE001 - any failure of user F is reported uniformly
        raise EvaluationFailure(f"F not evaluable on the Talbot contour: {exc}") from exc
    terms = np.exp(t * s) * Fk * (1.0 + 1j * sigma)
    return (r / M) * (0.5 * math.exp(r * t) * F0.real + float(np.sum(terms.real)))


@lru_cache(maxsize=None)
def stehfest_weights(N: int) -> np.ndarray:
    if N % 2:
        raise ValueError("Stehfest order must be even")
    half = N // 2
    V = np.zeros(N)
    for k in range(1, N + 1):
        acc = 0.0
        for j in range((k + 1) // 2, min(k, half) + 1):
            acc += (j ** half * math.factorial(2 * j)) / (
                math.factorial(half - j) * math.factorial(j) * math.factorial(j - 1)
                * math.factorial(k - j) * math.factorial(2 * j - k))
        V[k - 1] = (-1) ** (k + half) * acc
    return V


def _real_samples(F, t, n):
    ln2t = math.log(2.0) / t
    try:
        vals = np.array([float(np.real(F(k * ln2t))) for k in range(1, n + 1)])
    except Exception as exc:  # noqa: BLE001
        raise EvaluationFailure(f"F not evaluable on the real axis: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise EvaluationFailure("F returned non-finite values")
    return vals


def _stehfest_from_samples(vals, t, N):
    return math.log(2.0) / t * float(np.dot(stehfest_weights(N), vals[:N]))


def _gwr_from_samples(vals, t, M):
    """Gaver functionals accelerated with Wynn's rho algorithm."""
    ln2t = math.log(2.0) / t
    G = np.empty(M)
    for n in range(1, M + 1):
        acc = 0.0
        for k in range(n + 1):
            acc += (-1) ** k * math.comb(n, k) * vals[n + k - 1]
        # (2n)! / (n! (n-1)!) = n * C(2n, n)
        G[n - 1] = ln2t * n * math.comb(2 * n, n) * acc
    # rho table: rho_{-1} = 0, rho_0 = G
    prev = np.zeros(M + 1)
    cur = G.copy()
    for k in range(1, M):
        nxt = np.empty(M - k)
        for i in range(M - k):
            diff = cur[i + 1] - cur[i]
            if diff == 0:
                diff = 1e-300
            nxt[i] = prev[i + 1] + k / diff
        prev, cur = cur, nxt
    # even columns of the rho table approximate the limit
    return float(prev[0] if (M - 1) % 2 else cur[0]), G


def inverse_laplace(F: Callable, t: float, method: str = "talbot", *, M: int | None = None, N: int = 16,
                    check: float | None = None) -> InverseLaplaceResult:
    """Numerically invert a Laplace transform at time ``t``.

    Parameters
    ----------
    F : callable
        Transform; must accept complex ``s`` for ``"talbot"`` and positive
        reals for ``"stehfest"`` / ``"gwr"``.
    method : {"talbot", "stehfest", "gwr"}
    M : int, optional
        Talbot nodes (default 24) or GWR depth (default 10).
    N : int
        Stehfest order (even).
    check : float, optional
        Raise :class:`UnstableResult` if the internal error estimate exceeds
        ``check`` times ``|value|``.

    The error estimate compares the result with a lower-order run of the same
    method.
    """
    if not t > 0:
        raise NonPositiveArgument("inverse Laplace needs t > 0")
    if method == "talbot":
        M = M or 24
        v = _talbot(F, t, M)
        v2 = _talbot(F, t, max(8, (3 * M) // 4))
    elif method == "stehfest":
        vals = _real_samples(F, t, N)
        v = _stehfest_from_samples(vals, t, N)
        v2 = _stehfest_from_samples(vals, t, N - 2)
    elif method == "gwr":
        M = M or 10
        vals = _real_samples(F, t, 2 * M)
        v, _ = _gwr_from_samples(vals, t, M)
        v2, _ = _gwr_from_samples(vals, t, M - 2)
    else:
        raise ValueError(f"unknown inverse Laplace method {method!r}")
    err = abs(v - v2)
    if not math.isfinite(v):
        raise UnstableResult(f"{method} produced a non-finite value")
    if check is not None and err > check * abs(v):
        raise UnstableResult(f"{method}: internal error estimate {err:.3g} exceeds {check:g} relative")
    return InverseLaplaceResult(float(v), float(err), method)


def laplace_real_samples(F, t, n):
    """F(k ln2 / t) for k = 1..n (shared abscissae of Stehfest and GWR)."""
    return _real_samples(F, t, n)


def stehfest_and_gwr(vals, t, N, M):
    """Both real-axis inversions from one set of samples ``F(k ln2/t)``, k=1..max(N, 2M)."""
    return _stehfest_from_samples(vals, t, N), _gwr_from_samples(vals, t, M)[0]
