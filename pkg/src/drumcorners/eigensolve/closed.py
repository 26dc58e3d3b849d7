"""Spectra with separable or Bessel-zero closed forms."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv, jvp

from ..errors import InvalidDimensions, RootBracketFailure, UnsupportedBC
from ..geometry import DIRICHLET, NEUMANN, BoundaryCondition
from ..spectrum import CLOSED_FORM, ROOT_FINDING, Spectrum


def _robin_char(k, L, c):
    # (k^2 - c^2) sin(kL) - 2 c k cos(kL), scaled so the residual is O(1)
    return ((k * k - c * c) * math.sin(k * L) - 2 * c * k * math.cos(k * L)) / (k * k + c * c)


def robin_interval_roots(L: float, c: float, count: int) -> np.ndarray:
    """Wavenumbers k_j (j = 0..count-1) of the interval Robin problem.

    Boundary condition ``-u'(0) + c u(0) = 0`` and ``u'(L) + c u(L) = 0``;
    eigenvalues are ``k_j^2``.  For ``c > 0`` the j-th root lies strictly
    between the Neumann value ``j pi/L`` and the Dirichlet value ``(j+1) pi/L``,
    so each bracket holds exactly one root.
    """
    if not L > 0:
        raise InvalidDimensions("interval length must be positive")
    if c < 0:
        raise UnsupportedBC("only alpha/beta >= 0 is supported")
    j = np.arange(count)
    if c == 0:
        return j * math.pi / L
    roots = np.empty(count)
    for i in range(count):
        a = i * math.pi / L
        b = (i + 1) * math.pi / L
        lo = a if i > 0 else min(1e-8 / L, 1e-3 * b)
        # bracket ends are root-free for c > 0, but pull in slightly to dodge rounding
        eps = 1e-13 * b
        fa, fb = _robin_char(lo + eps, L, c), _robin_char(b - eps, L, c)
        if fa * fb > 0:
            raise RootBracketFailure(f"no sign change in bracket {i} for c={c}")
        roots[i] = brentq(_robin_char, lo + eps, b - eps, args=(L, c), xtol=1e-15 * b, rtol=1e-15, maxiter=200)
    return roots


def robin_interval_modes(L: float, c: float, count: int):
    """Eigenvalues and a normalised eigenfunction evaluator for the interval Robin problem."""
    k = robin_interval_roots(L, c, count)
    s2 = np.sin(k * L) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        sin2 = np.where(k > 0, np.sin(2 * k * L) / (4 * np.where(k > 0, k, 1.0)), L / 2)
    norm2 = (k * k + c * c) * L / 2 + (k * k - c * c) * sin2 + c * s2
    inv = 1.0 / np.sqrt(norm2)

    def phi(x):
        kx = np.multiply.outer(np.asarray(x, float), k)
        return (k * np.cos(kx) + c * np.sin(kx)) * inv

    return k * k, phi


def eigs_1d_robin(L: float, alpha: float, beta: float, count: int) -> np.ndarray:
    """First ``count`` eigenvalues of -u'' on [0, L] with ``alpha u + beta du/dnu = 0`` at both ends."""
    if beta == 0:
        raise UnsupportedBC("beta = 0 is the Dirichlet problem")
    return robin_interval_roots(L, alpha / beta, count) ** 2


def _interval_eigs(L, bc: BoundaryCondition, lam_max):
    kmax = math.sqrt(lam_max)
    n = int(kmax * L / math.pi) + 2
    if bc.kind == DIRICHLET:
        k = np.arange(1, n + 1) * math.pi / L
    elif bc.kind == NEUMANN or bc.c == 0:
        k = np.arange(0, n + 1) * math.pi / L
    else:
        k = robin_interval_roots(L, bc.c, n + 1)
    lam = k * k
    return lam[lam <= lam_max]


def eigs_rectangle(a: float, b: float, bc: BoundaryCondition, count: int | None = None,
                   cutoff: float | None = None) -> Spectrum:
    """Separable spectrum of ``[0, a] x [0, b]``.

    Give either ``count`` (the first ``count`` eigenvalues) or ``cutoff``
    (all eigenvalues up to it).
    """
    if not (a > 0 and b > 0):
        raise InvalidDimensions("rectangle sides must be positive")
    if (count is None) == (cutoff is None):
        raise ValueError("give exactly one of count, cutoff")
    if cutoff is None:
        # two-term Weyl inverse, then enlarge until enough eigenvalues fit
        lam = 4 * math.pi * count / (a * b) * 1.2 + 100.0
        while True:
            ev = _rect_upto(a, b, bc, lam)
            if ev.size >= count:
                break
            lam *= 1.5
        ev = ev[:count]
        # the list is complete up to the last kept value
        cut = float(ev[-1])
    else:
        ev = _rect_upto(a, b, bc, cutoff)
        cut = float(cutoff)
    src = ROOT_FINDING if bc.kind not in (DIRICHLET, NEUMANN) and bc.c != 0 else CLOSED_FORM
    return Spectrum(ev, cut, src, {"domain": "rectangle", "a": a, "b": b, "bc": bc.to_dict()})


def _rect_upto(a, b, bc, lam_max):
    ex = _interval_eigs(a, bc, lam_max)
    ey = _interval_eigs(b, bc, lam_max)
    s = np.add.outer(ex, ey).ravel()
    return np.sort(s[s <= lam_max])


def _bessel_zeros(f, n, kmax, start, step=0.2):
    """All zeros of ``f(n, x)`` in ``(start, kmax]`` by sign changes plus Brent."""
    if start >= kmax:
        return np.empty(0)
    x = np.arange(start, kmax + step, step)
    y = f(n, x)
    idx = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
    out = []
    for i in idx:
        out.append(brentq(lambda s: f(n, s), x[i], x[i + 1], xtol=1e-14, rtol=1e-15))
    exact = np.nonzero(y == 0)[0]
    out.extend(x[exact])
    z = np.sort(np.array(out))
    return z[z <= kmax]


def eigs_disk(radius: float, bc: BoundaryCondition, count: int | None = None,
              cutoff: float | None = None) -> Spectrum:
    """Disk spectrum from zeros of J_n (Dirichlet) or J_n' (Neumann).

    Orders n >= 1 carry multiplicity two.  Zeros are located by sign changes
    on a grid of step 0.2 (well below the zero spacing, which exceeds 2.4)
    and refined with Brent's method.
    """
    if not radius > 0:
        raise InvalidDimensions("radius must be positive")
    if bc.kind not in (DIRICHLET, NEUMANN):
        raise UnsupportedBC("disk spectra are provided for Dirichlet and Neumann only")
    if (count is None) == (cutoff is None):
        raise ValueError("give exactly one of count, cutoff")
    lam_max = cutoff * radius**2 if cutoff is not None else 4 * count / 1.0 * 1.15 + 60.0
    while True:
        kmax = math.sqrt(lam_max)
        vals = []
        if bc.kind == NEUMANN:
            vals.append(np.zeros(1))
        n = 0
        while True:
            if bc.kind == DIRICHLET:
                z = _bessel_zeros(jv, n, kmax, max(n, 0.5))
            else:
                z = _bessel_zeros(jvp, n, kmax, max(n, 0.5))
            if z.size == 0 and n > kmax:
                break
            vals.append(np.repeat(z, 1 if n == 0 else 2))
            n += 1
        ev = np.sort(np.concatenate(vals) ** 2)
        if count is None or ev.size >= count:
            break
        lam_max *= 1.3
    if count is not None:
        ev = ev[:count]
        cut = float(ev[-1])
        # a degenerate pair split by the count cut: drop the orphan so the list stays complete
        if ev.size > 1 and ev.size < np.sum(np.sort(np.concatenate(vals) ** 2) <= cut):
            ev = ev[ev < cut]
            cut = float(ev[-1])
    else:
        cut = lam_max
    return Spectrum(ev / radius**2, cut / radius**2, ROOT_FINDING,
                    {"domain": "disk", "radius": radius, "bc": bc.to_dict()})
