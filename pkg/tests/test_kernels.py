import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from drumcorners.errors import (
    NonConvergent,
    NonPositiveTime,
    PointOutsideDomain,
    QuadratureFailure,
    ToleranceNotMet,
    UnsupportedBC,
)
from drumcorners.geometry import BoundaryCondition
from drumcorners.kernels import (
    StraightBoundary,
    halfline1d,
    halfplane_evaluator,
    heat_halfplane,
    heat_plane,
    heat_quarterplane,
    heat_rectangle,
    heat_rectangle_images,
    interval1d,
    interval1d_images,
    line1d,
    robin_correction,
    robin_from_neumann,
)

D = BoundaryCondition.dirichlet()
N = BoundaryCondition.neumann()
R1 = BoundaryCondition.robin(1.0)

# half-line Robin kernel from the integral form
#   G(x-x') + G(x+x') - 2c int_0^inf e^{-c w} G(x+x'+w) dw
# evaluated with mpmath quadrature at 30 digits, frozen
HALFLINE_ROBIN = [
    (0.1, 0.3, 0.5, 1.0, 0.92493100883986154708),
    (0.05, 0.0, 0.2, 2.5, 1.1940486607132350164),
    (1.0, 1.0, 0.5, 0.3, 0.35491812386135121747),
]


@pytest.mark.parametrize("t,x,xp,c,ref", HALFLINE_ROBIN)
def test_halfline_robin_frozen(t, x, xp, c, ref):
    assert float(halfline1d(t, x, xp, BoundaryCondition.robin(c))) == pytest.approx(ref, rel=1e-13)


def test_robin_limits():
    t, x, xp = 0.2, 0.4, 0.1
    assert halfline1d(t, x, xp, BoundaryCondition.robin(0.0)) == pytest.approx(halfline1d(t, x, xp, N), rel=1e-15)
    # large c tends to Dirichlet, with a gap shrinking like 1/c
    d = halfline1d(t, x, xp, D)
    gaps = [halfline1d(t, x, xp, BoundaryCondition.robin(c)) - d for c in (1e4, 1e5, 1e6)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[1] / gaps[2] == pytest.approx(10.0, rel=1e-3)


def test_robin_correction_is_difference():
    z, zp = (0.2, 0.3), (-0.1, 0.05)
    diff = heat_halfplane(0.1, z, zp, R1) - heat_halfplane(0.1, z, zp, N)
    assert robin_correction(0.1, z, zp, 1.0) == pytest.approx(diff, rel=1e-12)


def test_no_overflow_far_from_boundary():
    v = halfline1d(1e-4, 5.0, 5.0, BoundaryCondition.robin(50.0))
    assert np.isfinite(v) and v == pytest.approx(line1d(1e-4, 5.0, 5.0), rel=1e-12)


def _kernels():
    return {
        "plane": lambda t, z, w: heat_plane(t, z, w),
        "half-D": halfplane_evaluator(D),
        "half-N": halfplane_evaluator(N),
        "half-R": halfplane_evaluator(BoundaryCondition.robin(2.0)),
        "quarter-DN": lambda t, z, w: heat_quarterplane(t, z, w, D, N),
        "rect-D": lambda t, z, w: heat_rectangle(t, z, w, 1.0, 0.7, D)[0],
        "rect-R": lambda t, z, w: heat_rectangle(t, z, w, 1.0, 0.7, R1)[0],
    }


@pytest.mark.parametrize("name", list(_kernels()))
def test_symmetry_random_pairs(name, rng):
    H = _kernels()[name]
    pts = rng.uniform([0.0, 0.0], [1.0, 0.7], size=(100, 2, 2))
    ts = rng.uniform(0.005, 0.3, size=100)
    for (z, w), t in zip(pts, ts):
        a, b = float(H(t, z, w)), float(H(t, w, z))
        assert abs(a - b) <= 1e-13 * max(abs(a), 1e-300) + 1e-300


def test_dirichlet_le_robin_le_neumann(rng):
    for _ in range(200):
        t = rng.uniform(1e-3, 1.0)
        x, xp = rng.uniform(0, 2, 2)
        c1, c2 = np.sort(rng.uniform(0, 20, 2))
        d = halfline1d(t, x, xp, D)
        r1 = halfline1d(t, x, xp, BoundaryCondition.robin(c1))
        r2 = halfline1d(t, x, xp, BoundaryCondition.robin(c2))
        n = halfline1d(t, x, xp, N)
        tol = 1e-13 * n
        assert d - tol <= r2 <= r1 + tol <= n + 2 * tol


@pytest.mark.parametrize("bc", [D, N, BoundaryCondition.robin(1.5)])
def test_halfline_semigroup(bc):
    t, s, x, y = 0.07, 0.13, 0.25, 0.6
    f = lambda z: float(halfline1d(t, x, z, bc) * halfline1d(s, z, y, bc))  # noqa: E731
    val, _ = quad(f, 0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    assert val == pytest.approx(float(halfline1d(t + s, x, y, bc)), rel=1e-9)


@pytest.mark.parametrize("bc", [D, N, R1])
def test_rectangle_semigroup(bc):
    a, b = 1.0, 0.7
    t, s = 0.02, 0.03
    z, w = np.array([0.3, 0.2]), np.array([0.55, 0.5])
    gx, wx = np.polynomial.legendre.leggauss(80)
    xs, ws = 0.5 * a * (gx + 1), 0.5 * a * wx
    ys, wys = 0.5 * b * (gx + 1), 0.5 * b * wx
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.stack([X, Y], -1)
    h1 = heat_rectangle(t, z, P, a, b, bc)[0]
    h2 = heat_rectangle(s, P, w, a, b, bc)[0]
    integral = float(np.einsum("i,j,ij->", ws, wys, h1 * h2))
    assert integral == pytest.approx(float(heat_rectangle(t + s, z, w, a, b, bc)[0]), rel=1e-9)


@given(st.floats(1e-3, 0.5), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 0.7), st.floats(0.0, 0.7))
def test_gaussian_upper_bound(t, x, xp, y, yp):
    # |H(t,z,w)| <= C t^-1 exp(-|z-w|^2 / (C' t)) with C = 1, C' = 8 for t <= 1/2
    z, w = (x, y), (xp, yp)
    r2 = (x - xp) ** 2 + (y - yp) ** 2
    bound = math.exp(-r2 / (8 * t)) / t
    for bc in (D, N, R1):
        assert abs(heat_rectangle(t, z, w, 1.0, 0.7, bc)[0]) <= bound
        assert abs(heat_halfplane(t, z, w, bc)) <= bound


@pytest.mark.parametrize("bc", [N, BoundaryCondition.robin(0.8)])
def test_heat_equation_and_boundary_condition(bc):
    t, zp = 0.05, (0.1, 0.3)
    x, y = 0.35, 0.2
    h = 1e-4
    H = lambda tt, xx, yy: float(heat_halfplane(tt, (xx, yy), zp, bc))  # noqa: E731
    dt = (H(t + h, x, y) - H(t - h, x, y)) / (2 * h)
    lap = (H(t, x + h, y) + H(t, x - h, y) + H(t, x, y + h) + H(t, x, y - h) - 4 * H(t, x, y)) / h**2
    assert dt == pytest.approx(lap, rel=1e-5)
    # -d/dy H + c H = 0 on y = 0 (outward normal is -y)
    dy = (-3 * H(t, x, 0.0) + 4 * H(t, x, h) - H(t, x, 2 * h)) / (2 * h)
    assert abs(-dy + bc.c * H(t, x, 0.0)) <= 1e-6 * abs(dy + 1.0)


@pytest.mark.parametrize("bc", [D, N])
def test_interval_eigen_vs_images(bc):
    xs = np.linspace(0, 1.3, 9)
    for t in (1e-3, 0.05, 0.8):
        eig, tail = interval1d(t, xs[:, None], xs[None, :], 1.3, bc)
        img = interval1d_images(t, xs[:, None], xs[None, :], 1.3, bc)
        assert np.allclose(eig, img, rtol=0, atol=1e-10 / math.sqrt(t))
        assert tail < 1e-10


def test_rectangle_images_agree():
    z, w = (0.2, 0.5), (0.8, 0.1)
    for bc in (D, N):
        assert heat_rectangle(0.03, z, w, 1.0, 0.7, bc)[0] == pytest.approx(
            heat_rectangle_images(0.03, z, w, 1.0, 0.7, bc), rel=1e-11)


def test_robin_interval_conserves_less_heat():
    # total heat decreases with c
    xs = np.linspace(0, 1, 401)
    totals = []
    for c in (0.0, 0.5, 2.0, 10.0):
        v, _ = interval1d(0.1, xs, 0.3, 1.0, BoundaryCondition.robin(c))
        totals.append(np.trapezoid(v, xs))
    assert totals[0] == pytest.approx(1.0, rel=1e-6)
    assert all(a > b for a, b in zip(totals, totals[1:]))


def test_kernel_errors():
    with pytest.raises(NonPositiveTime):
        heat_plane(0.0, (0, 0), (1, 1))
    with pytest.raises(PointOutsideDomain):
        halfline1d(0.1, -0.1, 0.2, D)
    with pytest.raises(PointOutsideDomain):
        interval1d(0.1, 1.5, 0.2, 1.0, D)
    with pytest.raises(UnsupportedBC):
        heat_quarterplane(0.1, (1, 1), (1, 2), R1, D)
    with pytest.raises(ToleranceNotMet):
        heat_rectangle(0.1, (0.5, 0.5), (0.5, 0.5), 1, 1, D, cutoff=0.5, abs_tol=1e-12)


def test_quarterplane_dirichlet_images():
    z, w = np.array([0.3, 0.4]), np.array([0.5, 0.2])
    t = 0.1
    imgs = sum(s * heat_plane(t, z, w * m) for s, m in
               ((1, (1, 1)), (-1, (-1, 1)), (-1, (1, -1)), (1, (-1, -1))))
    assert heat_quarterplane(t, z, w, D, D) == pytest.approx(float(imgs), rel=1e-13)


# ------------------------------------------------------------------ Duhamel series


@pytest.mark.slow
def test_duhamel_matches_closed_form():
    HN = halfplane_evaluator(N)
    res = robin_from_neumann(HN, 1.0, StraightBoundary(), 0.1, (0.0, 0.5), (0.0, 0.5), M=12)
    ref = float(heat_halfplane(0.1, (0.0, 0.5), (0.0, 0.5), R1))
    assert res.value == pytest.approx(ref, rel=1e-4)
    assert np.all(res.ratios[2:] <= 0.5)


def test_duhamel_zero_coefficient_and_boundary_point():
    HN = halfplane_evaluator(N)
    res = robin_from_neumann(HN, 0.0, StraightBoundary(), 0.1, (0.0, 0.5), (0.1, 0.3), M=4)
    assert res.value == pytest.approx(float(HN(0.1, (0.0, 0.5), (0.1, 0.3))), rel=1e-15)
    with pytest.raises(QuadratureFailure):
        robin_from_neumann(HN, 1.0, StraightBoundary(), 0.1, (0.0, 0.5), (0.2, 0.0), M=4)


def test_duhamel_divergence_detected():
    # c^2 t large: the series terms grow
    HN = halfplane_evaluator(N)
    with pytest.raises(NonConvergent):
        robin_from_neumann(HN, 40.0, StraightBoundary(), 1.0, (0.0, 0.2), (0.0, 0.2), M=6,
                           n_tau=12, n_theta=10, n_herm=10)
