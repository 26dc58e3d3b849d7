import math

import numpy as np
import pytest
from scipy.special import k0

from drumcorners.errors import DiagonalSingularity, PointOutsideDomain, UnsupportedBC
from drumcorners.geometry import BoundaryCondition, Sector
from drumcorners.kernels import heat_halfplane, heat_quarterplane
from drumcorners.sector import (
    SectorPoint,
    angular_green,
    brace_dirichlet,
    brace_neumann,
    brace_robin,
    green_sector,
    heat_sector,
    heat_sector_detail,
    remainder_decay,
)

D = BoundaryCondition.dirichlet()
N = BoundaryCondition.neumann()

PAIRS = [
    (SectorPoint(1.0, 0.7), SectorPoint(0.5, 2.1)),
    (SectorPoint(0.3, 1.5), SectorPoint(0.4, 1.6)),
    (SectorPoint(2.0, 0.2), SectorPoint(1.0, 0.3)),
]


def _halfplane_green(s, p, p0, sign):
    z, w = p.cartesian(), p0.cartesian()
    d = np.hypot(*(z - w))
    dstar = np.hypot(z[0] - w[0], z[1] + w[1])
    return (k0(math.sqrt(s) * d) + sign * k0(math.sqrt(s) * dstar)) / (2 * math.pi)


@pytest.mark.parametrize("p,p0", PAIRS)
@pytest.mark.parametrize("bc,sign", [(D, -1), (N, 1)])
def test_straight_sector_is_halfplane(p, p0, bc, sign):
    s = 1.7
    assert green_sector(s, Sector(math.pi, bc), p, p0) == pytest.approx(_halfplane_green(s, p, p0, sign), rel=1e-8)


@pytest.mark.parametrize("gamma", [math.pi / 3, math.pi / 2, 1.3 * math.pi])
def test_robin_with_zero_alpha_is_neumann(gamma):
    p, p0 = SectorPoint(0.8, 0.2 * gamma), SectorPoint(0.6, 0.7 * gamma)
    r = green_sector(2.0, Sector(gamma, BoundaryCondition.robin(0.0, 1.0)), p, p0)
    n = green_sector(2.0, Sector(gamma, N), p, p0)
    assert r == pytest.approx(n, rel=1e-12)


@pytest.mark.parametrize("bc", [D, N, BoundaryCondition.robin(0.7)])
def test_green_symmetric(bc):
    sec = Sector(2 * math.pi / 3, bc)
    p, p0 = SectorPoint(0.9, 0.4), SectorPoint(0.5, 1.8)
    assert green_sector(1.1, sec, p, p0) == pytest.approx(green_sector(1.1, sec, p0, p), rel=1e-10)


def test_dirichlet_below_neumann():
    for gamma in (math.pi / 4, math.pi / 2, 1.5 * math.pi):
        p, p0 = SectorPoint(0.9, 0.2 * gamma), SectorPoint(0.7, 0.6 * gamma)
        gd = green_sector(1.0, Sector(gamma, D), p, p0)
        gn = green_sector(1.0, Sector(gamma, N), p, p0)
        assert 0 < gd < gn


def test_dirichlet_vanishes_on_edge():
    sec = Sector(math.pi / 2, D)
    v = green_sector(1.0, sec, SectorPoint(0.8, 0.0), SectorPoint(0.5, 0.6))
    assert abs(v) < 1e-10


@pytest.mark.parametrize("kind,brace", [("dirichlet", brace_dirichlet), ("neumann", brace_neumann)])
def test_brace_matches_angular_green(kind, brace):
    # brace = 2 mu sinh(pi mu) g_mu(phi, phi0) for the separated angular problem
    mu = np.linspace(0.05, 6.0, 40)
    gamma, phi, phi0 = 1.2, 0.3, 0.9
    lhs = brace(mu, gamma, phi, phi0)
    rhs = 2 * mu * np.sinh(math.pi * mu) * angular_green(mu, gamma, phi, phi0, kind)
    assert np.allclose(lhs, rhs, rtol=1e-11)


def test_robin_brace_endpoints():
    mu = np.array([0.3, 1.1, 4.0])
    g, phi, phi0 = 1.0, 0.2, 0.6
    assert np.allclose(brace_robin(mu, g, phi, phi0, 0.0, 1.0), brace_neumann(mu, g, phi, phi0), rtol=1e-14)


def test_remainder_decay_positive_inside():
    assert remainder_decay(math.pi / 2, 0.3, 0.5) > 0
    assert remainder_decay(math.pi, 0.3, 0.5) == pytest.approx(0.8)


def test_sector_errors():
    sec = Sector(math.pi / 2, D)
    with pytest.raises(DiagonalSingularity):
        green_sector(1.0, sec, SectorPoint(0.5, 0.4), SectorPoint(0.5, 0.4))
    with pytest.raises(PointOutsideDomain):
        green_sector(1.0, sec, SectorPoint(0.5, 2.0), SectorPoint(0.5, 0.4))
    with pytest.raises(PointOutsideDomain):
        green_sector(1.0, sec, SectorPoint(0.0, 0.2), SectorPoint(0.5, 0.4))
    with pytest.raises(UnsupportedBC):
        green_sector(1.0, Sector(math.pi / 2, BoundaryCondition.robin(-1.0)),
                     SectorPoint(0.5, 0.2), SectorPoint(0.5, 0.9))


def test_quarter_sector_heat_matches_images():
    p, p0 = SectorPoint(0.5, 0.6), SectorPoint(0.4, 1.0)
    t = 0.1
    r = heat_sector_detail(t, Sector(math.pi / 2, D), p, p0)
    ref = float(heat_quarterplane(t, p.cartesian(), p0.cartesian(), D, D))
    assert r.value == pytest.approx(ref, rel=1e-3)
    assert r.rel_disagreement < 1e-3


def test_straight_sector_heat_neumann():
    p, p0 = SectorPoint(0.5, 0.6), SectorPoint(0.4, 2.0)
    t = 0.1
    ref = float(heat_halfplane(t, p.cartesian(), p0.cartesian(), N))
    assert heat_sector(t, Sector(math.pi, N), p, p0) == pytest.approx(ref, rel=1e-3)
