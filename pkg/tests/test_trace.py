import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drumcorners.eigensolve import eigs_disk, eigs_rectangle
from drumcorners.errors import AngleOutOfRange, NotSimplyConnected, TailTooLarge
from drumcorners.geometry import BoundaryCondition, SmoothDomain, preset
from drumcorners.spectrum import Spectrum
from drumcorners.trace import (
    INCONCLUSIVE,
    POLYGONAL,
    SMOOTH,
    TraceExpansion,
    classify_corners,
    corner_defect,
    corner_defect_raw,
    default_t_grid,
    fit_trace_expansion,
    fit_trace_values,
    heat_trace_from_spectrum,
    polygon_trace_coeffs,
    trace_coeffs,
)

D = BoundaryCondition.dirichlet()
N = BoundaryCondition.neumann()


@given(st.floats(1e-3, 2 * math.pi - 1e-3))
def test_corner_defect_forms_agree(theta):
    assert corner_defect(theta) == pytest.approx(corner_defect_raw(theta), abs=1e-13)


def test_corner_defect_values():
    assert corner_defect(math.pi / 2) == pytest.approx(1 / 48, rel=1e-14)
    assert corner_defect(math.pi / 3) == pytest.approx(1 / 18, rel=1e-14)
    assert corner_defect(math.pi) == 0.0
    with pytest.raises(AngleOutOfRange):
        corner_defect(0.0)
    with pytest.raises(AngleOutOfRange):
        corner_defect(2 * math.pi)


def test_polygon_coefficients():
    sq = polygon_trace_coeffs(preset("square"), D)
    assert sq.c_m1 == pytest.approx(1 / (4 * math.pi))
    assert sq.c_mhalf == pytest.approx(-4 / (8 * math.sqrt(math.pi)))
    assert sq.c_0 == pytest.approx(0.25, abs=1e-15)
    assert polygon_trace_coeffs(preset("square"), N).c_0 == pytest.approx(0.25, abs=1e-15)
    assert polygon_trace_coeffs(preset("equilateral"), D).c_0 == pytest.approx(1 / 3, abs=1e-15)
    r = polygon_trace_coeffs(preset("square"), BoundaryCondition.robin(1.0))
    assert r.c_0 == pytest.approx(0.25 - 2 / math.pi, abs=1e-15)


def test_smooth_coefficients():
    te = trace_coeffs(SmoothDomain.disk(1.0), D)
    assert te.c_0 == pytest.approx(1 / 6)
    assert te.c_mhalf == pytest.approx(-2 * math.pi / (8 * math.sqrt(math.pi)))


def test_rectangle_trace_matches_theta_product():
    # exact trace of the unit square: (sum_n e^{-n^2 pi^2 t})^2
    spec = eigs_rectangle(1.0, 1.0, D, cutoff=4e4)
    t = 2e-3
    n = np.arange(1, 400)
    exact = np.sum(np.exp(-n * n * math.pi**2 * t)) ** 2
    val, tail = heat_trace_from_spectrum(spec, t, area=1.0)
    assert val == pytest.approx(exact, rel=1e-12)
    assert tail < 1e-20


def test_fit_recovers_synthetic_expansion():
    te = TraceExpansion(0.3, -0.2, 0.17)
    t = np.geomspace(1e-4, 1e-2, 20)
    y = te(t) + 0.05 * np.sqrt(t)
    free = fit_trace_values(t, y, None, D)
    assert free.expansion.c_0 == pytest.approx(0.17, abs=1e-9)
    assert free.c_half == pytest.approx(0.05, abs=1e-7)
    pinned = fit_trace_values(t, y, {"area": 0.3 * 4 * math.pi, "perimeter": 0.2 * 8 * math.sqrt(math.pi)}, D)
    assert pinned.expansion.c_0 == pytest.approx(0.17, abs=1e-10)
    assert pinned.free == ("c_0", "c_half")


def test_fit_rejects_small_t():
    spec = eigs_rectangle(1.0, 1.0, D, count=200)
    with pytest.raises(TailTooLarge):
        fit_trace_expansion(spec, np.geomspace(1e-5, 1e-3, 10), {"area": 1.0, "perimeter": 4.0}, D)


def test_default_t_grid_respects_tail():
    spec = eigs_rectangle(1.0, 1.0, D, count=5000)
    grid = default_t_grid(spec, 1.0)
    for t in grid:
        v, tail = heat_trace_from_spectrum(spec, t, area=1.0)
        assert tail <= 1e-6 * v


@pytest.fixture(scope="module")
def square_spec():
    return eigs_rectangle(1.0, 1.0, D, cutoff=2e5)


def test_square_constant_term(square_spec):
    fit = fit_trace_expansion(square_spec, np.geomspace(2e-4, 5e-3, 20), {"area": 1.0, "perimeter": 4.0}, D)
    assert fit.expansion.c_0 == pytest.approx(0.25, abs=1e-3)


def test_classifier(square_spec):
    v = classify_corners(square_spec, {"area": 1.0, "perimeter": 4.0, "euler_char": 1})
    assert v.verdict == POLYGONAL
    assert v.excess == pytest.approx(1 / 12, abs=0.02)
    disk = eigs_disk(1.0, D, count=5000)
    vd = classify_corners(disk, {"area": math.pi, "perimeter": 2 * math.pi, "euler_char": 1})
    assert vd.verdict == SMOOTH


def test_classifier_edge_cases():
    few = Spectrum(np.arange(1.0, 20.0))
    assert classify_corners(few, {"area": 1.0, "perimeter": 4.0}).verdict == INCONCLUSIVE
    with pytest.raises(NotSimplyConnected):
        classify_corners(few, {"area": 1.0, "perimeter": 4.0, "euler_char": 0})
