import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drumcorners.errors import (
    DegenerateVertex,
    ParseError,
    SelfIntersecting,
    ValidationError,
    ZeroArea,
)
from drumcorners.geometry import (
    BoundaryCondition,
    LocalityScenario,
    Model,
    Polygon,
    Rectangle,
    Sector,
    SmoothDomain,
    load_domain_spec,
    polygon_derived,
    preset,
    resolve_domain,
)


def test_square_derived_quantities():
    d = polygon_derived([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert d["area"] == pytest.approx(1.0)
    assert d["perimeter"] == pytest.approx(4.0)
    assert np.allclose(d["angles"], math.pi / 2)


def test_clockwise_input_is_reoriented():
    cw = [[0, 0], [0, 1], [1, 1], [1, 0]]
    p = Polygon(np.array(cw, float))
    assert p.area == pytest.approx(1.0)
    # ccw: signed area positive
    v = p.vertices
    signed = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    assert signed > 0


def test_l_shape_has_one_reflex_angle():
    p = Polygon(np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], float))
    assert p.area == pytest.approx(3.0)
    reflex = p.angles[p.angles > math.pi]
    assert len(reflex) == 1 and reflex[0] == pytest.approx(3 * math.pi / 2)


def test_bowtie_rejected():
    with pytest.raises(SelfIntersecting):
        polygon_derived([[0, 0], [2, 2], [2, 0], [0, 1]])


def test_zero_area_and_repeated_vertex():
    with pytest.raises(ZeroArea):
        polygon_derived([[0, 0], [1, 0], [2, 0]])
    with pytest.raises(DegenerateVertex):
        polygon_derived([[0, 0], [0, 0], [1, 0], [0, 1]])


def test_flat_vertex_needs_flag():
    v = np.array([[0, 0], [0.5, 0], [1, 0], [1, 1], [0, 1]], float)
    with pytest.raises(DegenerateVertex):
        Polygon(v)
    p = Polygon(v, allow_flat=True)
    assert p.flat.sum() == 1


@given(st.integers(3, 12), st.floats(0.2, 5.0))
def test_regular_polygon_angle_sum(n, radius):
    k = np.arange(n)
    v = radius * np.column_stack([np.cos(2 * np.pi * k / n), np.sin(2 * np.pi * k / n)])
    d = polygon_derived(v)
    assert np.sum(d["angles"]) == pytest.approx((n - 2) * math.pi, rel=1e-12)
    assert d["area"] == pytest.approx(0.5 * n * radius**2 * math.sin(2 * math.pi / n), rel=1e-12)


def test_gww_pair_shares_area_and_perimeter():
    a, b = preset("gww1"), preset("gww2")
    assert a.area == pytest.approx(b.area, rel=1e-12)
    assert a.perimeter == pytest.approx(b.perimeter, rel=1e-12)
    # same multiset of angles, different order: not congruent by angle sequence
    assert np.allclose(np.sort(a.angles), np.sort(b.angles))


def test_smooth_domains():
    d = SmoothDomain.disk(2.0)
    assert d.area == pytest.approx(4 * math.pi)
    assert d.perimeter == pytest.approx(4 * math.pi)
    e = SmoothDomain.ellipse(2.0, 1.0)
    # Ramanujan's second approximation is accurate to ~1e-5 relative at this eccentricity
    h = (2 - 1) ** 2 / (2 + 1) ** 2
    ram = math.pi * 3 * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))
    assert e.perimeter == pytest.approx(ram, rel=1e-6)


def test_custom_curve_matches_disk():
    c = SmoothDomain("custom", boundary=lambda tau: np.vstack([np.cos(tau), np.sin(tau)]))
    assert c.area == pytest.approx(math.pi, rel=1e-12)
    assert c.perimeter == pytest.approx(2 * math.pi, rel=1e-12)


def test_contains_closed():
    sq = preset("square")
    assert sq.contains((0.5, 0.5))
    assert sq.contains((1.0, 0.3))
    assert not sq.contains((1.2, 0.3))


@pytest.mark.parametrize(
    "text,kind,c",
    [("D", "dirichlet", math.inf), ("N", "neumann", 0.0), ("robin:2,1", "robin", 2.0), ("R:1,4", "robin", 0.25)],
)
def test_bc_parse(text, kind, c):
    bc = BoundaryCondition.parse(text)
    assert bc.kind == kind
    if kind == "robin":
        assert bc.c == pytest.approx(c)


def test_bc_parse_garbage():
    with pytest.raises((ParseError, ValidationError)):
        BoundaryCondition.parse("robin:x")


def test_domain_spec_roundtrip():
    sq = preset("square")
    again = load_domain_spec(json.dumps(sq.to_dict()))
    assert isinstance(again, Polygon)
    assert np.allclose(again.vertices, sq.vertices)


def test_domain_spec_errors(tmp_path):
    with pytest.raises(ParseError):
        load_domain_spec("{not json")
    with pytest.raises(ValidationError):
        load_domain_spec('{"type": "polygon"}')
    with pytest.raises(ParseError):
        resolve_domain(str(tmp_path / "missing.json"))
    f = tmp_path / "tri.json"
    f.write_text(json.dumps({"type": "polygon", "vertices": [[0, 0], [1, 0], [0, 1]]}))
    assert resolve_domain(str(f)).area == pytest.approx(0.5)


def test_sector_spec():
    s = load_domain_spec('{"type": "sector", "gamma": 1.5707963267948966, "bc": "N"}')
    assert isinstance(s, Sector) and s.bc.kind == "neumann"


def test_locality_scenario_separation():
    r = Rectangle(1.0, 1.0)
    sc = LocalityScenario(r, Model("sector", BoundaryCondition.dirichlet(), math.pi / 2, "ll"),
                          (0.0, 0.3, 0.0, 0.3))
    assert sc.alpha_sep == pytest.approx(0.7)
    with pytest.raises(ValidationError):
        # the half-plane along the bottom does not match the left edge the patch touches
        LocalityScenario(r, Model("halfplane", BoundaryCondition.dirichlet(), anchor="bottom"),
                         (0.0, 0.3, 0.0, 0.3))
    with pytest.raises(ValidationError):
        LocalityScenario(r, Model("halfplane", BoundaryCondition.neumann()), (0.2, 0.4, 0.0, 0.3),
                         BoundaryCondition.dirichlet())
