"""Domains, boundary conditions and exact-geometric-match scenarios."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from typing import Callable

import numpy as np

from .errors import (
    DegenerateVertex,
    ParseError,
    RobinWithZeroBeta,
    SelfIntersecting,
    ValidationError,
    ZeroArea,
)

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
ROBIN = "robin"

_FLAT_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryCondition:
    """``alpha*u + beta*du/dnu = 0`` with the outward normal.

    Dirichlet and Neumann have their own kinds.  Everything downstream works
    with the Robin coefficient :attr:`c` ``= alpha/beta``; Neumann simply has
    ``c == 0.0`` so it follows the Robin code path with a vanishing correction.
    """

    kind: str
    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in (DIRICHLET, NEUMANN, ROBIN):
            raise ValidationError(f"unknown boundary condition {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == ROBIN:
            if self.beta == 0:
                raise RobinWithZeroBeta("Robin condition needs beta != 0 (beta = 0 is Dirichlet)")
            if not math.isfinite(self.alpha / self.beta):
                raise ValidationError("alpha/beta must be finite")

    @classmethod
    def dirichlet(cls):
        return cls(DIRICHLET)

    @classmethod
    def neumann(cls):
        return cls(NEUMANN)

    @classmethod
    def robin(cls, alpha, beta=1.0):
        return cls(ROBIN, float(alpha), float(beta))

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        """Parse ``"D"``, ``"N"``, ``"dirichlet"``, ``"robin:1,2"`` or ``"R:alpha,beta"``."""
        s = text.strip().lower()
        if s in ("d", DIRICHLET):
            return cls.dirichlet()
        if s in ("n", NEUMANN):
            return cls.neumann()
        if s.startswith(("r:", "robin:")):
            parts = s.split(":", 1)[1].split(",")
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise ParseError(f"bad Robin parameters in {text!r}") from exc
            if len(vals) == 1:
                vals.append(1.0)
            if len(vals) != 2:
                raise ParseError(f"bad Robin parameters in {text!r}")
            return cls.robin(*vals)
        raise ParseError(f"unknown boundary condition {text!r}")

    @property
    def is_dirichlet(self) -> bool:
        return self.kind == DIRICHLET

    @property
    def c(self) -> float:
        """Robin coefficient alpha/beta (0 for Neumann, inf for Dirichlet)."""
        if self.kind == DIRICHLET:
            return math.inf
        if self.kind == NEUMANN:
            return 0.0
        return self.alpha / self.beta

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == ROBIN:
            d.update(alpha=self.alpha, beta=self.beta)
        return d


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-14 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return min(a[0], b[0]) - 1e-14 <= c[0] <= max(a[0], b[0]) + 1e-14 and \
            min(a[1], b[1]) - 1e-14 <= c[1] <= max(a[1], b[1]) + 1e-14

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    if o4 == 0 and on_seg(q1, q2, p2):
        return True
    return False


def polygon_derived(vertices) -> dict:
    """Area, perimeter and interior angles of a simple polygon.

    Vertices may be given in either orientation; the result always refers to
    the counterclockwise ordering.

    Returns
    -------
    dict with keys ``area``, ``perimeter``, ``angles`` (ndarray, interior
    angles in (0, 2*pi) in ccw vertex order), ``n`` and ``vertices``
    (the ccw-ordered vertex array).
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ValidationError("need at least 3 vertices given as (x, y) pairs")
    n = len(v)
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    if np.any(lengths < 1e-14):
        raise DegenerateVertex("repeated consecutive vertex")
    signed = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    if abs(signed) < 1e-14:
        raise ZeroArea("polygon has zero area")
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                raise SelfIntersecting(f"edges {i} and {j} intersect")
    if signed < 0:
        v = v[::-1].copy()
        edges = np.roll(v, -1, axis=0) - v
    e_in = np.roll(edges, 1, axis=0)
    e_out = edges
    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    dot = np.einsum("ij,ij->i", e_in, e_out)
    turn = np.arctan2(cross, dot)
    angles = math.pi - turn
    if np.any(angles <= 1e-12) or np.any(angles >= 2 * math.pi - 1e-12):
        raise DegenerateVertex("spike vertex (interior angle 0 or 2*pi)")
    return {
        "area": float(abs(signed)),
        "perimeter": float(lengths.sum()),
        "angles": angles,
        "n": n,
        "vertices": v,
    }


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple polygon, stored counterclockwise.

    Vertices with interior angle pi are rejected unless ``allow_flat`` is set;
    flagged flat vertices carry zero corner defect.
    """

    vertices: np.ndarray
    allow_flat: bool = False
    name: str = ""
    area: float = field(init=False)
    perimeter: float = field(init=False)
    angles: np.ndarray = field(init=False)

    def __post_init__(self):
        d = polygon_derived(self.vertices)
        vert = d["vertices"]
        vert.setflags(write=False)
        angles = d["angles"]
        angles.setflags(write=False)
        flat = np.abs(angles - math.pi) < _FLAT_TOL
        if flat.any() and not self.allow_flat:
            raise DegenerateVertex("flat vertex (angle pi); pass allow_flat=True to keep it")
        object.__setattr__(self, "vertices", vert)
        object.__setattr__(self, "area", d["area"])
        object.__setattr__(self, "perimeter", d["perimeter"])
        object.__setattr__(self, "angles", angles)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def flat(self) -> np.ndarray:
        return np.abs(self.angles - math.pi) < _FLAT_TOL

    @property
    def euler_char(self) -> int:
        return 1

    @property
    def edges(self):
        v = self.vertices
        return list(zip(v, np.roll(v, -1, axis=0)))

    def contains(self, p, tol=1e-12) -> bool:
        """Closed-set membership (boundary counts as inside)."""
        x, y = float(p[0]), float(p[1])
        inside = False
        v = self.vertices
        n = len(v)
        for i in range(n):
            (x1, y1), (x2, y2) = v[i], v[(i + 1) % n]
            ex, ey = x2 - x1, y2 - y1
            L2 = ex * ex + ey * ey
            s = min(1.0, max(0.0, ((x - x1) * ex + (y - y1) * ey) / L2))
            if math.hypot(x - x1 - s * ex, y - y1 - s * ey) <= tol:
                return True
            if (y1 > y) != (y2 > y):
                xc = x1 + (y - y1) * ex / ey
                if x < xc:
                    inside = not inside
        return inside

    def to_dict(self):
        return {"type": "polygon", "vertices": self.vertices.tolist()}


@dataclass(frozen=True, eq=False)
class SmoothDomain:
    """Disk, ellipse, or a custom closed curve ``boundary(tau)``, tau in [0, 2*pi).

    A custom boundary must be a smooth, counterclockwise, non-self-intersecting
    2*pi-periodic map returning an ``(2, m)`` array for an array of parameters.
    """

    kind: str
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    boundary: Callable | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse", "custom"):
            raise ValidationError(f"unknown smooth domain kind {self.kind!r}")
        if self.kind == "disk" and not self.radius > 0:
            raise ValidationError("disk radius must be positive")
        if self.kind == "ellipse" and not (self.a > 0 and self.b > 0):
            raise ValidationError("ellipse semi-axes must be positive")
        if self.kind == "custom" and self.boundary is None:
            raise ValidationError("custom domain needs a boundary parameterisation")
        if not (self.area > 0 and self.perimeter > 0):
            raise ValidationError("smooth domain must have positive area and perimeter")

    @classmethod
    def disk(cls, radius=1.0):
        return cls("disk", radius=float(radius))

    @classmethod
    def ellipse(cls, a, b):
        return cls("ellipse", a=float(a), b=float(b))

    def _sampled(self, m=4096):
        tau = 2 * math.pi * np.arange(m) / m
        xy = np.asarray(self.boundary(tau), dtype=float)
        k = np.fft.fftfreq(m, d=1.0 / m)
        dxy = np.real(np.fft.ifft(1j * k * np.fft.fft(xy, axis=1), axis=1))
        return xy, dxy, 2 * math.pi / m

    @cached_property
    def area(self) -> float:
        if self.kind == "disk":
            return math.pi * self.radius ** 2
        if self.kind == "ellipse":
            return math.pi * self.a * self.b
        xy, dxy, h = self._sampled()
        return float(0.5 * h * np.sum(xy[0] * dxy[1] - xy[1] * dxy[0]))

    @cached_property
    def perimeter(self) -> float:
        if self.kind == "disk":
            return 2 * math.pi * self.radius
        if self.kind == "ellipse":
            from scipy.special import ellipe

            a, b = max(self.a, self.b), min(self.a, self.b)
            return float(4 * a * ellipe(1 - (b / a) ** 2))
        xy, dxy, h = self._sampled()
        return float(h * np.sum(np.hypot(dxy[0], dxy[1])))

    @property
    def euler_char(self) -> int:
        return 1

    @property
    def n_vertices(self) -> int:
        return 0

    def to_dict(self):
        if self.kind == "disk":
            return {"type": "smooth", "kind": "disk", "radius": self.radius}
        if self.kind == "ellipse":
            return {"type": "smooth", "kind": "ellipse", "a": self.a, "b": self.b}
        return {"type": "smooth", "kind": "custom", "area": self.area, "perimeter": self.perimeter}


@dataclass(frozen=True)
class Sector:
    """Infinite sector ``{0 <= phi <= gamma}`` with one condition on both edges."""

    gamma: float
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.dirichlet)

    def __post_init__(self):
        if not 0 < self.gamma < 2 * math.pi:
            raise ValidationError("sector opening angle must lie in (0, 2*pi)")

    def to_dict(self):
        return {"type": "sector", "gamma": self.gamma, "bc": self.bc.to_dict()}


@dataclass(frozen=True)
class HalfPlane:
    """``{y >= 0}``."""

    bc: BoundaryCondition = field(default_factory=BoundaryCondition.dirichlet)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned ``[0, a] x [0, b]``."""

    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            from .errors import InvalidDimensions

            raise InvalidDimensions("rectangle sides must be positive")

    @property
    def area(self):
        return self.a * self.b

    @property
    def perimeter(self):
        return 2 * (self.a + self.b)

    @property
    def polygon(self) -> Polygon:
        return Polygon(np.array([[0, 0], [self.a, 0], [self.a, self.b], [0, self.b]], float))


# ---------------------------------------------------------------- scenarios

MODEL_FREE = "free"
MODEL_HALFPLANE = "halfplane"
MODEL_SECTOR = "sector"

_EDGES = ("bottom", "right", "top", "left")
_CORNERS = ("ll", "lr", "ur", "ul")


@dataclass(frozen=True)
class Model:
    """Model domain placed against a rectangle.

    ``anchor`` names the rectangle edge the half-plane boundary lies on, or the
    corner at which the sector apex sits.
    """

    kind: str
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.dirichlet)
    gamma: float = math.pi / 2
    anchor: str = ""

    def __post_init__(self):
        if self.kind not in (MODEL_FREE, MODEL_HALFPLANE, MODEL_SECTOR):
            raise ValidationError(f"unknown model {self.kind!r}")
        anchor = self.anchor
        if self.kind == MODEL_HALFPLANE:
            anchor = anchor or "bottom"
            if anchor not in _EDGES:
                raise ValidationError(f"half-plane anchor must be one of {_EDGES}")
        elif self.kind == MODEL_SECTOR:
            anchor = anchor or "ll"
            if anchor not in _CORNERS:
                raise ValidationError(f"sector anchor must be one of {_CORNERS}")
        object.__setattr__(self, "anchor", anchor)

    def factor_kinds(self):
        """Per-axis model factors: ``'line'``, ``'lo'`` (x >= 0) or ``'hi'`` (x <= side)."""
        if self.kind == MODEL_FREE:
            return "line", "line"
        if self.kind == MODEL_HALFPLANE:
            return {"bottom": ("line", "lo"), "top": ("line", "hi"),
                    "left": ("lo", "line"), "right": ("hi", "line")}[self.anchor]
        return {"ll": ("lo", "lo"), "lr": ("hi", "lo"),
                "ur": ("hi", "hi"), "ul": ("lo", "hi")}[self.anchor]


@dataclass(frozen=True)
class LocalityScenario:
    """Rectangle ``big_domain`` against a model matching it exactly near ``omega0``.

    ``omega0 = (x0, x1, y0, y1)``.  ``alpha_sep`` is the distance from omega0
    to the part of the model domain that does not match the rectangle; it is
    computed, and a supplied value must not exceed it.  ``strict=False`` keeps
    mismatched configurations (used for negative controls).
    """

    big_domain: Rectangle
    model: Model
    omega0: tuple
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.dirichlet)
    alpha_sep: float | None = None
    strict: bool = True

    def __post_init__(self):
        x0, x1, y0, y1 = (float(v) for v in self.omega0)
        a, b = self.big_domain.a, self.big_domain.b
        if not (0 <= x0 <= x1 <= a and 0 <= y0 <= y1 <= b):
            raise ValidationError("omega0 must lie inside the big domain")
        object.__setattr__(self, "omega0", (x0, x1, y0, y1))
        if self.model.kind != MODEL_FREE and self.model.bc != self.bc:
            raise ValidationError("model boundary condition must equal the domain's")
        if self.model.kind == MODEL_SECTOR and abs(self.model.gamma - math.pi / 2) > 1e-12:
            raise ValidationError("a rectangle corner only matches a sector of opening pi/2")
        sep = self.separation()
        if self.alpha_sep is None:
            object.__setattr__(self, "alpha_sep", sep)
        elif self.alpha_sep > sep + 1e-12:
            raise ValidationError(f"alpha_sep={self.alpha_sep} exceeds the geometric separation {sep}")
        if self.strict and not self.alpha_sep > 0:
            raise ValidationError("model does not match the domain on a neighbourhood of omega0")

    def separation(self) -> float:
        """dist(omega0, S minus Omega) for the rectangle/model pair."""
        x0, x1, y0, y1 = self.omega0
        a, b = self.big_domain.a, self.big_domain.b
        # distance to each rectangle edge
        dist = {"left": x0, "right": a - x1, "bottom": y0, "top": b - y1}
        kx, ky = self.model.factor_kinds()
        matched = set()
        if kx == "lo":
            matched.add("left")
        if kx == "hi":
            matched.add("right")
        if ky == "lo":
            matched.add("bottom")
        if ky == "hi":
            matched.add("top")
        return float(min(d for e, d in dist.items() if e not in matched))


# ---------------------------------------------------------------- loading

@lru_cache(maxsize=None)
def _gww_data():
    text = resources.files("drumcorners").joinpath("data/gww.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def domain_schema():
    text = resources.files("drumcorners").joinpath("data/domain.schema.json").read_text()
    return json.loads(text)


def preset(name: str, **params):
    """Named domains: square, rectangle, disk, ellipse, equilateral, gww1, gww2."""
    name = name.lower()
    if name == "square":
        side = float(params.get("side", 1.0))
        return Polygon(np.array([[0, 0], [side, 0], [side, side], [0, side]], float), name="square")
    if name == "rectangle":
        a, b = float(params.get("a", 1.0)), float(params.get("b", 1.0))
        return Polygon(np.array([[0, 0], [a, 0], [a, b], [0, b]], float), name="rectangle")
    if name == "disk":
        return SmoothDomain("disk", radius=float(params.get("radius", 1.0)), name="disk")
    if name == "ellipse":
        return SmoothDomain("ellipse", a=float(params["a"]), b=float(params["b"]), name="ellipse")
    if name == "equilateral":
        s = float(params.get("side", 1.0))
        return Polygon(np.array([[0, 0], [s, 0], [s / 2, s * math.sqrt(3) / 2]]), name="equilateral")
    if name in ("gww1", "gww2"):
        return Polygon(np.array(_gww_data()[name], float), name=name)
    raise ValidationError(f"unknown preset {name!r}")


PRESETS = ("square", "rectangle", "disk", "ellipse", "equilateral", "gww1", "gww2")


def domain_from_dict(d: dict):
    import jsonschema

    try:
        jsonschema.validate(d, domain_schema())
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"domain spec: {exc.message}") from exc
    kind = d["type"]
    if kind == "polygon":
        return Polygon(np.asarray(d["vertices"], float), allow_flat=bool(d.get("allow_flat", False)))
    if kind == "smooth":
        if d["kind"] == "disk":
            return SmoothDomain.disk(d.get("radius", 1.0))
        return SmoothDomain.ellipse(d["a"], d["b"])
    if kind == "sector":
        bc = bc_from_dict(d.get("bc", {"kind": "dirichlet"}))
        return Sector(float(d["gamma"]), bc)
    if kind == "rectangle":
        return preset("rectangle", a=d["a"], b=d["b"])
    params = {k: v for k, v in d.items() if k not in ("type", "name")}
    return preset(d["name"], **params)


def bc_from_dict(d) -> BoundaryCondition:
    if isinstance(d, str):
        return BoundaryCondition.parse(d)
    kind = d.get("kind", "")
    if kind == ROBIN:
        return BoundaryCondition.robin(d["alpha"], d.get("beta", 1.0))
    return BoundaryCondition(kind)


def load_domain_spec(text: str):
    """Parse a domain-spec JSON document into a domain object."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ParseError("domain spec must be a JSON object")
    return domain_from_dict(d)


def resolve_domain(arg: str):
    """CLI helper: a preset name, a JSON literal, or a path to a JSON file."""
    s = arg.strip()
    if s.startswith("{"):
        return load_domain_spec(s)
    if s.lower() in PRESETS:
        return preset(s)
    from pathlib import Path

    p = Path(s)
    if not p.exists():
        raise ParseError(f"{arg!r} is neither a preset nor a readable file")
    return load_domain_spec(p.read_text())
