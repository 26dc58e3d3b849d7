"""P1 finite elements for the Laplace eigenproblem on straight-edged polygons."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .. import _accel
from .._accel import njit
from ..errors import EigenIterationStall, MeshFailure
from ..geometry import DIRICHLET, BoundaryCondition, Polygon
from ..spectrum import FEM, Spectrum

DENSE_LIMIT = 3000


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3) counterclockwise
    boundary_edges: np.ndarray  # (nb, 2)
    h: float  # largest element diameter

    @property
    def boundary_nodes(self):
        return np.unique(self.boundary_edges)

    @property
    def edge_lengths(self):
        v = self.vertices
        e = self.boundary_edges
        return np.hypot(*(v[e[:, 1]] - v[e[:, 0]]).T)

    @property
    def areas(self):
        return _tri_areas(self.vertices, self.triangles)

    def to_dict(self):
        return {"vertices": self.vertices.tolist(), "triangles": self.triangles.tolist(),
                "boundary_edges": self.boundary_edges.tolist(), "h": self.h}


def _tri_areas(v, t):
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))


def _diameters(v, t):
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    return np.max(np.stack([np.hypot(*(p1 - p0).T), np.hypot(*(p2 - p1).T), np.hypot(*(p0 - p2).T)]), axis=0)


def _boundary_edges(tris):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, idx, counts = np.unique(key, axis=0, return_index=True, return_counts=True)
    return e[idx[counts == 1]]


def ear_clip(vertices) -> np.ndarray:
    """Triangulate a simple counterclockwise polygon by ear clipping."""
    v = np.asarray(vertices, float)
    idx = list(range(len(v)))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(v) ** 2:
            raise MeshFailure("ear clipping made no progress")
        best = None
        m = len(idx)
        for k in range(m):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % m]
            a, b, c = v[i0], v[i1], v[i2]
            if cross(a, b, c) <= 1e-14:
                continue  # reflex or flat
            inside = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = v[j]
                if cross(a, b, p) >= -1e-14 and cross(b, c, p) >= -1e-14 and cross(c, a, p) >= -1e-14:
                    inside = True
                    break
            if inside:
                continue
            # prefer the fattest ear: largest minimum angle
            q = _min_angle(a, b, c)
            if best is None or q > best[0]:
                best = (q, k)
        if best is None:
            raise MeshFailure("no ear found; is the polygon simple?")
        k = best[1]
        tris.append((idx[k - 1], idx[k], idx[(k + 1) % len(idx)]))
        del idx[k]
    tris.append(tuple(idx))
    return np.array(tris, dtype=np.int64)


def _min_angle(a, b, c):
    def ang(p, q, r):
        u, w = q - p, r - p
        return math.acos(max(-1.0, min(1.0, float(u @ w) / (np.hypot(*u) * np.hypot(*w)))))
    return min(ang(a, b, c), ang(b, c, a), ang(c, a, b))


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement: every triangle splits into four similar ones."""
    v, t = mesh.vertices, mesh.triangles
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    mids = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    nv = len(v)
    nt = len(t)
    m01 = nv + inv[:nt]
    m12 = nv + inv[nt:2 * nt]
    m20 = nv + inv[2 * nt:]
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    new = np.concatenate([
        np.stack([a, m01, m20], 1),
        np.stack([m01, b, m12], 1),
        np.stack([m20, m12, c], 1),
        np.stack([m01, m12, m20], 1),
    ])
    verts = np.vstack([v, mids])
    return Mesh(verts, new, _boundary_edges(new), float(np.max(_diameters(verts, new))))


def mesh_polygon(poly: Polygon, h: float) -> Mesh:
    """Corner-exact mesh: triangulate the polygon, then refine until diameter <= h."""
    v = np.asarray(poly.vertices, float)
    t = ear_clip(v)
    if np.any(_tri_areas(v, t) <= 0):
        raise MeshFailure("triangulation produced non-positive areas")
    mesh = Mesh(v, t, _boundary_edges(t), float(np.max(_diameters(v, t))))
    while mesh.h > h * (1 + 1e-12):
        mesh = refine(mesh)
    return mesh


# ------------------------------------------------------------------ assembly


@njit
def _local_numba(v, t):
    nt = t.shape[0]
    rows = np.empty(9 * nt, np.int64)
    cols = np.empty(9 * nt, np.int64)
    kv = np.empty(9 * nt)
    mv = np.empty(9 * nt)
    b = np.empty(3)
    c = np.empty(3)
    for e in range(nt):
        i0, i1, i2 = t[e, 0], t[e, 1], t[e, 2]
        x0, y0 = v[i0, 0], v[i0, 1]
        x1, y1 = v[i1, 0], v[i1, 1]
        x2, y2 = v[i2, 0], v[i2, 1]
        area = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
        b[0], b[1], b[2] = y1 - y2, y2 - y0, y0 - y1
        c[0], c[1], c[2] = x2 - x1, x0 - x2, x1 - x0
        for i in range(3):
            for j in range(3):
                k = 9 * e + 3 * i + j
                rows[k] = t[e, i]
                cols[k] = t[e, j]
                kv[k] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area)
                mv[k] = area / 12.0 * (2.0 if i == j else 1.0)
    return rows, cols, kv, mv


def _local_numpy(v, t):
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    area = 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    b = np.stack([p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1], p0[:, 1] - p1[:, 1]], 1)
    c = np.stack([p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0], p1[:, 0] - p0[:, 0]], 1)
    K = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4 * area[:, None, None])
    M = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    return rows, cols, K.ravel(), M.ravel()


_local = _accel.pick(_local_numba, _local_numpy)


@dataclass
class GeneralizedEigenProblem:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    boundary_mass: sp.csr_matrix

    def operator(self, c: float):
        return (self.stiffness + c * self.boundary_mass) if c else self.stiffness


def assemble(mesh: Mesh, impl=None) -> GeneralizedEigenProblem:
    fn = {"numba": _local_numba, "numpy": _local_numpy}.get(impl, _local)
    rows, cols, kv, mv = fn(mesh.vertices, mesh.triangles)
    n = len(mesh.vertices)
    K = sp.csr_matrix((kv, (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((mv, (rows, cols)), shape=(n, n))
    e = mesh.boundary_edges
    L = mesh.edge_lengths
    br = np.concatenate([e[:, 0], e[:, 1], e[:, 0], e[:, 1]])
    bcl = np.concatenate([e[:, 0], e[:, 1], e[:, 1], e[:, 0]])
    bv = np.concatenate([L / 3, L / 3, L / 6, L / 6])
    B = sp.csr_matrix((bv, (br, bcl)), shape=(n, n))
    return GeneralizedEigenProblem(K, M, B)


def _solve(A, M, count, dense_limit=DENSE_LIMIT):
    n = A.shape[0]
    if count is None or n <= dense_limit:
        if n > max(dense_limit, 8000):
            raise EigenIterationStall(f"full spectrum of a {n}-dof problem is too large for a dense solve")
        w = scipy.linalg.eigh(A.toarray(), M.toarray(), eigvals_only=True)
        return w if count is None else w[:count]
    k = min(count, n - 2)
    try:
        w = eigsh(A.tocsc(), k=k, M=M.tocsc(), sigma=-1.0, which="LM", return_eigenvectors=False,
                  tol=1e-12, maxiter=20 * n)
    except ArpackNoConvergence as exc:
        raise EigenIterationStall(f"shift-invert Lanczos did not converge: {exc}") from exc
    return np.sort(w)


def fem_eigenvalues(mesh: Mesh, bc: BoundaryCondition, count=None, impl=None) -> np.ndarray:
    prob = assemble(mesh, impl)
    if bc.kind == DIRICHLET:
        free = np.setdiff1d(np.arange(len(mesh.vertices)), mesh.boundary_nodes)
        A = prob.stiffness[free][:, free]
        M = prob.mass[free][:, free]
    else:
        A = prob.operator(bc.c)
        M = prob.mass
    return _solve(A, M, count)


@dataclass
class FemResult:
    spectrum: Spectrum
    h_used: float
    refinement_ratio_report: dict = field(default_factory=dict)
    mesh: Mesh | None = field(default=None, repr=False)


def eigs_fem(poly: Polygon, bc: BoundaryCondition, h: float, count: int | None = 10,
             report: bool = False, impl=None) -> FemResult:
    """Smallest ``count`` eigenvalues (all when ``count`` is None) of the P1 discretisation.

    With ``report=True`` the problem is also solved on the once-refined mesh
    and the report lists both eigenvalue sets and their ratios.
    """
    if not h > 0:
        raise MeshFailure("mesh size must be positive")
    mesh = mesh_polygon(poly, h)
    ev = fem_eigenvalues(mesh, bc, count, impl)
    rep = {}
    if report:
        fine = refine(mesh)
        ev2 = fem_eigenvalues(fine, bc, len(ev), impl)
        rep = {"h": mesh.h, "h_half": fine.h, "coarse": ev.tolist(), "fine": ev2.tolist(),
               "ratio": (ev / np.where(ev2 == 0, 1.0, ev2)).tolist()}
    # FEM spectra are not certified complete; cutoff = largest computed eigenvalue
    spec = Spectrum(ev, None, FEM, {"h": mesh.h, "n_dof": int(len(mesh.vertices)), "bc": bc.to_dict()})
    return FemResult(spec, mesh.h, rep, mesh)


def convergence_ratios(poly: Polygon, bc: BoundaryCondition, h: float, count=5, levels=3):
    """(lambda_h - lambda_{h/2}) / (lambda_{h/2} - lambda_{h/4}) for the first ``count`` eigenvalues."""
    mesh = mesh_polygon(poly, h)
    evs = []
    for _ in range(levels):
        evs.append(fem_eigenvalues(mesh, bc, count))
        mesh = refine(mesh)
    evs = np.array(evs)
    d = np.diff(evs, axis=0)
    return evs, -d[0] / -d[1]


def weyl_sanity(spec: Spectrum, area: float, perimeter: float, bc: BoundaryCondition | None = None,
                tol=0.10) -> dict:
    """Compare N(Lambda/2) with ``area L/4pi -+ perimeter sqrt(L)/4pi``."""
    bc = bc or BoundaryCondition.dirichlet()
    if len(spec) < 10:
        return {"ok": False, "reason": "insufficient data", "count": len(spec)}
    lam = spec.cutoff / 2
    sign = -1.0 if bc.kind == DIRICHLET else 1.0
    weyl = area * lam / (4 * math.pi) + sign * perimeter * math.sqrt(lam) / (4 * math.pi)
    n = spec.counting(lam)
    rel = abs(n - weyl) / weyl
    return {"ok": bool(rel <= tol), "lambda": lam, "count": n, "weyl": weyl, "rel_error": rel}
