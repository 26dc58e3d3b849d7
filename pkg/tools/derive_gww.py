"""Derive vertex lists for a seven half-square isospectral pair.

Three involutions of GL(3, 2) act on the 7 points and on the 7 lines of the
Fano plane.  Each orbit graph that is a tree is unfolded with a right
isosceles tile (legs of length 1): tile j is the mirror image of tile i across
the side labelled by the involution that swaps i and j.  A pair is kept when
both unfoldings are embedded (tiles do not overlap) and the two polygons are
not congruent.  The result is written to src/drumcorners/data/gww.json.

Usage: python tools/derive_gww.py
"""
import itertools
import json
from pathlib import Path

import numpy as np
from shapely.geometry import Polygon
from shapely.ops import unary_union

TILE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# side k is opposite vertex k
SIDES = [(1, 2), (0, 2), (0, 1)]


def gl32():
    mats = []
    for bits in itertools.product([0, 1], repeat=9):
        m = np.array(bits).reshape(3, 3)
        if round(np.linalg.det(m)) % 2:
            mats.append(m)
    return mats


def vectors():
    return [np.array(v) for v in itertools.product([0, 1], repeat=3) if any(v)]


def perm(m, vecs):
    out = []
    for v in vecs:
        w = (m @ v) % 2
        out.append(next(i for i, u in enumerate(vecs) if (u == w).all()))
    return out


def is_tree(perms):
    edges = set()
    for p in perms:
        for i, j in enumerate(p):
            if i < j:
                edges.add((i, j))
    if len(edges) != 6:
        return False
    adj = {i: set() for i in range(7)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen, stack = {0}, [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == 7


def reflect(tri, side):
    a, b = tri[SIDES[side][0]], tri[SIDES[side][1]]
    d = (b - a) / np.linalg.norm(b - a)
    out = tri.copy()
    for k in range(3):
        v = tri[k] - a
        out[k] = a + 2 * (v @ d) * d - v
    return out


def unfold(perms, labels):
    tris = {0: TILE.copy()}
    stack = [0]
    while stack:
        i = stack.pop()
        for gen, p in enumerate(perms):
            j = p[i]
            if j != i and j not in tris:
                tris[j] = reflect(tris[i], labels[gen])
                stack.append(j)
    polys = [Polygon(tris[i]) for i in range(7)]
    union = unary_union(polys)
    if abs(union.area - 3.5) > 1e-9 or union.geom_type != "Polygon" or union.interiors:
        return None
    return union.simplify(1e-9)


def canonical(poly):
    coords = np.array(poly.exterior.coords)[:-1]
    return sorted(np.round(np.linalg.norm(coords - coords.mean(0), axis=1), 6))


def main():
    invol = [m for m in gl32() if ((m @ m) % 2 == np.eye(3, dtype=int)).all()
             and not (m == np.eye(3, dtype=int)).all()]
    vecs = vectors()
    for trip in itertools.combinations(range(len(invol)), 3):
        ms = [invol[k] for k in trip]
        pts = [perm(m, vecs) for m in ms]
        lines = [perm(m.T, vecs) for m in ms]
        if not (is_tree(pts) and is_tree(lines)):
            continue
        for labels in itertools.permutations(range(3)):
            p1, p2 = unfold(pts, labels), unfold(lines, labels)
            if p1 is None or p2 is None:
                continue
            if canonical(p1) == canonical(p2):
                continue
            if len(p1.exterior.coords) - 1 != len(p2.exterior.coords) - 1:
                continue
            out = []
            for p in (p1, p2):
                p = p if p.exterior.is_ccw else Polygon(p.exterior.coords[::-1])
                xy = np.array(p.exterior.coords)[:-1]
                xy -= xy.min(axis=0)
                out.append([[float(round(x, 12)), float(round(y, 12))] for x, y in xy])
            return out
    raise SystemExit("no embedded pair found")


if __name__ == "__main__":
    d1, d2 = main()
    target = Path(__file__).resolve().parents[1] / "src" / "drumcorners" / "data" / "gww.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    note = "Seven half-square Dirichlet-isospectral pair (legs of length 1, area 7/2). Regenerate with tools/derive_gww.py."
    target.write_text(
        "{\n \"_comment\": " + json.dumps(note) + ",\n"
        + " \"gww1\": " + json.dumps(d1) + ",\n \"gww2\": " + json.dumps(d2) + "\n}\n"
    )
    print(json.dumps({"gww1": d1, "gww2": d2}))
