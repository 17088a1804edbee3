"""Planar convex hull of lattice points with exact integer predicates.

Monotone chain over lexicographically sorted points. All orientation tests
are 64-bit integer cross products, exact for |coordinate| <= 10^9, so the
hull is reproducible and immune to floating-point ties.  The hull is strict:
collinear boundary points are not vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

# 64-bit cross products are exact up to this magnitude
COORD_LIMIT = 10 ** 9


@njit(cache=True)
def _chain(pts):
    """Monotone chain on lexicographically sorted, deduplicated points.

    Returns vertex indices in counter-clockwise order starting from the
    lexicographic minimum; the <= pop keeps the hull strict.
    """
    n = pts.shape[0]
    idx = np.empty(2 * n, dtype=np.int64)
    k = 0
    for i in range(n):  # lower hull
        while k >= 2:
            ox, oy = pts[idx[k - 2], 0], pts[idx[k - 2], 1]
            ax, ay = pts[idx[k - 1], 0], pts[idx[k - 1], 1]
            if (ax - ox) * (pts[i, 1] - oy) - (ay - oy) * (pts[i, 0] - ox) <= 0:
                k -= 1
            else:
                break
        idx[k] = i
        k += 1
    lower = k
    for i in range(n - 2, -1, -1):  # upper hull
        while k > lower:
            ox, oy = pts[idx[k - 2], 0], pts[idx[k - 2], 1]
            ax, ay = pts[idx[k - 1], 0], pts[idx[k - 1], 1]
            if (ax - ox) * (pts[i, 1] - oy) - (ay - oy) * (pts[i, 0] - ox) <= 0:
                k -= 1
            else:
                break
        idx[k] = i
        k += 1
    return idx[:k - 1]  # last point repeats the first


@njit(cache=True)
def _contains_all(verts, pts):
    """True iff every point is inside or on the hull polygon (exact)."""
    h = verts.shape[0]
    if h == 1:
        for i in range(pts.shape[0]):
            if pts[i, 0] != verts[0, 0] or pts[i, 1] != verts[0, 1]:
                return False
        return True
    for i in range(pts.shape[0]):
        x, y = pts[i, 0], pts[i, 1]
        if h == 2:
            ax, ay = verts[0, 0], verts[0, 1]
            bx, by = verts[1, 0], verts[1, 1]
            if (bx - ax) * (y - ay) - (by - ay) * (x - ax) != 0:
                return False
            t = (x - ax) * (bx - ax) + (y - ay) * (by - ay)
            if t < 0 or t > (bx - ax) ** 2 + (by - ay) ** 2:
                return False
            continue
        for j in range(h):
            ax, ay = verts[j, 0], verts[j, 1]
            bx, by = verts[(j + 1) % h, 0], verts[(j + 1) % h, 1]
            if (bx - ax) * (y - ay) - (by - ay) * (x - ax) < 0:
                return False
    return True


@dataclass(frozen=True)
class Hull2D:
    """Strict convex hull: CCW vertices from the lexicographic minimum.

    perimeter is the closed boundary length (a 2-point hull counts its
    segment twice, a single point has perimeter 0); diameter is the max
    pairwise vertex distance, with the exact squared value kept in
    diameter_sq.
    """

    vertices: np.ndarray
    perimeter: float
    diameter: float
    diameter_sq: int

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def contains_all(self, points: np.ndarray) -> bool:
        return bool(_contains_all(self.vertices, _as_lattice(points)))


def _as_lattice(points) -> np.ndarray:
    pts = np.asarray(points)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise ValueError("need a nonempty (m, 2) array of points")
    if not np.issubdtype(pts.dtype, np.integer):
        r = np.rint(pts)
        if not np.all(pts == r):
            raise ValueError("hull points must have integer coordinates")
        pts = r
    pts = pts.astype(np.int64)
    if np.any(np.abs(pts) > COORD_LIMIT):
        raise ValueError(f"|coordinate| > {COORD_LIMIT}: exact 64-bit "
                         "orientation tests would overflow")
    return pts


def convex_hull_2d(points) -> Hull2D:
    """Strict convex hull of integer points (monotone chain, exact).

    Vertices come back counter-clockwise starting from the smallest point
    in (x, y) order, with no three collinear. Duplicates and collinear
    boundary points are dropped; fully degenerate inputs yield a 1- or
    2-vertex hull.
    """
    pts = _as_lattice(points)
    # lexicographic (x, then y) sort + dedup
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    pts = np.ascontiguousarray(pts[keep])
    if len(pts) == 1:
        v = pts[:1].copy()
        return Hull2D(vertices=v, perimeter=0.0, diameter=0.0, diameter_sq=0)
    verts = pts[_chain(pts)].copy()
    diffs = np.roll(verts, -1, axis=0) - verts
    edge_sq = diffs[:, 0] ** 2 + diffs[:, 1] ** 2
    perimeter = float(np.sum(np.sqrt(edge_sq.astype(np.float64))))
    dmax = 0
    for i in range(len(verts)):
        dd = verts[i + 1:] - verts[i]
        if len(dd):
            dmax = max(dmax, int(np.max(dd[:, 0] ** 2 + dd[:, 1] ** 2)))
    return Hull2D(vertices=verts, perimeter=perimeter,
                  diameter=math.sqrt(dmax), diameter_sq=dmax)
