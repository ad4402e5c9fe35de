"""Planar Delaunay triangulation and barycentric coordinate utilities.

The triangulation is built with incremental Bowyer-Watson insertion seeded
by a super-triangle. The three super vertices are placed very far from the
(internally normalized) input so that conflict tests against triangles
touching them reduce to half-plane tests, which are evaluated explicitly.
Cocircular ties resolve deterministically: a point exactly on a circumcircle
counts as outside, so the diagonal created by the earlier insertion is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Non-degeneracy threshold for triangle signed areas, in squared input units.
EPSILON_AREA = 1e-12
# Two input points closer than this (in input units) count as duplicates.
DUPLICATE_TOL = 1e-9
# Relative guard band for the double-precision in-circle determinant:
# |det| below guard*magnitude is treated as exactly cocircular.
INCIRCLE_GUARD = 1e-14
# Absolute tie guard for orientation tests on normalized coordinates.
ORIENT_GUARD = 1e-14
# Slack allowed on barycentric weights for boundary-inclusive containment.
EPSILON_BARY = 1e-9

_SUPER_RADIUS = 1e6


class TriangulationError(ValueError):
    """Raised for inputs no valid triangulation exists for."""


class DegenerateTriangleError(ValueError):
    """Raised when a predicate is asked about a (near-)zero-area triangle."""


@dataclass(frozen=True)
class BarycentricWeights:
    w0: float
    w1: float
    w2: float

    def as_array(self):
        return np.array([self.w0, self.w1, self.w2])


@dataclass(frozen=True)
class Triangulation:
    """Point set plus CCW triangle index triples satisfying the Delaunay property."""

    points: np.ndarray    # (n, 2) float64
    triangles: np.ndarray  # (m, 3) int64

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        a, b, c = (self.points[self.triangles[:, i]] for i in range(3))
        ab = b - a
        ac = c - a
        return 0.5 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])

    def to_text(self) -> str:
        """Serialize to the plain-text .tris format (points, then index triples)."""
        lines = [str(self.n_points)]
        for x, y in self.points:
            lines.append(f"{x:.6f} {y:.6f}")
        lines.append(str(self.n_triangles))
        for i, j, k in self.triangles:
            lines.append(f"{i} {j} {k}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Triangulation":
        tokens = text.split()
        pos = 0
        n = int(tokens[pos]); pos += 1
        pts = np.array([float(t) for t in tokens[pos:pos + 2 * n]]).reshape(n, 2)
        pos += 2 * n
        m = int(tokens[pos]); pos += 1
        tris = np.array([int(t) for t in tokens[pos:pos + 3 * m]], dtype=np.int64).reshape(m, 3)
        return cls(points=pts, triangles=tris)


def _orient(a, b, c) -> float:
    """Twice the signed area of (a, b, c); positive for counter-clockwise."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _incircle_det(a, b, c, p) -> tuple[float, float]:
    """In-circle determinant and its rounding-error guard.

    The determinant is positive when p is strictly inside the circumcircle of
    the CCW triangle (a, b, c); |det| at or below the returned guard must be
    treated as exactly cocircular.
    """
    ax, ay = a[0] - p[0], a[1] - p[1]
    bx, by = b[0] - p[0], b[1] - p[1]
    cx, cy = c[0] - p[0], c[1] - p[1]
    t0 = (ax * ax + ay * ay) * (bx * cy - by * cx)
    t1 = (bx * bx + by * by) * (ax * cy - ay * cx)
    t2 = (cx * cx + cy * cy) * (ax * by - ay * bx)
    mag = (
        (ax * ax + ay * ay) * (abs(bx * cy) + abs(by * cx))
        + (bx * bx + by * by) * (abs(ax * cy) + abs(ay * cx))
        + (cx * cx + cy * cy) * (abs(ax * by) + abs(ay * bx))
    )
    return t0 - t1 + t2, INCIRCLE_GUARD * mag


def circumcircle_contains(a, b, c, p) -> bool:
    """Strict in-circumcircle test, independent of the orientation of (a, b, c).

    Points on the circle (within the scaled guard band) count as outside.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    p = np.asarray(p, dtype=float)
    orient = _orient(a, b, c)
    scale = max(
        abs(b[0] - a[0]) + abs(b[1] - a[1]),
        abs(c[0] - a[0]) + abs(c[1] - a[1]),
        1e-30,
    )
    if abs(orient) <= 2.0 * EPSILON_AREA * scale * scale:
        raise DegenerateTriangleError("circumcircle of a degenerate triangle is undefined")
    det, guard = _incircle_det(a, b, c, p)
    if orient < 0.0:
        det = -det
    return bool(det > guard)


def barycentric_coords(a, b, c, p) -> BarycentricWeights:
    """Weights (w0, w1, w2) with w0*a + w1*b + w2*c = p and w0+w1+w2 = 1."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    p = np.asarray(p, dtype=float)
    det = _orient(a, b, c)
    scale = max(np.abs(b - a).sum(), np.abs(c - a).sum(), 1e-30)
    if abs(det) <= 2.0 * EPSILON_AREA * scale * scale:
        raise DegenerateTriangleError("barycentric coordinates of a degenerate triangle")
    w1 = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / det
    w2 = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / det
    return BarycentricWeights(1.0 - w1 - w2, w1, w2)


def barycentric_matrix(a, b, c, pts: np.ndarray) -> np.ndarray:
    """Vectorized barycentric weights for an (n, 2) array of query points."""
    det = _orient(a, b, c)
    w1 = ((pts[:, 0] - a[0]) * (c[1] - a[1]) - (pts[:, 1] - a[1]) * (c[0] - a[0])) / det
    w2 = ((b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])) / det
    return np.stack([1.0 - w1 - w2, w1, w2], axis=1)


def locate_point(tri: Triangulation, p) -> int | None:
    """Index of the lowest-index triangle containing p (boundary-inclusive), or None."""
    p = np.asarray(p, dtype=float)
    pts = tri.points
    for idx, (i, j, k) in enumerate(tri.triangles):
        w = barycentric_coords(pts[i], pts[j], pts[k], p)
        if w.w0 >= -EPSILON_BARY and w.w1 >= -EPSILON_BARY and w.w2 >= -EPSILON_BARY:
            return idx
    return None


def _canonical_triangles(tris: list[tuple[int, int, int]]) -> np.ndarray:
    """Rotate each CCW triple so the smallest index leads, then sort the list."""
    canon = []
    for t in tris:
        m = int(np.argmin(t))
        canon.append((t[m], t[(m + 1) % 3], t[(m + 2) % 3]))
    canon.sort()
    return np.array(canon, dtype=np.int64).reshape(-1, 3)


def delaunay_triangulate(points) -> Triangulation:
    """Delaunay triangulation via Bowyer-Watson incremental insertion.

    Deterministic for a given input ordering; exact cocircular configurations
    keep the diagonal produced by the earlier insertion.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise TriangulationError("points must be an (n, 2) array")
    n = len(pts)
    if n < 3:
        raise TriangulationError(f"need at least 3 points, got {n}")
    if not np.isfinite(pts).all():
        raise TriangulationError("points must be finite")

    diff = pts[:, None, :] - pts[None, :, :]
    d2 = (diff ** 2).sum(axis=2)
    iu = np.triu_indices(n, k=1)
    if (d2[iu] < DUPLICATE_TOL ** 2).any():
        i, j = iu[0][d2[iu] < DUPLICATE_TOL ** 2][0], iu[1][d2[iu] < DUPLICATE_TOL ** 2][0]
        raise TriangulationError(f"duplicate points at indices {i} and {j}")

    # Normalize for predicate conditioning; a positive-scale affine map
    # preserves orientation and the Delaunay property.
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    if span <= 0.0:
        raise TriangulationError("all points coincide")
    work = (pts - (lo + hi) / 2.0) / span

    base = work[1] - work[0]
    rel = work - work[0]
    if np.all(np.abs(base[0] * rel[:, 1] - base[1] * rel[:, 0]) < 1e-12):
        raise TriangulationError("all points are collinear")

    # Super vertices: far enough that their triangles behave as half-planes.
    angles = np.deg2rad([90.0, 210.0, 330.0])
    supers = _SUPER_RADIUS * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    verts = np.vstack([work, supers])
    S0, S1, S2 = n, n + 1, n + 2

    tris: list[tuple[int, int, int]] = [(S0, S1, S2)]

    def is_super(i: int) -> bool:
        return i >= n

    for pi in range(n):
        p = work[pi]
        bad: list[int] = []
        if tris:
            arr = np.array(tris, dtype=np.int64)
            real_mask = (arr < n).all(axis=1)
            # Vectorized strict in-circle test for all-real triangles.
            real_idx = np.nonzero(real_mask)[0]
            if len(real_idx) > 0:
                t = arr[real_idx]
                a = verts[t[:, 0]] - p
                b = verts[t[:, 1]] - p
                c = verts[t[:, 2]] - p
                na = a[:, 0] ** 2 + a[:, 1] ** 2
                nb = b[:, 0] ** 2 + b[:, 1] ** 2
                nc = c[:, 0] ** 2 + c[:, 1] ** 2
                det = (
                    na * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
                    - nb * (a[:, 0] * c[:, 1] - a[:, 1] * c[:, 0])
                    + nc * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
                )
                mag = (
                    na * (np.abs(b[:, 0] * c[:, 1]) + np.abs(b[:, 1] * c[:, 0]))
                    + nb * (np.abs(a[:, 0] * c[:, 1]) + np.abs(a[:, 1] * c[:, 0]))
                    + nc * (np.abs(a[:, 0] * b[:, 1]) + np.abs(a[:, 1] * b[:, 0]))
                )
                bad.extend(real_idx[det > INCIRCLE_GUARD * mag].tolist())
            for ti in np.nonzero(~real_mask)[0]:
                if _super_conflict(tris[ti], p, verts, n):
                    bad.append(int(ti))
        bad_set = set(bad)
        if not bad_set:
            raise TriangulationError("insertion produced an empty cavity (inconsistent predicates)")

        # Cavity boundary: directed edges of bad triangles whose twin is absent.
        edges: dict[tuple[int, int], int] = {}
        for ti in bad_set:
            i, j, k = tris[ti]
            for u, v in ((i, j), (j, k), (k, i)):
                edges[(u, v)] = edges.get((u, v), 0) + 1
        boundary = [(u, v) for (u, v) in edges if (v, u) not in edges]

        tris = [t for idx, t in enumerate(tris) if idx not in bad_set]
        for u, v in boundary:
            tris.append((pi, u, v))

    real = [t for t in tris if not any(is_super(i) for i in t)]
    out = _canonical_triangles(real)

    # Final sanity: reject triangles that collapsed to (near) zero area.
    result = Triangulation(points=pts, triangles=out)
    areas = result.signed_areas()
    if (np.abs(areas) <= EPSILON_AREA * span * span).any():
        raise TriangulationError("triangulation contains a degenerate triangle")
    if (areas < 0).any():  # canonical rotation preserves CCW from construction
        raise TriangulationError("triangulation contains a clockwise triangle")
    return result


def _super_conflict(tri: tuple[int, int, int], p, verts: np.ndarray, n: int) -> bool:
    """Conflict test for triangles containing super vertices.

    In the limit of super vertices at infinity a triangle with one super
    vertex conflicts with p iff p lies strictly on the super vertex's side
    of the line through its two real vertices; for p exactly on that line
    the huge circumcircle contains exactly the points strictly inside the
    segment (the finite-radius circle bulges past the chord only there).
    With two super vertices the conflict region is the half-plane through
    the single real vertex whose boundary is parallel to the difference of
    the two super directions. The initial all-super triangle conflicts with
    everything.
    """
    idx = list(tri)
    ks = [i for i in idx if i >= n]
    if len(ks) == 3:
        return True
    # Rotate cyclically so super vertices come last (preserves orientation).
    while idx[-1] < n or (len(ks) == 2 and idx[-2] < n):
        idx = idx[1:] + idx[:1]
    if len(ks) == 1:
        a, b, s = verts[idx[0]], verts[idx[1]], verts[idx[2]]
        o = _orient(a, b, p)
        if o > ORIENT_GUARD:
            return True
        if o < -ORIENT_GUARD:
            return False
        return (
            (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]) > 0
            and (p[0] - b[0]) * (a[0] - b[0]) + (p[1] - b[1]) * (a[1] - b[1]) > 0
        )
    # Two super vertices.
    a, s2, s3 = verts[idx[0]], verts[idx[1]], verts[idx[2]]
    d = (s2 - s3) / _SUPER_RADIUS
    c = (a[0] - p[0]) * d[1] - (a[1] - p[1]) * d[0]
    return c >= -ORIENT_GUARD


def convex_hull_size(points: np.ndarray) -> int:
    """Number of input points on the convex hull boundary, collinear ones included.

    Uses Andrew's monotone chain; points lying on a hull edge count, which is
    the convention needed by the 2n - 2 - h triangle-count identity.
    """
    pts = sorted({(float(x), float(y)) for x, y in np.asarray(points, dtype=float)})
    if len(pts) < 3:
        return len(pts)

    def chain(seq):
        out = []
        for q in seq:
            while len(out) >= 2 and _orient(out[-2], out[-1], q) < 0:
                out.pop()
            out.append(q)
        return out

    lower = chain(pts)
    upper = chain(list(reversed(pts)))
    return len(set(lower[:-1] + upper[:-1]))
