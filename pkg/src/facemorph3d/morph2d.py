"""Landmark-consistent 2D image morphing.

A single Delaunay triangulation is computed on the midpoint configuration
of the two landmark sets and shared by both, so every interpolated frame
warps with coherent connectivity. Warping is inverse: each output pixel is
located in the t-interpolated triangulation, its barycentric weights map it
to source positions in both endpoint configurations, and the two bilinear
samples are cross-dissolved. Pixels outside all triangles fall back to a
plain cross-dissolve.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import delaunay_triangulate
from .image import Image, sample_bilinear_array
from .landmarks import LandmarkSet


class MorphError(ValueError):
    pass


@dataclass(frozen=True)
class MorphMapping:
    """Two equally-ordered point sets sharing one triangle connectivity."""

    landmarks_a: np.ndarray       # (n, 2)
    landmarks_b: np.ndarray       # (n, 2)
    shared_triangles: np.ndarray  # (m, 3)
    width: int
    height: int


def build_correspondence(lm_a: LandmarkSet, lm_b: LandmarkSet) -> MorphMapping:
    """Triangulate the midpoint configuration once and share the connectivity.

    The midpoint shape minimizes the chance of a triangle degenerating at
    either endpoint configuration; a triangle degenerate at an endpoint is
    reported up front.
    """
    if len(lm_a) != len(lm_b):
        raise MorphError(f"landmark counts differ: {len(lm_a)} vs {len(lm_b)}")
    if (lm_a.image_width, lm_a.image_height) != (lm_b.image_width, lm_b.image_height):
        raise MorphError("landmark sets describe images of different dimensions")
    if lm_a.image_width is None:
        raise MorphError("landmark sets must carry image dimensions")

    a = lm_a.points
    b = lm_b.points
    mid = (a + b) / 2.0
    tri = delaunay_triangulate(mid)

    bad = []
    for endpoint in (a, b):
        p0 = endpoint[tri.triangles[:, 0]]
        p1 = endpoint[tri.triangles[:, 1]]
        p2 = endpoint[tri.triangles[:, 2]]
        e1 = p1 - p0
        e2 = p2 - p0
        area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        bad.extend(np.nonzero(np.abs(area) < 1e-12)[0].tolist())
    if bad:
        raise MorphError(f"triangles degenerate at an endpoint configuration: {sorted(set(bad))}")

    return MorphMapping(a.copy(), b.copy(), tri.triangles, lm_a.image_width, lm_a.image_height)


def interpolate_landmarks(mapping: MorphMapping, t: float) -> np.ndarray:
    """Pointwise (1-t)*a + t*b. The library rejects t outside [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise MorphError(f"interpolation factor {t} outside [0, 1]")
    return (1.0 - t) * mapping.landmarks_a + t * mapping.landmarks_b


def warp_blend(img_a: Image, img_b: Image, mapping: MorphMapping, t: float) -> Image:
    """Morphed frame at factor t, with img_a's dimensions.

    Triangles that degenerate at the interpolated configuration fall back to
    cross-dissolve for their pixels, with a warning.
    """
    if (img_a.width, img_a.height) != (mapping.width, mapping.height):
        raise MorphError("img_a does not match the dimensions recorded in the mapping")
    if (img_b.width, img_b.height) != (mapping.width, mapping.height):
        raise MorphError("img_b does not match the dimensions recorded in the mapping")
    pts_t = interpolate_landmarks(mapping, t)

    fa = img_a.as_float()
    fb = img_b.as_float()
    # Cross-dissolve everywhere; triangle interiors are overwritten below.
    out = (1.0 - t) * fa + t * fb
    assigned = np.zeros((mapping.height, mapping.width), dtype=bool)

    degenerate = 0
    w, h = mapping.width, mapping.height
    A = mapping.landmarks_a
    B = mapping.landmarks_b
    # Triangle order resolves shared-edge pixels to the lowest triangle index.
    for face in mapping.shared_triangles:
        p0, p1, p2 = pts_t[face]
        det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        if abs(det) < 1e-12:
            degenerate += 1
            continue
        xmin = max(int(np.floor(min(p0[0], p1[0], p2[0]) - 0.5)), 0)
        xmax = min(int(np.ceil(max(p0[0], p1[0], p2[0]) + 0.5)), w - 1)
        ymin = max(int(np.floor(min(p0[1], p1[1], p2[1]) - 0.5)), 0)
        ymax = min(int(np.ceil(max(p0[1], p1[1], p2[1]) + 0.5)), h - 1)
        if xmin > xmax or ymin > ymax:
            continue
        xs, ys = np.meshgrid(np.arange(xmin, xmax + 1), np.arange(ymin, ymax + 1))
        px = xs + 0.5
        py = ys + 0.5
        w1 = ((px - p0[0]) * (p2[1] - p0[1]) - (py - p0[1]) * (p2[0] - p0[0])) / det
        w2 = ((p1[0] - p0[0]) * (py - p0[1]) - (p1[1] - p0[1]) * (px - p0[0])) / det
        w0 = 1.0 - w1 - w2
        inside = (w0 >= -1e-9) & (w1 >= -1e-9) & (w2 >= -1e-9) & ~assigned[ys, xs]
        if not inside.any():
            continue
        wts = np.stack([w0[inside], w1[inside], w2[inside]], axis=1)
        src_a = wts @ A[face]
        src_b = wts @ B[face]
        ca = sample_bilinear_array(fa, src_a[:, 0], src_a[:, 1])
        cb = sample_bilinear_array(fb, src_b[:, 0], src_b[:, 1])
        yi = ys[inside]
        xi = xs[inside]
        out[yi, xi] = (1.0 - t) * ca + t * cb
        assigned[yi, xi] = True

    if degenerate:
        warnings.warn(f"{degenerate} triangles degenerate at t={t}; using cross-dissolve there")
    return Image.from_float(out)
