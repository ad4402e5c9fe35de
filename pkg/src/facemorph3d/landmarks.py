"""Facial landmark sets in the ibug 68-point convention, plus pts file I/O.

Coordinates are pixels with the origin at the top-left corner, x growing
right and y growing down. The pts format is the plain-text one used with
68-point annotations:

    version: 1
    n_points: <N>
    {
    <x> <y>
    ...
    }
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

IBUG_POINT_COUNT = 68
AUGMENTED_POINT_COUNT = IBUG_POINT_COUNT + 8

# How far edge-touching landmarks are nudged into the image before
# triangulation, to keep them distinct from the boundary anchors.
EDGE_NUDGE_PX = 0.5


class PtsParseError(ValueError):
    """Malformed pts file; message includes the offending 1-based line number."""


@dataclass(frozen=True)
class LandmarkSet:
    """Ordered 2D feature points; index i always denotes the same feature."""

    points: np.ndarray  # (n, 2) float64, pixels
    image_width: int | None = None
    image_height: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        if self.image_width is not None and self.image_height is not None:
            w, h = self.image_width, self.image_height
            if len(pts) and (
                (pts[:, 0] < 0).any() or (pts[:, 0] > w).any()
                or (pts[:, 1] < 0).any() or (pts[:, 1] > h).any()
            ):
                raise ValueError(f"landmarks fall outside the {w}x{h} image")

    def __len__(self) -> int:
        return len(self.points)

    def with_dimensions(self, width: int, height: int) -> "LandmarkSet":
        return replace(self, image_width=width, image_height=height)


def parse_pts(text: str, image_width: int | None = None,
              image_height: int | None = None) -> LandmarkSet:
    """Parse a pts file. Image dimensions are supplied out-of-band."""
    lines = text.splitlines()

    def err(lineno: int, msg: str):
        raise PtsParseError(f"line {lineno}: {msg}")

    if not lines or not lines[0].strip().startswith("version:"):
        err(1, "expected 'version: 1' header")
    if len(lines) < 2 or not lines[1].strip().startswith("n_points:"):
        err(2, "expected 'n_points: <N>' header")
    try:
        n = int(lines[1].split(":", 1)[1])
    except ValueError:
        err(2, "n_points is not an integer")
    if n < 0:
        err(2, "n_points must be non-negative")
    if len(lines) < 3 or lines[2].strip() != "{":
        err(3, "expected '{'")

    pts = []
    lineno = 4
    for lineno, line in enumerate(lines[3:], start=4):
        stripped = line.strip()
        if stripped == "}":
            break
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 2:
            err(lineno, f"expected '<x> <y>', got {stripped!r}")
        try:
            pts.append((float(parts[0]), float(parts[1])))
        except ValueError:
            err(lineno, f"non-numeric coordinate in {stripped!r}")
    else:
        err(lineno, "missing closing '}'")

    if len(pts) != n:
        err(lineno, f"n_points declares {n} but file lists {len(pts)} points")
    points = np.array(pts, dtype=float).reshape(len(pts), 2)
    return LandmarkSet(points, image_width, image_height)


def write_pts(lm: LandmarkSet) -> str:
    """Serialize to pts text with 6 decimal digits per coordinate."""
    out = ["version: 1", f"n_points: {len(lm)}", "{"]
    for x, y in lm.points:
        out.append(f"{x:.6f} {y:.6f}")
    out.append("}")
    return "\n".join(out) + "\n"


def add_boundary_anchors(lm: LandmarkSet) -> LandmarkSet:
    """Append the 8 image-boundary anchors used for full-image triangulation.

    Anchor order: TL, TR, BR, BL, top-mid, right-mid, bottom-mid, left-mid.
    Landmarks already touching the image edge are nudged 0.5 px inward so the
    Delaunay predicates never see duplicate or collinear boundary points.
    """
    if lm.image_width is None or lm.image_height is None:
        raise ValueError("image dimensions are required to place boundary anchors")
    w, h = float(lm.image_width), float(lm.image_height)

    pts = lm.points.copy()
    if len(pts):
        pts[:, 0] = np.clip(pts[:, 0], EDGE_NUDGE_PX, w - EDGE_NUDGE_PX)
        pts[:, 1] = np.clip(pts[:, 1], EDGE_NUDGE_PX, h - EDGE_NUDGE_PX)

    anchors = np.array([
        (0.0, 0.0), (w, 0.0), (w, h), (0.0, h),
        (w / 2.0, 0.0), (w, h / 2.0), (w / 2.0, h), (0.0, h / 2.0),
    ])
    return LandmarkSet(np.vstack([pts, anchors]), lm.image_width, lm.image_height)
