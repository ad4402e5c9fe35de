"""Minimal software rasterizer: texture-mapped triangles, z-buffer visibility,
per-fragment Phong shading with a single directional light.

Screen space: x right, y down, pixel centers at integer + 0.5. The default
camera is orthographic, fitting the mesh bounding box into the frame with a
5% margin; an optional yaw (90 degrees for the side view) rotates the mesh
about the vertical axis through its centroid. A fitted affine camera can be
used instead for photo-registered renders.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fitting import AffineCamera
from .image import Image, sample_bilinear_array
from .mesh import TriangleMesh


@dataclass(frozen=True)
class Material:
    ambient: float = 0.15
    diffuse: float = 0.85
    specular: float = 0.25
    shininess: float = 16.0

    def __post_init__(self):
        if min(self.ambient, self.diffuse, self.specular) < 0:
            raise ValueError("material coefficients must be >= 0")
        if self.shininess < 1:
            raise ValueError("shininess exponent must be >= 1")


@dataclass(frozen=True)
class RenderParams:
    width: int = 256
    height: int = 256
    camera: AffineCamera | None = None   # None selects the orthographic fit
    yaw_degrees: float = 0.0             # about the vertical axis, orthographic only
    light_direction: tuple = (0.0, 0.0, 1.0)  # toward the viewer: frontal
    material: Material = field(default_factory=Material)
    background: tuple = (0, 0, 0)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be >= 1")
        L = np.asarray(self.light_direction, dtype=float)
        n = np.linalg.norm(L)
        if abs(n - 1.0) > 1e-6:
            raise ValueError("light_direction must be unit length")


def phong_shade(normal, light_dir, view_dir, material: Material, texel) -> np.ndarray:
    """ka*texel + kd*max(N.L,0)*texel + ks*max(R.V,0)^n * white, clamped."""
    N = np.asarray(normal, dtype=float)
    L = np.asarray(light_dir, dtype=float)
    V = np.asarray(view_dir, dtype=float)
    texel = np.asarray(texel, dtype=float)
    ndl = max(float(N @ L), 0.0)
    R = 2.0 * (N @ L) * N - L  # reflection of -L about N
    rdv = max(float(R @ V), 0.0)
    color = (
        material.ambient * texel
        + material.diffuse * ndl * texel
        + material.specular * rdv ** material.shininess
    )
    return np.clip(color, 0.0, 1.0)


def _view_transform(mesh: TriangleMesh, params: RenderParams):
    """Screen-space vertex positions, depths, and view-space normals."""
    v = mesh.vertices
    n = mesh.normals
    if params.camera is not None:
        xy = params.camera.project(v)
        axis = np.cross(params.camera.P[0, :3], params.camera.P[1, :3])
        axis /= max(np.linalg.norm(axis), 1e-30)
        if axis[2] < 0:
            axis = -axis
        # Image convention (x right, y down): the camera looks along +z, so
        # smaller z is nearer the viewer.
        depth = v @ axis
        return xy, depth, n

    yaw = np.deg2rad(params.yaw_degrees)
    c, s = np.cos(yaw), np.sin(yaw)
    rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    centroid = v.mean(axis=0)
    vv = (v - centroid) @ rot.T
    nv = n @ rot.T

    lo = vv.min(axis=0)
    hi = vv.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    scale = min(0.9 * params.width / span[0], 0.9 * params.height / span[1])
    cx = (lo[0] + hi[0]) / 2.0
    cy = (lo[1] + hi[1]) / 2.0
    xs = params.width / 2.0 + scale * (vv[:, 0] - cx)
    ys = params.height / 2.0 - scale * (vv[:, 1] - cy)  # y up in model, down on screen
    depth = -vv[:, 2]  # viewer at +z: larger z is closer, smaller depth wins
    return np.stack([xs, ys], axis=1), depth, nv


def rasterize(mesh: TriangleMesh, texture: Image, params: RenderParams) -> Image:
    """Scan-convert the mesh with a z-buffer; deterministic for fixed inputs.

    Fully vectorized: all candidate fragments are generated at once, filtered
    by edge functions with a top-left fill rule (so adjacent triangles never
    fight over shared edges), and resolved per pixel by depth, ties keeping
    the earlier-drawn fragment.
    """
    if mesh.normals is None:
        raise ValueError("mesh must carry per-vertex normals (compute_vertex_normals)")
    W, H = params.width, params.height
    frame = np.empty((H, W, 3))
    frame[:] = np.asarray(params.background, dtype=float) / 255.0

    xy, depth, normals = _view_transform(mesh, params)
    faces = mesh.faces
    if len(faces) == 0:
        return Image.from_float(frame)

    p = xy[faces]  # (F, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    # Swap vertices of clockwise triangles so edge functions are positive
    # inside; keeps both front- and back-facing triangles drawable.
    flip = det < 0
    faces = faces.copy()
    faces[flip] = faces[flip][:, [0, 2, 1]]
    p[flip] = p[flip][:, [0, 2, 1]]
    det = np.abs(det)
    live = det > 1e-12  # degenerate screen-space triangles are skipped

    xmin = np.clip(np.floor(p[:, :, 0].min(axis=1) - 0.5), 0, W - 1).astype(np.int64)
    xmax = np.clip(np.ceil(p[:, :, 0].max(axis=1) + 0.5), 0, W - 1).astype(np.int64)
    ymin = np.clip(np.floor(p[:, :, 1].min(axis=1) - 0.5), 0, H - 1).astype(np.int64)
    ymax = np.clip(np.ceil(p[:, :, 1].max(axis=1) + 0.5), 0, H - 1).astype(np.int64)
    offscreen = (p[:, :, 0].max(axis=1) < 0) | (p[:, :, 0].min(axis=1) > W) | \
                (p[:, :, 1].max(axis=1) < 0) | (p[:, :, 1].min(axis=1) > H)
    live &= ~offscreen

    nx = np.where(live, xmax - xmin + 1, 0)
    ny = np.where(live, ymax - ymin + 1, 0)
    counts = nx * ny
    total = int(counts.sum())
    if total == 0:
        return Image.from_float(frame)

    # Fragment arrays: face id plus local bbox cell, all faces at once.
    fid = np.repeat(np.arange(len(faces)), counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    local = np.arange(total) - np.repeat(starts, counts)
    fx = (xmin[fid] + local % np.maximum(nx[fid], 1)).astype(np.int64)
    fy = (ymin[fid] + local // np.maximum(nx[fid], 1)).astype(np.int64)
    px = fx + 0.5
    py = fy + 0.5

    a = p[fid]  # (N, 3, 2)
    inside = np.ones(total, dtype=bool)
    for k in range(3):
        v0 = a[:, k]
        v1 = a[:, (k + 1) % 3]
        dx = v1[:, 0] - v0[:, 0]
        dy = v1[:, 1] - v0[:, 1]
        e = dx * (py - v0[:, 1]) - dy * (px - v0[:, 0])
        # Top-left rule in y-down screen coordinates.
        top_left = (dy > 0) | ((dy == 0) & (dx > 0))
        inside &= (e > 0) | ((e == 0) & top_left)
    if not inside.any():
        return Image.from_float(frame)

    fid = fid[inside]
    fx = fx[inside]
    fy = fy[inside]
    px = px[inside]
    py = py[inside]
    a = p[fid]
    w1 = ((px - a[:, 0, 0]) * (a[:, 2, 1] - a[:, 0, 1])
          - (py - a[:, 0, 1]) * (a[:, 2, 0] - a[:, 0, 0])) / det[fid]
    w2 = ((a[:, 1, 0] - a[:, 0, 0]) * (py - a[:, 0, 1])
          - (a[:, 1, 1] - a[:, 0, 1]) * (px - a[:, 0, 0])) / det[fid]
    w0 = 1.0 - w1 - w2
    wts = np.stack([w0, w1, w2], axis=1)
    z = (wts * depth[faces[fid]]).sum(axis=1)

    # Per-pixel depth resolution: sort by (pixel, depth, draw order) and keep
    # the first fragment of each pixel.
    pix = fy * W + fx
    order = np.lexsort((fid, z, pix))
    keep = order[np.concatenate([[True], np.diff(pix[order]) != 0])]

    fid = fid[keep]
    wts = wts[keep]
    fx = fx[keep]
    fy = fy[keep]

    idx = faces[fid]  # (M, 3)
    uv = np.einsum("mk,mkj->mj", wts, mesh.uvs[idx])
    nrm = np.einsum("mk,mkj->mj", wts, normals[idx])
    nrm /= np.maximum(np.linalg.norm(nrm, axis=1, keepdims=True), 1e-30)

    tex_f = texture.as_float()
    L = np.asarray(params.light_direction, dtype=float)
    mat = params.material
    texel = sample_bilinear_array(tex_f, uv[:, 0] * texture.width,
                                  (1.0 - uv[:, 1]) * texture.height)
    ndl_raw = nrm @ L
    ndl = np.maximum(ndl_raw, 0.0)
    R = 2.0 * ndl_raw[:, None] * nrm - L
    rdv = np.maximum(R[:, 2], 0.0)  # view direction is +z
    color = (
        mat.ambient * texel
        + mat.diffuse * ndl[:, None] * texel
        + mat.specular * (rdv ** mat.shininess)[:, None]
    )
    frame[fy, fx] = np.clip(color, 0.0, 1.0)
    return Image.from_float(frame)
