"""PCA morphable face model: synthesis, instancing, and landmark-based fitting.

The model is mean shape + orthonormal deformation basis + per-component
standard deviations. Fitting alternates two closed-form solves: a normalized
DLT least-squares estimate of a 2x4 affine camera, and a ridge-regularized
linear solve for the shape coefficients. A synthetic ellipsoidal model stands
in for statistical models built from real scan data.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay as _SciDelaunay

from .image import Image, sample_bilinear_array
from .landmarks import IBUG_POINT_COUNT, LandmarkSet
from .mesh import TriangleMesh

DEFAULT_COEFFICIENT_CAP = 4.0
MODEL_MAGIC = b"MKMM1"


class FittingError(ValueError):
    pass


class DegenerateCameraError(FittingError):
    """Correspondences are coplanar or otherwise rank-deficient."""


@dataclass(frozen=True)
class AffineCamera:
    """2x4 matrix mapping homogeneous 3D model points to pixel coordinates."""

    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float).reshape(2, 4)
        object.__setattr__(self, "P", P)
        if np.linalg.matrix_rank(P[:, :3]) < 2:
            raise DegenerateCameraError("camera linear block must have rank 2")

    def project(self, points3d: np.ndarray) -> np.ndarray:
        pts = np.asarray(points3d, dtype=float).reshape(-1, 3)
        return pts @ self.P[:, :3].T + self.P[:, 3]


@dataclass(frozen=True)
class ShapeCoefficients:
    """PCA weights in units of per-component standard deviation."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float).ravel()
        if not np.isfinite(a).all():
            raise FittingError("shape coefficients must be finite")
        object.__setattr__(self, "alpha", a)

    def __len__(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class MorphableModel:
    mean: np.ndarray                 # (3V,) stacked xyz
    basis: np.ndarray                # (3V, K), orthonormal columns
    sigma: np.ndarray                # (K,), > 0
    faces: np.ndarray                # (F, 3)
    uvs: np.ndarray                  # (V, 2)
    landmark_vertex_ids: np.ndarray  # (68,), distinct
    seed: int | None = None

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        basis = np.asarray(self.basis, dtype=float).reshape(len(mean), -1)
        sigma = np.asarray(self.sigma, dtype=float).ravel()
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        uvs = np.asarray(self.uvs, dtype=float).reshape(-1, 2)
        lids = np.asarray(self.landmark_vertex_ids, dtype=np.int64).ravel()
        for name, val in [("mean", mean), ("basis", basis), ("sigma", sigma), ("uvs", uvs)]:
            object.__setattr__(self, name, val)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "landmark_vertex_ids", lids)
        if len(mean) % 3:
            raise FittingError("mean length must be a multiple of 3")
        if (sigma <= 0).any():
            raise FittingError("sigma values must be positive")
        if len(lids) != IBUG_POINT_COUNT or len(np.unique(lids)) != IBUG_POINT_COUNT:
            raise FittingError("need 68 distinct landmark vertex ids")
        if lids.min() < 0 or lids.max() >= self.n_vertices:
            raise FittingError("landmark vertex id out of range")

    @property
    def n_vertices(self) -> int:
        return len(self.mean) // 3

    @property
    def n_components(self) -> int:
        return self.basis.shape[1]


def _landmark_parametric_layout() -> np.ndarray:
    """Fixed 68 parametric (x, y) positions in the unit disk, ibug-ordered.

    A stylized face layout: jaw arc, brows, nose bridge and base, eyes, mouth.
    Exact positions are arbitrary but frozen; only distinctness and spread
    matter to the pipeline.
    """
    pts = []
    # 0-16: jawline, lower arc left ear to right ear
    ang = np.linspace(np.pi, 2 * np.pi, 17)
    pts.extend(zip(0.85 * np.cos(ang), -0.75 * np.sin(ang) - 0.05))
    # 17-26: brows
    for side in (-1, 1):
        xs = side * np.linspace(0.55, 0.15, 5)
        pts.extend(zip(xs, 0.42 - 0.08 * np.abs(np.linspace(-1, 1, 5))))
    # 27-30: nose bridge
    pts.extend(zip(np.zeros(4), np.linspace(0.30, -0.02, 4)))
    # 31-35: nose base
    pts.extend(zip(np.linspace(-0.12, 0.12, 5), -0.10 + 0.02 * np.array([0, 1, 2, 1, 0])))
    # 36-47: eyes, hexagonal rings
    for cx in (-0.35, 0.35):
        ring = np.deg2rad([180, 120, 60, 0, -60, -120])
        pts.extend(zip(cx + 0.10 * np.cos(ring), 0.25 + 0.05 * np.sin(ring)))
    # 48-67: mouth, outer ring of 12 + inner ring of 8
    outer = np.deg2rad(np.linspace(180, -180, 12, endpoint=False))
    pts.extend(zip(0.22 * np.cos(outer), -0.42 + 0.10 * np.sin(outer)))
    inner = np.deg2rad(np.linspace(180, -180, 8, endpoint=False))
    pts.extend(zip(0.13 * np.cos(inner), -0.42 + 0.05 * np.sin(inner)))
    out = np.array(pts)
    assert out.shape == (IBUG_POINT_COUNT, 2)
    return out


def synthesize_model(seed: int, K: int, resolution: int) -> MorphableModel:
    """Deterministic synthetic morphable model with `resolution` vertices.

    Mean shape is an ellipsoidal dome sampled over the unit disk; basis
    columns are orthonormalized smooth deformation fields; the 68 landmark
    vertices sit at fixed parametric locations (the first 68 vertices).
    """
    if K < 1:
        raise FittingError("need at least one component")
    if resolution < IBUG_POINT_COUNT:
        raise FittingError(f"resolution must be at least {IBUG_POINT_COUNT}")
    if K > 3 * resolution:
        raise FittingError("more components than degrees of freedom")

    rng = np.random.default_rng(seed)
    landmarks = _landmark_parametric_layout() * 0.92

    n_extra = resolution - IBUG_POINT_COUNT
    extra = []
    while len(extra) < n_extra:
        cand = rng.uniform(-1.0, 1.0, size=(max(n_extra, 64), 2))
        cand = cand[(cand ** 2).sum(axis=1) < 0.995]
        extra.extend(map(tuple, cand))
    param = np.vstack([landmarks, np.array(extra[:n_extra]).reshape(n_extra, 2)])

    x, y = param[:, 0], param[:, 1]
    r2 = np.clip(x ** 2 + y ** 2, 0.0, 1.0)
    z = 0.65 * np.sqrt(1.0 - r2)
    scale = 100.0  # model units
    verts = np.stack([x, 1.25 * y, z], axis=1) * scale
    mean = verts.ravel()

    tess = _SciDelaunay(param)
    faces = tess.simplices.astype(np.int64)
    # Orient faces counter-clockwise in the parameter plane (+z outward).
    a, b, c = param[faces[:, 0]], param[faces[:, 1]], param[faces[:, 2]]
    e1 = b - a
    e2 = c - a
    cw = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    faces[cw] = faces[cw][:, [0, 2, 1]]

    uvs = (param + 1.0) / 2.0

    # Smooth random deformation fields, orthonormalized. Each field has its
    # affine-in-position component (fitted on the landmark vertices) removed:
    # a deformation that is affine in the landmark constellation is absorbed
    # by the affine camera, which would make landmark fitting ill-posed.
    lids = np.arange(IBUG_POINT_COUNT)
    aff_lm = np.hstack([verts[lids], np.ones((IBUG_POINT_COUNT, 1))])
    aff_all = np.hstack([verts, np.ones((resolution, 1))])
    fields = np.empty((3 * resolution, K))
    for k in range(K):
        freq = rng.uniform(1.5, 4.0, size=(3, 2))
        phase = rng.uniform(0, 2 * np.pi, size=3)
        amp = rng.normal(size=3)
        field = np.stack(
            [amp[i] * np.sin(freq[i, 0] * x + freq[i, 1] * y + phase[i]) for i in range(3)],
            axis=1,
        )
        coef = np.linalg.lstsq(aff_lm, field[lids], rcond=None)[0]
        fields[:, k] = (field - aff_all @ coef).ravel()
    q, r = np.linalg.qr(fields)
    q = q * np.sign(np.diag(r))[None, :]  # deterministic column signs
    sigma = scale * 0.02 * (0.9 ** np.arange(K)) + 0.2

    return MorphableModel(
        mean=mean,
        basis=q,
        sigma=sigma,
        faces=faces,
        uvs=uvs,
        landmark_vertex_ids=np.arange(IBUG_POINT_COUNT),
        seed=seed,
    )


def instance_mesh(model: MorphableModel, alpha: ShapeCoefficients | np.ndarray) -> TriangleMesh:
    """Instance S = mean + sum_k alpha_k * sigma_k * basis_k as a mesh."""
    a = alpha.alpha if isinstance(alpha, ShapeCoefficients) else np.asarray(alpha, float).ravel()
    if len(a) != model.n_components:
        raise FittingError(f"expected {model.n_components} coefficients, got {len(a)}")
    shape = model.mean + model.basis @ (model.sigma * a)
    return TriangleMesh(shape.reshape(-1, 3), model.uvs, model.faces)


def estimate_affine_camera(points2d, points3d) -> AffineCamera:
    """Least-squares 2x4 affine camera from >=4 non-coplanar correspondences.

    Both point sets are Hartley-normalized (zero mean, fixed RMS) before the
    solve and the result is denormalized, for conditioning.
    """
    x2 = np.asarray(points2d, dtype=float).reshape(-1, 2)
    x3 = np.asarray(points3d, dtype=float).reshape(-1, 3)
    if len(x2) != len(x3):
        raise FittingError("correspondence count mismatch")
    if len(x2) < 4:
        raise FittingError("need at least 4 correspondences")

    c2 = x2.mean(axis=0)
    rms2 = np.sqrt(((x2 - c2) ** 2).sum(axis=1).mean())
    s2 = np.sqrt(2.0) / max(rms2, 1e-12)
    c3 = x3.mean(axis=0)
    rms3 = np.sqrt(((x3 - c3) ** 2).sum(axis=1).mean())
    s3 = np.sqrt(3.0) / max(rms3, 1e-12)

    A = np.hstack([(x3 - c3) * s3, np.ones((len(x3), 1))])
    if np.linalg.matrix_rank(A, tol=1e-9 * len(A)) < 4:
        raise DegenerateCameraError("points are coplanar; affine camera is ambiguous")
    b = (x2 - c2) * s2
    Pn, *_ = np.linalg.lstsq(A, b, rcond=None)
    Pn = Pn.T  # (2, 4) in normalized frames

    M = (Pn[:, :3] * s3) / s2
    t = Pn[:, 3] / s2 + c2 - M @ c3
    return AffineCamera(np.hstack([M, t[:, None]]))


def fit_shape(model: MorphableModel, camera: AffineCamera, landmarks2d,
              lam: float = 0.1, coefficient_cap: float = DEFAULT_COEFFICIENT_CAP,
              ) -> ShapeCoefficients:
    """Ridge-regularized linear solve for shape coefficients.

    Minimizes the landmark reprojection error plus lam * ||alpha||^2, with the
    2D residuals expressed in a normalized landmark frame so lam is
    image-scale independent. Coefficients beyond coefficient_cap are clamped
    with a warning.
    """
    if lam < 0:
        raise FittingError("regularization weight must be >= 0")
    x2 = np.asarray(landmarks2d, dtype=float).reshape(-1, 2)
    L = model.landmark_vertex_ids
    if len(x2) != len(L):
        raise FittingError(f"expected {len(L)} landmarks, got {len(x2)}")
    K = model.n_components

    # Normalized landmark frame: zero mean, RMS sqrt(2).
    c = x2.mean(axis=0)
    rms = np.sqrt(((x2 - c) ** 2).sum(axis=1).mean())
    s = np.sqrt(2.0) / max(rms, 1e-12)
    Mn = s * camera.P[:, :3]
    tn = s * (camera.P[:, 3] - c)
    bn = s * (x2 - c)

    mean_pts = model.mean.reshape(-1, 3)[L]
    basis_pts = model.basis.reshape(-1, 3, K)[L]  # (68, 3, K)

    A = np.einsum("ij,njk->nik", Mn, basis_pts).reshape(-1, K) * model.sigma[None, :]
    y = (bn - mean_pts @ Mn.T - tn).ravel()

    lhs = A.T @ A + lam * np.eye(K)
    rhs = A.T @ y
    try:
        cond = np.linalg.cond(lhs)
        if not np.isfinite(cond) or cond > 1e12:
            raise np.linalg.LinAlgError
        alpha = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        raise FittingError(
            "singular normal equations; landmark coverage is insufficient, "
            "try a regularization weight > 0"
        ) from None

    if np.abs(alpha).max(initial=0.0) > coefficient_cap:
        warnings.warn("shape coefficients exceeded the cap and were clamped")
        alpha = np.clip(alpha, -coefficient_cap, coefficient_cap)
    return ShapeCoefficients(alpha)


def reprojection_rmse(camera: AffineCamera, points3d, points2d) -> float:
    proj = camera.project(points3d)
    x2 = np.asarray(points2d, dtype=float).reshape(-1, 2)
    return float(np.sqrt(((proj - x2) ** 2).sum(axis=1).mean()))


def fit_from_photo_landmarks(model: MorphableModel, landmarks: LandmarkSet,
                             lam: float = 0.1, iterations: int = 3,
                             coefficient_cap: float = DEFAULT_COEFFICIENT_CAP,
                             ) -> tuple[AffineCamera, ShapeCoefficients, TriangleMesh]:
    """Alternate camera estimation and shape fitting for `iterations` rounds."""
    if iterations < 1:
        raise FittingError("need at least one iteration")
    x2 = landmarks.points
    if len(x2) != IBUG_POINT_COUNT:
        raise FittingError(f"expected {IBUG_POINT_COUNT} landmarks, got {len(x2)}")

    L = model.landmark_vertex_ids
    alpha = ShapeCoefficients(np.zeros(model.n_components))
    camera = None
    for _ in range(iterations):
        mesh = instance_mesh(model, alpha)
        camera = estimate_affine_camera(x2, mesh.vertices[L])
        alpha = fit_shape(model, camera, x2, lam, coefficient_cap)
    mesh = instance_mesh(model, alpha)
    return camera, alpha, mesh


def extract_texture(mesh: TriangleMesh, camera: AffineCamera, photo: Image,
                    texture_size: int = 256) -> Image:
    """Pull the photo into the mesh's UV atlas.

    Each texel covered by a UV triangle maps barycentrically to a 3D surface
    point, projects through the camera, and bilinearly samples the photo.
    Uncovered texels are filled by neighbor dilation to avoid dark fringes.
    """
    S = texture_size
    tex = np.zeros((S, S, 3))
    covered = np.zeros((S, S), dtype=bool)
    photo_f = photo.as_float()

    # Texel grid coordinates of each vertex (v axis points up in uv space).
    txy = np.stack([mesh.uvs[:, 0] * S, (1.0 - mesh.uvs[:, 1]) * S], axis=1)

    for face in mesh.faces:
        p0, p1, p2 = txy[face]
        xmin = max(int(np.floor(min(p0[0], p1[0], p2[0]) - 0.5)), 0)
        xmax = min(int(np.ceil(max(p0[0], p1[0], p2[0]) + 0.5)), S - 1)
        ymin = max(int(np.floor(min(p0[1], p1[1], p2[1]) - 0.5)), 0)
        ymax = min(int(np.ceil(max(p0[1], p1[1], p2[1]) + 0.5)), S - 1)
        if xmin > xmax or ymin > ymax:
            continue
        det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        if abs(det) < 1e-12:
            continue
        xs, ys = np.meshgrid(np.arange(xmin, xmax + 1), np.arange(ymin, ymax + 1))
        px = xs + 0.5
        py = ys + 0.5
        w1 = ((px - p0[0]) * (p2[1] - p0[1]) - (py - p0[1]) * (p2[0] - p0[0])) / det
        w2 = ((p1[0] - p0[0]) * (py - p0[1]) - (p1[1] - p0[1]) * (px - p0[0])) / det
        w0 = 1.0 - w1 - w2
        inside = (w0 >= -1e-9) & (w1 >= -1e-9) & (w2 >= -1e-9)
        if not inside.any():
            continue
        w = np.stack([w0[inside], w1[inside], w2[inside]], axis=1)
        pos3d = w @ mesh.vertices[face]
        proj = camera.project(pos3d)
        colors = sample_bilinear_array(photo_f, proj[:, 0], proj[:, 1])
        yi = ys[inside]
        xi = xs[inside]
        new = ~covered[yi, xi]
        tex[yi[new], xi[new]] = colors[new]
        covered[yi[new], xi[new]] = True

    tex = _dilate_fill(tex, covered, passes=4)
    return Image.from_float(tex)


def _dilate_fill(tex: np.ndarray, covered: np.ndarray, passes: int) -> np.ndarray:
    for _ in range(passes):
        if covered.all():
            break
        acc = np.zeros_like(tex)
        cnt = np.zeros(covered.shape)
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            shifted = np.roll(tex, (dy, dx), axis=(0, 1))
            mask = np.roll(covered, (dy, dx), axis=(0, 1))
            acc += shifted * mask[..., None]
            cnt += mask
        fill = (~covered) & (cnt > 0)
        tex[fill] = acc[fill] / cnt[fill][:, None]
        covered = covered | fill
    return tex


def save_model(model: MorphableModel, path) -> None:
    """Write the MKMM1 binary container plus a JSON metadata sidecar."""
    path = Path(path)
    V = model.n_vertices
    K = model.n_components
    F = len(model.faces)
    blob = bytearray()
    blob += MODEL_MAGIC
    blob += struct.pack("<III", V, K, F)
    blob += model.mean.astype("<f8").tobytes()
    blob += model.basis.astype("<f8").tobytes()
    blob += model.sigma.astype("<f8").tobytes()
    blob += model.faces.astype("<i4").tobytes()
    blob += model.uvs.astype("<f8").tobytes()
    blob += model.landmark_vertex_ids.astype("<i4").tobytes()
    path.write_bytes(bytes(blob))
    meta = {"K": K, "V": V, "seed": model.seed}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2) + "\n")


def load_model(path) -> MorphableModel:
    path = Path(path)
    data = path.read_bytes()
    if data[:5] != MODEL_MAGIC:
        raise FittingError(f"{path}: bad model magic")
    V, K, F = struct.unpack_from("<III", data, 5)
    off = 5 + 12

    def take(count, dtype):
        nonlocal off
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=off)
        off += arr.nbytes
        return arr

    mean = take(3 * V, "<f8").astype(float)
    basis = take(3 * V * K, "<f8").astype(float).reshape(3 * V, K)
    sigma = take(K, "<f8").astype(float)
    faces = take(3 * F, "<i4").astype(np.int64).reshape(F, 3)
    uvs = take(2 * V, "<f8").astype(float).reshape(V, 2)
    lids = take(IBUG_POINT_COUNT, "<i4").astype(np.int64)

    seed = None
    sidecar = path.with_suffix(path.suffix + ".json")
    if sidecar.exists():
        seed = json.loads(sidecar.read_text()).get("seed")
    return MorphableModel(mean, basis, sigma, faces, uvs, lids, seed=seed)
