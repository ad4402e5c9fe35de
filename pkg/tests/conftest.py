import numpy as np
import pytest

from facemorph3d.image import Image
from facemorph3d.landmarks import LandmarkSet


def smooth_test_image(width, height, seed, amplitude=0.3):
    """Low-frequency synthetic photo; gentle gradients keep bilinear
    resampling error well under the morph tolerances."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    img = np.empty((height, width, 3))
    for c in range(3):
        fx, fy = rng.uniform(0.5, 1.0, 2) * 2 * np.pi / 60.0
        phase = rng.uniform(0, 2 * np.pi, 2)
        img[..., c] = 0.5 + amplitude * 0.5 * (
            np.sin(fx * xx + phase[0]) + np.cos(fy * yy + phase[1]))
    return Image.from_float(img)


def jittered_landmarks(width, height, seed, count=68, margin=12):
    """A grid of `count` interior points with deterministic jitter."""
    rng = np.random.default_rng(seed)
    cols = int(np.ceil(np.sqrt(count)))
    rows = int(np.ceil(count / cols))
    xs = np.linspace(margin, width - margin, cols)
    ys = np.linspace(margin, height - margin, rows)
    grid = np.array([(x, y) for y in ys for x in xs])[:count]
    spacing = min(xs[1] - xs[0], ys[1] - ys[0])
    jitter = rng.uniform(-0.3, 0.3, grid.shape) * spacing
    return LandmarkSet(grid + jitter, width, height)


def displaced_landmarks(lm, seed, max_shift=5.0):
    """Second expression: smooth bounded displacement of every landmark."""
    rng = np.random.default_rng(seed)
    pts = lm.points + rng.uniform(-max_shift, max_shift, lm.points.shape)
    pts[:, 0] = np.clip(pts[:, 0], 1.0, lm.image_width - 1.0)
    pts[:, 1] = np.clip(pts[:, 1], 1.0, lm.image_height - 1.0)
    return LandmarkSet(pts, lm.image_width, lm.image_height)


@pytest.fixture(scope="session")
def small_model():
    from facemorph3d.fitting import synthesize_model
    return synthesize_model(seed=1, K=10, resolution=500)


def make_pipeline_inputs(dirpath, seed=1, size=220, model_seed=1, K=10,
                         resolution=200):
    """Write a photo/landmark pair driven by a synthetic model to dirpath.

    Landmarks are projections of two random model instances under a fixed
    affine camera, so the fitting stage has a consistent solution.
    """
    from pathlib import Path

    from facemorph3d.fitting import instance_mesh, synthesize_model, AffineCamera
    from facemorph3d.image import save_image
    from facemorph3d.landmarks import LandmarkSet, write_pts

    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    model = synthesize_model(model_seed, K, resolution)
    rng = np.random.default_rng(seed)
    s = size / 220.0
    cam = AffineCamera(np.array([[0.9 * s, 0.02 * s, 0.1 * s, size / 2.0],
                                 [0.01 * s, -0.9 * s, 0.05 * s, size / 2.0]]))
    paths = {}
    for tag in ("a", "b"):
        alpha = rng.uniform(-1.2, 1.2, size=K)
        mesh = instance_mesh(model, alpha)
        pts2d = cam.project(mesh.vertices[model.landmark_vertex_ids])
        pts2d = np.clip(pts2d, 1.0, size - 1.0)
        photo = smooth_test_image(size, size, seed + (0 if tag == "a" else 77))
        photo_path = dirpath / f"photo_{tag}.png"
        pts_path = dirpath / f"landmarks_{tag}.pts"
        save_image(photo, photo_path)
        pts_path.write_text(write_pts(LandmarkSet(pts2d, size, size)))
        paths[f"photo_{tag}"] = photo_path
        paths[f"landmarks_{tag}"] = pts_path
    return paths
