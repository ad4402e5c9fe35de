import numpy as np
import pytest

from facemorph3d.fitting import AffineCamera
from facemorph3d.image import Image
from facemorph3d.mesh import TriangleMesh, compute_vertex_normals
from facemorph3d.render import Material, RenderParams, phong_shade, rasterize

from conftest import smooth_test_image

FLAT = np.array([0.0, 0.0, 1.0])

# Identity camera: model (x, y) land directly on pixel coordinates, and the
# depth convention makes smaller z nearer (image-space camera looks along +z).
IDENTITY_CAM = AffineCamera(np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]]))


def flat_quad(w, h, z=0.0):
    """Two-triangle quad covering pixel rect [0,w]x[0,h] with aligned uvs."""
    verts = np.array([(0, 0, z), (w, 0, z), (w, h, z), (0, h, z)], dtype=float)
    uvs = np.array([(0, 1), (1, 1), (1, 0), (0, 0)], dtype=float)  # v flipped: texture row 0 at top
    faces = np.array([(0, 1, 2), (0, 2, 3)])
    normals = np.tile(FLAT, (4, 1))
    return TriangleMesh(verts, uvs, faces, normals)


# ------------------------------------------------------------------- phong

def test_phong_aligned_no_specular():
    mat = Material(ambient=0.1, diffuse=0.9, specular=0.0)
    texel = np.array([0.2, 0.5, 0.8])
    out = phong_shade(FLAT, FLAT, FLAT, mat, texel)
    assert np.allclose(out, texel, atol=1e-12)


def test_phong_backfacing_light():
    mat = Material(ambient=0.2, diffuse=0.7, specular=0.5)
    texel = np.array([0.4, 0.4, 0.4])
    out = phong_shade(FLAT, -FLAT, FLAT, mat, texel)
    assert np.allclose(out, 0.2 * texel, atol=1e-12)


def test_phong_mirror_specular():
    mat = Material(ambient=0.0, diffuse=0.5, specular=0.5, shininess=32)
    texel = np.array([0.3, 0.3, 0.3])
    out = phong_shade(FLAT, FLAT, FLAT, mat, texel)
    assert np.allclose(out, 0.5 * texel + 0.5, atol=1e-12)


def test_phong_clamped():
    mat = Material(ambient=1.0, diffuse=1.0, specular=1.0, shininess=1)
    out = phong_shade(FLAT, FLAT, FLAT, mat, np.ones(3))
    assert np.allclose(out, 1.0)


def test_material_validation():
    with pytest.raises(ValueError):
        Material(ambient=-0.1)
    with pytest.raises(ValueError):
        Material(shininess=0.5)
    with pytest.raises(ValueError):
        RenderParams(light_direction=(0, 0, 2))


# ---------------------------------------------------------------- rasterize

def passthrough_params(w, h):
    return RenderParams(
        width=w, height=h, camera=IDENTITY_CAM,
        material=Material(ambient=0.15, diffuse=0.85, specular=0.0),
    )


def test_passthrough_reproduces_texture():
    w = h = 64
    texture = smooth_test_image(w, h, seed=1)
    frame = rasterize(flat_quad(w, h), texture, passthrough_params(w, h))
    diff = np.abs(frame.pixels.astype(int) - texture.pixels.astype(int))
    assert diff.max() <= 2  # ka+kd = 1, frontal light: texel passes through


def test_depth_test_smaller_z_wins():
    w = h = 32
    # Red texture on the near (z=0.2) quad area, blue on the far (z=0.8):
    # encode via uv halves of a split texture.
    tex = np.zeros((2, 2, 3), dtype=np.uint8)
    tex[:, 0] = (255, 0, 0)
    tex[:, 1] = (0, 0, 255)
    texture = Image(tex)

    def quad(z, u):
        verts = np.array([(0, 0, z), (w, 0, z), (w, h, z), (0, h, z)], dtype=float)
        uvs = np.full((4, 2), (u, 0.5))
        faces = np.array([(0, 1, 2), (0, 2, 3)])
        return verts, uvs, faces

    va, uva, fa = quad(0.2, 0.25)   # near, red
    vb, uvb, fb = quad(0.8, 0.75)   # far, blue
    mesh = TriangleMesh(np.vstack([va, vb]), np.vstack([uva, uvb]),
                        np.vstack([fa, fb + 4]), np.tile(FLAT, (8, 1)))
    frame = rasterize(mesh, texture, passthrough_params(w, h))
    center = frame.pixels[h // 2, w // 2]
    assert center[0] > 200 and center[2] < 50  # near quad's red wins


def test_draw_order_permutation_invariance():
    w = h = 48
    texture = smooth_test_image(16, 16, seed=2)
    rng = np.random.default_rng(3)
    verts = rng.uniform(0, w, size=(12, 2))
    z = rng.uniform(-1, 1, size=12)
    v3 = np.column_stack([verts, z])
    uvs = rng.uniform(0, 1, size=(12, 2))
    faces = np.arange(12).reshape(4, 3)
    normals = np.tile(FLAT, (12, 1))
    params = passthrough_params(w, h)
    base = rasterize(TriangleMesh(v3, uvs, faces, normals), texture, params)
    for perm in ([1, 0, 3, 2], [3, 2, 1, 0], [2, 0, 3, 1]):
        out = rasterize(TriangleMesh(v3, uvs, faces[perm], normals), texture, params)
        assert np.array_equal(out.pixels, base.pixels)


def test_shared_edge_drawn_once():
    # A quad split along its diagonal, each half sampling a different solid
    # color; swapping face order must not change any pixel (top-left rule
    # assigns every edge pixel to exactly one triangle).
    w = h = 40
    tex = np.zeros((2, 2, 3), dtype=np.uint8)
    tex[:, 0] = (255, 0, 0)
    tex[:, 1] = (0, 255, 0)
    texture = Image(tex)
    verts = np.array([(0, 0, 0), (w, 0, 0), (w, h, 0), (0, h, 0)], dtype=float)
    normals = np.tile(FLAT, (4, 1))
    params = passthrough_params(w, h)

    def render(order):
        faces = np.array([(0, 1, 2), (0, 2, 3)])[order]
        uvs = np.array([(0.25, 0.5), (0.25, 0.5), (0.25, 0.5), (0.75, 0.5)])
        return rasterize(TriangleMesh(verts, uvs, faces, normals), texture, params)

    assert np.array_equal(render([0, 1]).pixels, render([1, 0]).pixels)


def test_watertight_no_holes():
    w = h = 50
    texture = Image.constant(4, 4, (255, 255, 255))
    frame = rasterize(flat_quad(w, h), texture,
                      RenderParams(width=w, height=h, camera=IDENTITY_CAM,
                                   material=Material(ambient=1.0, diffuse=0.0,
                                                     specular=0.0),
                                   background=(0, 0, 0)))
    assert (frame.pixels == 255).all()  # every pixel covered exactly


def test_coverage_matches_area():
    w = h = 200
    texture = Image.constant(2, 2, (255, 255, 255))
    verts = np.array([(10.0, 10.0, 0.0), (190.0, 30.0, 0.0), (60.0, 170.0, 0.0)])
    e1 = verts[1, :2] - verts[0, :2]
    e2 = verts[2, :2] - verts[0, :2]
    area = abs(e1[0] * e2[1] - e1[1] * e2[0]) / 2.0
    mesh = TriangleMesh(verts, np.full((3, 2), 0.5), np.array([(0, 1, 2)]),
                        np.tile(FLAT, (3, 1)))
    frame = rasterize(mesh, texture,
                      RenderParams(width=w, height=h, camera=IDENTITY_CAM,
                                   material=Material(ambient=1.0, diffuse=0.0,
                                                     specular=0.0)))
    covered = (frame.pixels[..., 0] > 0).sum()
    assert abs(covered - area) <= 0.02 * area


def test_shading_bounds_no_specular():
    w = h = 64
    texture = smooth_test_image(16, 16, seed=4)
    mat = Material(ambient=0.2, diffuse=0.6, specular=0.0)
    rng = np.random.default_rng(5)
    verts = np.column_stack([rng.uniform(0, w, size=(30, 2)),
                             rng.uniform(-1, 1, size=30)])
    from scipy.spatial import Delaunay
    faces = Delaunay(verts[:, :2]).simplices
    mesh = compute_vertex_normals(TriangleMesh(verts, rng.uniform(0, 1, (30, 2)), faces))
    frame = rasterize(mesh, texture,
                      RenderParams(width=w, height=h, camera=IDENTITY_CAM,
                                   material=mat, background=(0, 0, 0)))
    limit = (mat.ambient + mat.diffuse) * texture.as_float().max()
    assert frame.as_float().max() <= limit + 1.0 / 255.0


def test_frame_determinism_and_orthographic_yaw():
    rng = np.random.default_rng(6)
    verts = rng.uniform(-10, 10, size=(25, 3))
    from scipy.spatial import Delaunay
    faces = Delaunay(verts[:, :2]).simplices
    mesh = compute_vertex_normals(
        TriangleMesh(verts, rng.uniform(0, 1, (25, 2)), faces))
    texture = smooth_test_image(16, 16, seed=7)
    params = RenderParams(width=64, height=64, yaw_degrees=90.0)
    one = rasterize(mesh, texture, params)
    two = rasterize(mesh, texture, params)
    assert np.array_equal(one.pixels, two.pixels)
    front = rasterize(mesh, texture, RenderParams(width=64, height=64))
    assert not np.array_equal(one.pixels, front.pixels)


def test_rasterize_requires_normals():
    mesh = flat_quad(8, 8)
    stripped = TriangleMesh(mesh.vertices, mesh.uvs, mesh.faces)
    with pytest.raises(ValueError, match="normals"):
        rasterize(stripped, Image.constant(2, 2, (0, 0, 0)),
                  RenderParams(width=8, height=8))
