"""3D facial expression interpolation from landmark-annotated photo pairs."""

from .geometry import (
    BarycentricWeights,
    Triangulation,
    barycentric_coords,
    circumcircle_contains,
    delaunay_triangulate,
    locate_point,
)
from .image import Image, load_image, sample_bilinear, save_image
from .landmarks import LandmarkSet, add_boundary_anchors, parse_pts, write_pts
from .mesh import TriangleMesh, compute_vertex_normals, interpolate_mesh, load_obj, same_topology, save_obj
from .morph2d import MorphMapping, build_correspondence, interpolate_landmarks, warp_blend
from .fitting import (
    AffineCamera,
    MorphableModel,
    ShapeCoefficients,
    estimate_affine_camera,
    extract_texture,
    fit_from_photo_landmarks,
    fit_shape,
    instance_mesh,
    load_model,
    save_model,
    synthesize_model,
)
from .render import Material, RenderParams, phong_shade, rasterize
from .pipeline import BenchReport, PipelineConfig, parse_config, run_animation, run_bench

__version__ = "0.1.0"
