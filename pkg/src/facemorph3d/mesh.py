"""Indexed triangle meshes: OBJ interchange, topology checks, vertex normals,
and linear interpolation between same-topology meshes."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class MeshError(ValueError):
    pass


class TopologyMismatchError(MeshError):
    pass


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray          # (v, 3) float64, model units
    uvs: np.ndarray               # (v, 2) float64 in [0,1]^2
    faces: np.ndarray             # (f, 3) int64
    normals: np.ndarray | None = None  # (v, 3) unit vectors, optional

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float).reshape(-1, 3))
        uv = np.ascontiguousarray(np.asarray(self.uvs, dtype=float).reshape(-1, 2))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64).reshape(-1, 3))
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "uvs", uv)
        object.__setattr__(self, "faces", f)
        if len(uv) != len(v):
            raise MeshError(f"{len(uv)} uvs for {len(v)} vertices")
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        if self.normals is not None:
            nrm = np.asarray(self.normals, dtype=float).reshape(-1, 3)
            if len(nrm) != len(v):
                raise MeshError("normal count does not match vertex count")
            lengths = np.linalg.norm(nrm, axis=1)
            if np.abs(lengths - 1.0).max() > 1e-6:
                raise MeshError("normals must be unit length")
            object.__setattr__(self, "normals", nrm)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def same_topology(a: TriangleMesh, b: TriangleMesh) -> bool:
    """True iff vertex counts match and face index lists are identical in order."""
    return (
        a.n_vertices == b.n_vertices
        and a.faces.shape == b.faces.shape
        and bool(np.array_equal(a.faces, b.faces))
    )


def interpolate_mesh(a: TriangleMesh, b: TriangleMesh, t: float) -> TriangleMesh:
    """Linear vertex blend (1-t)*a + t*b under shared connectivity.

    Faces and uvs are taken from a (the pair must agree); normals are
    recomputed from the blended geometry.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation factor {t} outside [0, 1]")
    if not same_topology(a, b):
        raise TopologyMismatchError("meshes differ in vertex count or connectivity")
    if np.abs(a.uvs - b.uvs).max(initial=0.0) > 1e-9:
        raise TopologyMismatchError("meshes must share one uv layout")
    verts = (1.0 - t) * a.vertices + t * b.vertices
    return compute_vertex_normals(TriangleMesh(verts, a.uvs, a.faces))


def compute_vertex_normals(mesh: TriangleMesh) -> TriangleMesh:
    """Area-weighted vertex normals; degenerate (zero-sum) vertices get (0,0,1)."""
    v = mesh.vertices
    f = mesh.faces
    fn = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])  # 2*area weighting
    acc = np.zeros_like(v)
    for c in range(3):
        for axis in range(3):
            acc[:, axis] += np.bincount(f[:, c], weights=fn[:, axis], minlength=len(v))
    lengths = np.linalg.norm(acc, axis=1)
    zero = lengths < 1e-30
    if zero.any():
        warnings.warn(f"{int(zero.sum())} vertices with zero normal sum; using (0,0,1)")
        acc[zero] = (0.0, 0.0, 1.0)
        lengths[zero] = 1.0
    normals = acc / lengths[:, None]
    return TriangleMesh(v, mesh.uvs, f, normals)


def load_obj(text: str) -> TriangleMesh:
    """Parse the OBJ subset: v, vt, f (with 1-based a or a/b references).

    Quads are fan-triangulated with a warning; unsupported directives are
    skipped with a warning.
    """
    verts, uvs, faces = [], [], []
    uv_of_vertex: dict[int, int] = {}
    skipped: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif tag == "vt":
            uvs.append([float(x) for x in parts[1:3]])
        elif tag == "f":
            refs = []
            for token in parts[1:]:
                fields = token.split("/")
                vi = int(fields[0])
                ti = int(fields[1]) if len(fields) > 1 and fields[1] else vi
                refs.append((vi - 1, ti - 1))
            if len(refs) < 3:
                raise MeshError(f"line {lineno}: face with fewer than 3 vertices")
            if len(refs) > 3:
                warnings.warn(f"line {lineno}: {len(refs)}-gon fan-triangulated")
            for i in range(1, len(refs) - 1):
                faces.append((refs[0], refs[i], refs[i + 1]))
        else:
            skipped.add(tag)
    if skipped:
        warnings.warn(f"skipped unsupported OBJ directives: {sorted(skipped)}")

    nv = len(verts)
    for tri in faces:
        for vi, ti in tri:
            if not 0 <= vi < nv:
                raise MeshError(f"face references vertex {vi + 1} of {nv}")
            if uvs and not 0 <= ti < len(uvs):
                raise MeshError(f"face references uv {ti + 1} of {len(uvs)}")
            uv_of_vertex.setdefault(vi, ti)

    vert_arr = np.array(verts, dtype=float).reshape(nv, 3)
    if uvs:
        uv_arr = np.zeros((nv, 2))
        for vi in range(nv):
            uv_arr[vi] = uvs[uv_of_vertex.get(vi, 0)] if uvs else (0.0, 0.0)
    else:
        uv_arr = np.zeros((nv, 2))
    face_arr = np.array([[vi for vi, _ in tri] for tri in faces], dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(vert_arr, uv_arr, face_arr)


def save_obj(mesh: TriangleMesh) -> str:
    """Emit v/vt/f lines; uv indices equal position indices by construction.

    Normals are derived data and intentionally never written.
    """
    out = []
    for x, y, z in mesh.vertices:
        out.append(f"v {x:.6f} {y:.6f} {z:.6f}")
    for u, v in mesh.uvs:
        out.append(f"vt {u:.6f} {v:.6f}")
    for a, b, c in mesh.faces + 1:
        out.append(f"f {a}/{a} {b}/{b} {c}/{c}")
    return "\n".join(out) + "\n"
