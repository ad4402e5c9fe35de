"""End-to-end orchestration: fit both faces, morph textures, interpolate
meshes, render frames; plus the mesh-interpolation benchmark."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import fitting, morph2d, render
from .image import Image, load_image, save_image
from .landmarks import LandmarkSet, add_boundary_anchors, parse_pts
from .mesh import TriangleMesh, compute_vertex_normals, interpolate_mesh

DEFAULT_BENCH_COUNTS = (3448, 16759, 29587)


class ConfigError(ValueError):
    """Carries every validation problem found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


class PipelineError(RuntimeError):
    def __init__(self, stage: str, t: float | None, cause: Exception):
        self.stage = stage
        self.t = t
        at = f" at t={t:g}" if t is not None else ""
        super().__init__(f"stage '{stage}'{at} failed: {cause}")


@dataclass
class PipelineConfig:
    photo_a: str = ""
    photo_b: str = ""
    landmarks_a: str = ""
    landmarks_b: str = ""
    model: str = ""                    # model file; empty selects synth
    synth: tuple = (1, 10, 3448)       # (seed, K, resolution)
    t_start: float = 0.0
    t_end: float = 1.0
    t_step: float = 0.1
    morph_space: str = "texture"       # "texture" or "photo"
    output_dir: str = "out"
    frame_width: int = 256
    frame_height: int = 256
    texture_size: int = 256
    yaw_degrees: float = 0.0
    lam: float = 0.1
    iterations: int = 3
    dump_triangulation: bool = False

    def schedule(self) -> list[float]:
        count = int(np.floor((self.t_end - self.t_start) / self.t_step + 1e-9)) + 1
        return [min(self.t_start + k * self.t_step, 1.0) for k in range(count)]


_CONFIG_DEFAULTS = PipelineConfig()
_FLOAT_KEYS = {"t_start", "t_end", "t_step", "lam", "yaw_degrees"}
_INT_KEYS = {"frame_width", "frame_height", "texture_size", "iterations"}
_BOOL_KEYS = {"dump_triangulation"}
_PATH_KEYS = ("photo_a", "photo_b", "landmarks_a", "landmarks_b")


def parse_config(path=None, overrides: dict | None = None,
                 require_inputs: bool = True) -> PipelineConfig:
    """Build a validated config from a key=value file plus flag overrides.

    Flags win over the file; unknown keys warn rather than fail; all
    validation problems are reported together.
    """
    import warnings

    values: dict = {}
    problems: list[str] = []
    if path is not None:
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                problems.append(f"{path}:{lineno}: expected key = value")
                continue
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip().strip('"').strip("'")
            if not hasattr(_CONFIG_DEFAULTS, key):
                warnings.warn(f"{path}:{lineno}: unknown config key {key!r}")
                continue
            values[key] = val
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val

    cfg = PipelineConfig()
    for key, val in values.items():
        try:
            if key in _FLOAT_KEYS:
                val = float(val)
            elif key in _INT_KEYS:
                val = int(val)
            elif key in _BOOL_KEYS and isinstance(val, str):
                val = val.lower() in ("1", "true", "yes")
            elif key == "synth" and isinstance(val, str):
                val = tuple(int(x) for x in val.split(","))
        except ValueError:
            problems.append(f"{key}: cannot parse value {val!r}")
            continue
        setattr(cfg, key, val)

    if cfg.t_step <= 0:
        problems.append(f"t_step must be > 0, got {cfg.t_step}")
    if not 0.0 <= cfg.t_start <= cfg.t_end <= 1.0:
        problems.append(f"need 0 <= t_start <= t_end <= 1, got [{cfg.t_start}, {cfg.t_end}]")
    if cfg.morph_space not in ("texture", "photo"):
        problems.append(f"morph_space must be 'texture' or 'photo', got {cfg.morph_space!r}")
    if len(cfg.synth) != 3:
        problems.append(f"synth must be seed,K,resolution, got {cfg.synth!r}")
    if cfg.iterations < 1:
        problems.append("iterations must be >= 1")
    if cfg.lam < 0:
        problems.append("lambda must be >= 0")
    if require_inputs:
        for key in _PATH_KEYS:
            val = getattr(cfg, key)
            if not val:
                problems.append(f"{key} is required")
            elif not Path(val).exists():
                problems.append(f"{key}: no such file: {val}")
        if cfg.model and not Path(cfg.model).exists():
            problems.append(f"model: no such file: {cfg.model}")
    if problems:
        raise ConfigError(problems)
    return cfg


def _load_inputs(cfg: PipelineConfig):
    photo_a = load_image(cfg.photo_a)
    photo_b = load_image(cfg.photo_b)
    lm_a = parse_pts(Path(cfg.landmarks_a).read_text(), photo_a.width, photo_a.height)
    lm_b = parse_pts(Path(cfg.landmarks_b).read_text(), photo_b.width, photo_b.height)
    return photo_a, photo_b, lm_a, lm_b


def _load_model(cfg: PipelineConfig) -> fitting.MorphableModel:
    if cfg.model:
        return fitting.load_model(cfg.model)
    seed, K, resolution = cfg.synth
    return fitting.synthesize_model(seed, K, resolution)


def run_animation(cfg: PipelineConfig) -> list[Path]:
    """Produce the frame sequence plus a JSON manifest.

    Any stage failure aborts with the stage name and t value; frames already
    written stay on disk and the manifest is marked incomplete.
    """
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"config": asdict(cfg), "frames": [], "complete": False}
    manifest_path = out_dir / "manifest.json"

    def fail(stage, t, exc):
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
        raise PipelineError(stage, t, exc) from exc

    try:
        photo_a, photo_b, lm_a, lm_b = _load_inputs(cfg)
    except Exception as exc:
        fail("load-inputs", None, exc)
    if (photo_a.width, photo_a.height) != (photo_b.width, photo_b.height):
        fail("load-inputs", None,
             ValueError("photos differ in size; resize B to A's dimensions first"))

    try:
        model = _load_model(cfg)
    except Exception as exc:
        fail("load-model", None, exc)

    try:
        cam_a, _, mesh_a = fitting.fit_from_photo_landmarks(model, lm_a, cfg.lam, cfg.iterations)
        cam_b, _, mesh_b = fitting.fit_from_photo_landmarks(model, lm_b, cfg.lam, cfg.iterations)
    except Exception as exc:
        fail("fit", None, exc)

    params = render.RenderParams(width=cfg.frame_width, height=cfg.frame_height,
                                 yaw_degrees=cfg.yaw_degrees)

    if cfg.morph_space == "texture":
        try:
            tex_a = fitting.extract_texture(mesh_a, cam_a, photo_a, cfg.texture_size)
            tex_b = fitting.extract_texture(mesh_b, cam_b, photo_b, cfg.texture_size)
            # Landmarks in texture space: the shared atlas positions of the
            # model's landmark vertices (identical for both faces).
            uv = model.uvs[model.landmark_vertex_ids]
            tex_pts = np.stack([uv[:, 0] * cfg.texture_size,
                                (1.0 - uv[:, 1]) * cfg.texture_size], axis=1)
            tl = add_boundary_anchors(
                LandmarkSet(tex_pts, cfg.texture_size, cfg.texture_size))
            mapping = morph2d.build_correspondence(tl, tl)
        except Exception as exc:
            fail("texture", None, exc)
    else:
        try:
            mapping = morph2d.build_correspondence(add_boundary_anchors(lm_a),
                                                   add_boundary_anchors(lm_b))
        except Exception as exc:
            fail("correspondence", None, exc)

    if cfg.dump_triangulation:
        from .geometry import Triangulation
        mid = (mapping.landmarks_a + mapping.landmarks_b) / 2.0
        tri = Triangulation(points=mid, triangles=mapping.shared_triangles)
        (out_dir / "triangulation.tris").write_text(tri.to_text())

    frame_paths: list[Path] = []
    for k, t in enumerate(cfg.schedule()):
        started = time.perf_counter()
        try:
            mesh_t = interpolate_mesh(mesh_a, mesh_b, t)
            if cfg.morph_space == "texture":
                texture = morph2d.warp_blend(tex_a, tex_b, mapping, t)
            else:
                morphed_photo = morph2d.warp_blend(photo_a, photo_b, mapping, t)
                cam_t = fitting.AffineCamera((1.0 - t) * cam_a.P + t * cam_b.P)
                texture = fitting.extract_texture(mesh_t, cam_t, morphed_photo,
                                                  cfg.texture_size)
            frame = render.rasterize(mesh_t, texture, params)
        except Exception as exc:
            fail("frame", t, exc)
        path = out_dir / f"frame_{k:03d}.png"
        save_image(frame, path)
        frame_paths.append(path)
        manifest["frames"].append({
            "t": t,
            "file": path.name,
            "ms": (time.perf_counter() - started) * 1000.0,
        })

    manifest["complete"] = True
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return frame_paths


@dataclass(frozen=True)
class BenchRow:
    vertex_count: int
    mean_ms: float
    std_ms: float
    iterations: int


@dataclass(frozen=True)
class BenchReport:
    rows: list

    def __post_init__(self):
        counts = [r.vertex_count for r in self.rows]
        if counts != sorted(counts) or len(set(counts)) != len(counts):
            raise ValueError("vertex counts must be strictly increasing")
        if any(r.mean_ms <= 0 for r in self.rows):
            raise ValueError("timings must be positive")

    def to_csv(self) -> str:
        lines = ["vertices,mean_ms,std_ms,iters"]
        for r in self.rows:
            lines.append(f"{r.vertex_count},{r.mean_ms:.4f},{r.std_ms:.4f},{r.iterations}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        lines = [f"{'vertices':>10} {'mean ms':>10} {'std ms':>10} {'iters':>6}"]
        for r in self.rows:
            lines.append(f"{r.vertex_count:>10} {r.mean_ms:>10.3f} {r.std_ms:>10.3f} "
                         f"{r.iterations:>6}")
        return "\n".join(lines) + "\n"


def run_bench(vertex_counts=DEFAULT_BENCH_COUNTS, iterations: int = 50,
              warmup: int = 5, seed: int = 1) -> BenchReport:
    """Time one mesh interpolation per iteration, excluding I/O and rendering.

    Mesh pairs are pre-built; timings use the monotonic clock with warmup
    runs excluded. Single-threaded by design for stable numbers.
    """
    if iterations < 10:
        raise ValueError("need at least 10 iterations")
    counts = sorted(int(c) for c in vertex_counts)
    rows = []
    for count in counts:
        model = fitting.synthesize_model(seed, 10, count)
        rng = np.random.default_rng(seed)
        mesh_a = fitting.instance_mesh(model, rng.uniform(-1.5, 1.5, 10))
        mesh_b = fitting.instance_mesh(model, rng.uniform(-1.5, 1.5, 10))
        ts = np.linspace(0.0, 1.0, warmup + iterations)
        samples = []
        for i, t in enumerate(ts):
            started = time.perf_counter()
            interpolate_mesh(mesh_a, mesh_b, float(t))
            elapsed = (time.perf_counter() - started) * 1000.0
            if i >= warmup:
                samples.append(elapsed)
        samples = np.array(samples)
        rows.append(BenchRow(count, float(samples.mean()), float(samples.std()),
                             iterations))
    return BenchReport(rows)
