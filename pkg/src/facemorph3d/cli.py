"""Command-line interface: each pipeline step is individually invocable.

Subcommands: fit, morph2d, interp, render, animate, bench, synth-model.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np


def _add_model_flags(p):
    p.add_argument("--model", default=None, help="path to an MKMM1 model file")
    p.add_argument("--synth", default=None, metavar="SEED,K,V",
                   help="synthesize a model instead of loading one")


def _add_fit_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="shape regularization weight (default 0.1)")
    p.add_argument("--iterations", type=int, default=None,
                   help="camera/shape alternation rounds (default 3)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="facemorph3d",
                                 description="3D facial expression interpolation pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-model", help="write a synthetic morphable model")
    p.add_argument("--synth", required=True, metavar="SEED,K,V")
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit a face model to one photo + landmarks")
    p.add_argument("--photo-a", required=True)
    p.add_argument("--landmarks-a", required=True)
    _add_model_flags(p)
    _add_fit_flags(p)
    p.add_argument("--texture-size", type=int, default=256)
    p.add_argument("--out", required=True, help="output directory (OBJ + texture PNG)")

    p = sub.add_parser("morph2d", help="morph two photos in image space")
    p.add_argument("--photo-a", required=True)
    p.add_argument("--photo-b", required=True)
    p.add_argument("--landmarks-a", required=True)
    p.add_argument("--landmarks-b", required=True)
    p.add_argument("--t-start", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--t-step", type=float, default=0.1)
    p.add_argument("--resize-b-to-a", action="store_true",
                   help="resample photo B to A's dimensions first")
    p.add_argument("--dump-triangulation", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("interp", help="linearly interpolate two OBJ meshes")
    p.add_argument("--mesh-a", required=True)
    p.add_argument("--mesh-b", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--out", required=True, help="output OBJ path")

    p = sub.add_parser("render", help="render one OBJ with a texture")
    p.add_argument("--mesh", required=True)
    p.add_argument("--texture", required=True)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--yaw", type=float, default=0.0, help="90 for the side view")
    p.add_argument("--out", required=True, help="output PNG path")

    p = sub.add_parser("animate", help="full pipeline: fit, morph, interpolate, render")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--photo-a")
    p.add_argument("--photo-b")
    p.add_argument("--landmarks-a")
    p.add_argument("--landmarks-b")
    _add_model_flags(p)
    _add_fit_flags(p)
    p.add_argument("--t-start", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--t-step", type=float, default=None)
    p.add_argument("--morph-space", choices=("photo", "texture"), default=None)
    p.add_argument("--dump-triangulation", action="store_true", default=None)
    p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("bench", help="time mesh interpolation at several resolutions")
    p.add_argument("--bench-counts", default="3448,16759,29587", metavar="N,N,...")
    p.add_argument("--bench-iters", type=int, default=50)
    p.add_argument("--out", default=None, help="CSV output path (table prints to stdout)")

    return ap


def _parse_synth(spec: str):
    parts = spec.split(",")
    if len(parts) != 3:
        raise SystemExit(f"--synth expects SEED,K,V, got {spec!r}")
    return tuple(int(x) for x in parts)


def _load_model_arg(args):
    from . import fitting

    if args.model:
        return fitting.load_model(args.model)
    synth = _parse_synth(args.synth) if args.synth else (1, 10, 3448)
    return fitting.synthesize_model(*synth)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    from . import fitting, morph2d, pipeline, render
    from .image import load_image, save_image
    from .landmarks import add_boundary_anchors, parse_pts
    from .mesh import compute_vertex_normals, interpolate_mesh, load_obj, save_obj

    if args.command == "synth-model":
        model = fitting.synthesize_model(*_parse_synth(args.synth))
        fitting.save_model(model, args.out)
        print(f"wrote {args.out} ({model.n_vertices} vertices, {model.n_components} components)")
        return 0

    if args.command == "fit":
        photo = load_image(args.photo_a)
        lm = parse_pts(Path(args.landmarks_a).read_text(), photo.width, photo.height)
        model = _load_model_arg(args)
        lam = 0.1 if args.lam is None else args.lam
        iters = 3 if args.iterations is None else args.iterations
        camera, alpha, mesh = fitting.fit_from_photo_landmarks(model, lm, lam, iters)
        texture = fitting.extract_texture(mesh, camera, photo, args.texture_size)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "fitted.obj").write_text(save_obj(mesh))
        save_image(texture, out / "texture.png")
        rmse = fitting.reprojection_rmse(
            camera, mesh.vertices[model.landmark_vertex_ids], lm.points)
        print(f"fit RMSE {rmse:.3f} px; wrote {out / 'fitted.obj'} and {out / 'texture.png'}")
        return 0

    if args.command == "morph2d":
        photo_a = load_image(args.photo_a)
        photo_b = load_image(args.photo_b)
        if (photo_b.width, photo_b.height) != (photo_a.width, photo_a.height):
            if not args.resize_b_to_a:
                raise ValueError("photos differ in size; pass --resize-b-to-a to resample")
            from PIL import Image as PILImage
            from .image import Image as Img
            resized = PILImage.fromarray(photo_b.pixels).resize(
                (photo_a.width, photo_a.height), PILImage.BILINEAR)
            photo_b = Img(np.asarray(resized))
        lm_a = parse_pts(Path(args.landmarks_a).read_text(), photo_a.width, photo_a.height)
        lm_b = parse_pts(Path(args.landmarks_b).read_text(), photo_b.width, photo_b.height)
        mapping = morph2d.build_correspondence(add_boundary_anchors(lm_a),
                                               add_boundary_anchors(lm_b))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.dump_triangulation:
            from .geometry import Triangulation
            mid = (mapping.landmarks_a + mapping.landmarks_b) / 2.0
            tri = Triangulation(points=mid, triangles=mapping.shared_triangles)
            (out / "triangulation.tris").write_text(tri.to_text())
        count = int(np.floor((args.t_end - args.t_start) / args.t_step + 1e-9)) + 1
        for k in range(count):
            t = min(args.t_start + k * args.t_step, 1.0)
            frame = morph2d.warp_blend(photo_a, photo_b, mapping, t)
            save_image(frame, out / f"frame_{k:03d}.png")
        print(f"wrote {count} frames to {out}")
        return 0

    if args.command == "interp":
        mesh_a = load_obj(Path(args.mesh_a).read_text())
        mesh_b = load_obj(Path(args.mesh_b).read_text())
        mesh_t = interpolate_mesh(mesh_a, mesh_b, args.t)
        Path(args.out).write_text(save_obj(mesh_t))
        print(f"wrote {args.out}")
        return 0

    if args.command == "render":
        mesh = compute_vertex_normals(load_obj(Path(args.mesh).read_text()))
        texture = load_image(args.texture)
        params = render.RenderParams(width=args.width, height=args.height,
                                     yaw_degrees=args.yaw)
        frame = render.rasterize(mesh, texture, params)
        save_image(frame, args.out)
        print(f"wrote {args.out}")
        return 0

    if args.command == "animate":
        overrides = {
            "photo_a": args.photo_a, "photo_b": args.photo_b,
            "landmarks_a": args.landmarks_a, "landmarks_b": args.landmarks_b,
            "model": args.model, "synth": args.synth,
            "t_start": args.t_start, "t_end": args.t_end, "t_step": args.t_step,
            "morph_space": args.morph_space, "output_dir": args.out,
            "lam": args.lam, "iterations": args.iterations,
            "dump_triangulation": args.dump_triangulation,
        }
        cfg = pipeline.parse_config(args.config, overrides)
        frames = pipeline.run_animation(cfg)
        print(f"wrote {len(frames)} frames to {cfg.output_dir}")
        return 0

    if args.command == "bench":
        counts = [int(x) for x in args.bench_counts.split(",")]
        report = pipeline.run_bench(counts, args.bench_iters)
        print(report.to_table(), end="")
        if args.out:
            Path(args.out).write_text(report.to_csv())
            print(f"wrote {args.out}")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
