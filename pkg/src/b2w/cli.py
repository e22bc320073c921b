"""Command-line entry point: decompose, render-depth, edit, badge, render, eval, serve."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import bridge
from .core import DEFAULT_BUDGET, GeometryError, SceneError, default_camera
from .decompose import FitConfig, decompose, load_fit_config
from .edit import TextureBadge, apply_script, move_badge
from .io import (
    DocumentError,
    RasterFormatError,
    image_to_png_bytes,
    ids_to_png16_bytes,
    load_camera_config,
    load_scene,
    mask_to_png_bytes,
    png_bytes_to_image,
    png_bytes_to_mask,
    read_depth_file,
    save_scene,
    write_depth_file,
)
from .metrics import MetricsError, evaluate_batch, read_manifest
from .raytrace import render_depth
from .report import format_depth_table, write_eval_report, write_fit_report

_ERROR_CODES = (
    (DocumentError, "scene-core.document"),
    (GeometryError, "scene-core.geometry"),
    (SceneError, "scene-core.scene"),
    (RasterFormatError, "raytracer.raster"),
    (MetricsError, "metrics.invalid"),
    (bridge.ProtocolError, "render-bridge.protocol"),
    (bridge.RenderTimeoutError, "render-bridge.timeout"),
    (bridge.RenderTransportError, "render-bridge.transport"),
    (bridge.RenderServerError, "render-bridge.renderer"),
    (FileNotFoundError, "cli.missing-file"),
    (ValueError, "cli.invalid"),
)


def _diagnose(e: Exception) -> str:
    for cls, code in _ERROR_CODES:
        if isinstance(e, cls):
            return f"error[{code}]: {e}"
    return f"error[cli.unexpected]: {type(e).__name__}: {e}"


def _renderer_endpoint(args) -> str:
    if getattr(args, "stub", False):
        return "stub"
    if getattr(args, "endpoint", None):
        return args.endpoint
    env = os.environ.get(bridge.ENV_RENDERER_URL)
    if env:
        return env
    raise SceneError(f"no renderer: pass --stub, --endpoint, or set {bridge.ENV_RENDERER_URL}")


def _cmd_decompose(args) -> int:
    depth = read_depth_file(args.depth)
    if args.camera:
        camera = load_camera_config(args.camera)
        if (camera.width, camera.height) != (depth.width, depth.height):
            raise SceneError(
                f"camera raster {camera.width}x{camera.height} does not match "
                f"depth raster {depth.width}x{depth.height}"
            )
    else:
        camera = default_camera(depth.width, depth.height)
    cfg = load_fit_config(args.fit_config) if args.fit_config else FitConfig()
    scene, report = decompose(depth, camera, cfg, args.seed)
    if args.prompt:
        from .edit import SetPrompt, apply_edit

        scene = apply_edit(scene, SetPrompt(args.prompt))
    save_scene(scene, args.out)
    base = Path(args.out).with_suffix("")
    paths = write_fit_report(report, base)
    print(f"wrote {args.out} with {len(scene.primitives)} primitives (pruned {len(report.pruned_ids)})")
    for p in paths:
        print(f"wrote {p}")
    print(f"final loss {report.final_loss:.6g}, holdout accuracy {report.holdout_accuracy:.4f}")
    return 0


def _cmd_render_depth(args) -> int:
    scene = load_scene(args.scene)
    depth, ids = render_depth(scene)
    write_depth_file(depth, args.out_depth)
    print(f"wrote {args.out_depth}")
    if args.out_ids:
        Path(args.out_ids).write_bytes(ids_to_png16_bytes(ids))
        print(f"wrote {args.out_ids}")
    return 0


def _cmd_edit(args) -> int:
    scene = load_scene(args.scene)
    scene = apply_script(scene, Path(args.script).read_text(encoding="utf-8"))
    save_scene(scene, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_badge(args) -> int:
    before = load_scene(args.before)
    after = load_scene(args.after)
    image = png_bytes_to_image(Path(args.image).read_bytes())
    ids = [s for s in args.ids.split(",") if s]
    badge = move_badge(before, after, ids, image, margin=args.margin)
    base = Path(args.out)
    base.parent.mkdir(parents=True, exist_ok=True)
    outputs = {
        ".image.png": image_to_png_bytes(badge.image),
        ".mask.png": mask_to_png_bytes(badge.mask),
        ".badge.png": image_to_png_bytes(badge.blacked_image()),
    }
    for suffix, data in outputs.items():
        p = base.with_name(base.name + suffix)
        p.write_bytes(data)
        print(f"wrote {p}")
    return 0


def _cmd_render(args) -> int:
    scene = load_scene(args.scene)
    depth, _ = render_depth(scene)
    badge = None
    if args.badge_image or args.badge_mask:
        if not (args.badge_image and args.badge_mask):
            raise SceneError("--badge-image and --badge-mask must be given together")
        badge = TextureBadge(
            image=png_bytes_to_image(Path(args.badge_image).read_bytes()),
            mask=png_bytes_to_mask(Path(args.badge_mask).read_bytes()),
        )
    req = bridge.RenderRequest(
        prompt=args.prompt if args.prompt is not None else scene.prompt,
        seed=args.seed if args.seed is not None else scene.seed,
        width=scene.camera.width,
        height=scene.camera.height,
        depth=depth,
        badge=badge,
    )
    endpoint = _renderer_endpoint(args)
    if endpoint == "stub":
        result = bridge.stub_render(req)
    else:
        result = bridge.render_remote(endpoint, req, timeout=args.timeout)
    Path(args.out).write_bytes(image_to_png_bytes(result.image))
    print(f"wrote {args.out} (renderer {result.renderer}, {result.elapsed_ms:.1f} ms)")
    return 0


def _cmd_eval(args) -> int:
    manifest = read_manifest(args.manifest)
    report = evaluate_batch(manifest, align=not args.no_align, base_dir=Path(args.manifest).parent)
    paths = write_eval_report(report, args.out)
    for p in paths:
        print(f"wrote {p}")
    sys.stdout.write(format_depth_table(report))
    return 0 if not report["failures"] else 1


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_service_app

    app = create_service_app(args.scene_dir, renderer=_renderer_endpoint(args), budget=args.budget)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="b2w", description="Convex-primitive scene toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="fit primitives to a depth map")
    p.add_argument("--depth", required=True, help="input depth raster (.b2wd or 16-bit .png)")
    p.add_argument("--out", required=True, help="output scene document")
    p.add_argument("--camera", help="camera config JSON (default: NYUv2 intrinsics for the raster)")
    p.add_argument("--fit-config", help="fit config JSON overriding the defaults")
    p.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")
    p.add_argument("--prompt", help="prompt stored in the output scene")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("render-depth", help="ray-trace a scene to depth and id rasters")
    p.add_argument("--scene", required=True)
    p.add_argument("--out-depth", required=True, help=".b2wd or 16-bit .png")
    p.add_argument("--out-ids", help="16-bit png, 0 = none, index+1 otherwise")
    p.set_defaults(func=_cmd_render_depth)

    p = sub.add_parser("edit", help="apply an edit script to a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--script", required=True, help="line-oriented edit script")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_edit)

    p = sub.add_parser("badge", help="build a texture badge for a primitive move")
    p.add_argument("--before", required=True, help="scene before the move")
    p.add_argument("--after", required=True, help="scene after the move")
    p.add_argument("--ids", required=True, help="comma-separated moved primitive ids")
    p.add_argument("--image", required=True, help="source color image (png)")
    p.add_argument("--out", required=True, help="output base path")
    p.add_argument("--margin", type=int, default=4, help="mask dilation in pixels (default 4)")
    p.set_defaults(func=_cmd_badge)

    p = sub.add_parser("render", help="render a scene through the wire protocol")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True, help="output image (png)")
    p.add_argument("--stub", action="store_true", help="use the in-process stub renderer")
    p.add_argument("--endpoint", help=f"renderer base URL (or set {bridge.ENV_RENDERER_URL})")
    p.add_argument("--seed", type=int, help="override the scene seed")
    p.add_argument("--prompt", help="override the scene prompt")
    p.add_argument("--badge-image", help="texture badge image (png)")
    p.add_argument("--badge-mask", help="texture badge mask (png)")
    p.add_argument("--timeout", type=float, default=60.0)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("eval", help="evaluate a manifest of depth pairs and labels")
    p.add_argument("--manifest", required=True, help="csv: primitive depth, inferred depth, requested, predicted")
    p.add_argument("--out", required=True, help="report base path")
    p.add_argument("--no-align", action="store_true", help="skip scale-shift alignment")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="run the scene-editing HTTP service")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scene-dir", required=True, help="directory of persisted scenes")
    p.add_argument("--stub", action="store_true", help="render through the in-process stub")
    p.add_argument("--endpoint", help=f"renderer base URL (or set {bridge.ENV_RENDERER_URL})")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:  # structured diagnostics, nonzero exit
        print(_diagnose(e), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
