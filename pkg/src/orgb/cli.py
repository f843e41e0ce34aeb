"""Command-line interface.

Subcommands cover the full pipeline: simulate scenes, estimate offsets,
correct images, subtract ambient exposures, convert color spaces, diagnose
color-line geometry, run the demos, and serve the HTTP API.

Exit codes: 0 success, 1 usage error, 2 data or processing error.
Diagnostics go to stderr; machine output goes only to declared files or
stdout.
"""

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import colorspace, demos, image, offset, simulate
from .errors import OrgbError, ParameterError


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_rect(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise ParameterError(f"rect must be x,y,w,h, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ParameterError(f"rect must be four integers, got {text!r}") from exc


def _rect_mask(img: image.LinearImage, rect_text: str) -> image.RegionMask:
    x, y, w, h = _parse_rect(rect_text)
    return image.make_mask_rect(x, y, w, h, img.width, img.height)


def _write_json(doc: dict, out: Optional[str]) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


# --- Subcommand implementations ---


def _cmd_simulate(args) -> int:
    scene = simulate.load_scene(args.scene)
    rendered = simulate.render(scene)
    os.makedirs(args.out_dir, exist_ok=True)
    prefix = os.path.join(args.out_dir, args.prefix)
    image.save_image(rendered.image, prefix + "_image.png", depth=16)
    image.save_image(rendered.image, prefix + "_image.npy")
    np.save(prefix + "_phi.npy", rendered.phi.data, allow_pickle=False)
    np.save(prefix + "_delta.npy", rendered.delta.data, allow_pickle=False)
    palette = _label_palette(len(scene.patches))
    with open(prefix + "_labels.png", "wb") as fh:
        from . import pngio

        fh.write(pngio.write_png(rendered.labels.astype(np.uint8), palette=palette))
    print(f"wrote {prefix}_image.png and sidecars", file=sys.stderr)
    return 0


def _label_palette(k: int) -> np.ndarray:
    hues = np.linspace(0.0, 1.0, max(k, 1), endpoint=False)
    chans = colorspace.hsv_to_rgb(
        colorspace.ChannelSet(
            "hsv",
            {
                "h": image.ChannelImage(hues.reshape(1, -1)),
                "s": image.ChannelImage(np.full((1, max(k, 1)), 0.65)),
                "v": image.ChannelImage(np.full((1, max(k, 1)), 0.95)),
            },
        )
    )
    return (chans.data[0] * 255 + 0.5).astype(np.uint8)


def _cmd_estimate(args) -> int:
    img = image.load_image(args.image)
    mask = _rect_mask(img, args.rect)
    est = offset.estimate_epsilon(img, mask, method=args.method)
    _write_json(offset.epsilon_to_json(est), args.out)
    return 0


def _cmd_correct(args) -> int:
    img = image.load_image(args.image)
    est = offset.load_epsilon(args.eps)
    out_img = offset.correct(img, est)
    image.save_image(out_img, args.out, depth=args.depth)
    return 0


def _cmd_subtract(args) -> int:
    img = image.load_image(args.image)
    ambient = image.load_image(args.ambient)
    image.save_image(offset.subtract_ambient(img, ambient), args.out, depth=args.depth)
    return 0


def _cmd_convert(args) -> int:
    img = image.load_image(args.image)
    cs = colorspace.convert(img, args.space)
    ch = colorspace.display_channel(cs, args.channel)
    if args.histeq:
        ch = image.histogram_equalize(ch)
    if args.invert:
        ch = image.invert(ch)
    image.save_channel(ch, args.out, depth=args.depth)
    return 0


def _cmd_diagnose(args) -> int:
    img = image.load_image(args.image)
    with open(args.regions, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"regions file is not valid JSON: {exc}") from exc
    rects = doc["rects"] if isinstance(doc, dict) else doc
    lines = []
    entries = []
    for rect in rects:
        x, y, w, h = (int(v) for v in rect)
        mask = image.make_mask_rect(x, y, w, h, img.width, img.height)
        line = offset.fit_color_line(img, mask)
        lines.append(line)
        entries.append(
            {
                "rect": [x, y, w, h],
                "centroid": line.centroid.tolist(),
                "direction": line.direction.tolist(),
                "rms_residual": line.rms_residual,
                "n": line.n,
                "origin_distance": offset.line_origin_distance(line),
            }
        )
    report = {"lines": entries, "convergence": None}
    if len(lines) >= 2:
        try:
            conv = offset.estimate_convergence_point(lines)
            report["convergence"] = {
                "point": conv.point.tolist(),
                "rms_line_distance": conv.rms_line_distance,
            }
        except OrgbError as exc:
            report["convergence_error"] = exc.code
    _write_json(report, args.out)
    return 0


def _cmd_demo_segment(args) -> int:
    img = image.load_image(args.image)
    labels = demos.kmeans_segment(img, k=args.k, seed=args.seed)
    from . import pngio

    with open(args.out, "wb") as fh:
        fh.write(
            pngio.write_png(
                labels.labels.astype(np.uint8), palette=_label_palette(labels.k)
            )
        )
    return 0


def _cmd_demo_edges(args) -> int:
    img = image.load_image(args.image)
    sat = colorspace.to_hsv(img)["s"]
    edges = demos.canny_edges(sat, sigma=args.sigma, lo=args.lo, hi=args.hi)
    image.save_channel(edges, args.out, depth=8)
    return 0


def _cmd_demo_metrics(args) -> int:
    pred = _load_mask(args.pred)
    gt = _load_mask(args.gt)
    m = demos.segmentation_metrics(pred, gt)
    _write_json(
        {
            "tp": m.tp,
            "fp": m.fp,
            "fn": m.fn,
            "g_quality": m.g_quality,
            "detection_rate": m.detection_rate,
            "detection_accuracy": m.detection_accuracy,
            "f_measure": m.f_measure,
        },
        args.out,
    )
    return 0


def _load_mask(path: str) -> image.RegionMask:
    ch = image.load_channel(path)
    return image.RegionMask(ch.data > 0.5)


def _cmd_serve(args) -> int:
    from . import server

    port = args.port
    env_port = os.environ.get("ORGB_PORT")
    if env_port:
        try:
            port = int(env_port)
        except ValueError as exc:
            raise ParameterError(f"ORGB_PORT must be an integer: {env_port!r}") from exc
    server.serve(
        host=args.host, port=port, root=args.root, max_images=args.max_images
    )
    return 0


# --- Parser wiring ---


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="orgb",
        description="Shadow-robust color pipeline: simulate, estimate, correct.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a scene description to files")
    p.add_argument("--scene", required=True, help="scene JSON path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--prefix", default="scene")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate per-channel offset from a rect")
    p.add_argument("--image", required=True)
    p.add_argument("--rect", required=True, help="x,y,w,h")
    p.add_argument("--method", choices=["ols", "theil-sen"], default="ols")
    p.add_argument("--out", default=None, help="report path, default stdout")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("correct", help="apply an offset report to an image")
    p.add_argument("--image", required=True)
    p.add_argument("--eps", required=True, help="offset report JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--depth", type=int, default=16)
    p.set_defaults(func=_cmd_correct)

    p = sub.add_parser("subtract", help="subtract an ambient-only exposure")
    p.add_argument("--image", required=True)
    p.add_argument("--ambient", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--depth", type=int, default=16)
    p.set_defaults(func=_cmd_subtract)

    p = sub.add_parser("convert", help="export one channel of a color space")
    p.add_argument("--image", required=True)
    p.add_argument("--space", choices=["rg", "hsv", "luv"], required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--histeq", action="store_true")
    p.add_argument("--invert", action="store_true")
    p.add_argument("--depth", type=int, default=8)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("diagnose", help="fit color lines and their meeting point")
    p.add_argument("--image", required=True)
    p.add_argument("--regions", required=True, help="JSON: {\"rects\": [[x,y,w,h],...]}")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_diagnose)

    demo = sub.add_parser("demo", help="downstream consumers")
    demo_sub = demo.add_subparsers(dest="demo_command", required=True)

    p = demo_sub.add_parser("segment", help="k-means on hue/saturation")
    p.add_argument("--image", required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_demo_segment)

    p = demo_sub.add_parser("edges", help="saturation-channel edge map")
    p.add_argument("--image", required=True)
    p.add_argument("--sigma", type=float, default=1.4)
    p.add_argument("--lo", type=float, default=0.04)
    p.add_argument("--hi", type=float, default=0.10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_demo_edges)

    p = demo_sub.add_parser("metrics", help="mask overlap scores")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_demo_metrics)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--root", default=None, help="static UI directory")
    p.add_argument("--max-images", type=int, default=64)
    p.set_defaults(func=_cmd_serve)

    return parser


def run_cli(argv: List[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except OrgbError as exc:
        print(f"orgb: error: {exc.code}: {exc.message}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"orgb: error: io: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
