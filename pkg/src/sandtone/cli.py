"""Command-line entry points for the sand mixture pipeline."""

from __future__ import annotations

import argparse
import socket
import sys
from pathlib import Path

from .config import DEFAULTS
from .convert import AssignmentTable, RenderJob, default_table, render, side_by_side, slot_map_json
from .imaging import crop as crop_image
from .imaging import load_image, save_png
from .planner import (
    SandSample,
    build_plan,
    load_plan,
    plan_to_json,
    recipe_csv,
    sort_sands,
)
from .texture import SynthesisParams, export_swatches, synthesize_plan_swatches


class CliError(Exception):
    """User-facing error; printed to stderr with exit code 2."""


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise CliError(f"invalid size {text!r}; expected WxH, e.g. 256x256")


def _parse_crop(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise CliError(f"invalid crop {text!r}; expected LEFT,TOP,WIDTH,HEIGHT")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _load_samples(paths: list[str], crop_spec: str | None) -> list[SandSample]:
    crop_box = _parse_crop(crop_spec) if crop_spec else None
    samples = []
    for index, path in enumerate(paths, start=1):
        try:
            image = load_image(path)
        except (OSError, ValueError):
            raise CliError(f"cannot read {path}")
        if crop_box:
            image = crop_image(image, *crop_box)
        samples.append(
            SandSample.from_image(
                id=f"s{index:02d}",
                name=Path(path).stem,
                image=image,
                source_file=path,
            )
        )
    return samples


def cmd_analyze(args: argparse.Namespace) -> int:
    samples = _load_samples(args.images, args.crop)
    for sample in samples:
        print(f"{sample.source_file}: mean gray {sample.mean_gray:.2f}")
    if len(samples) >= 2:
        ordered = sort_sands(samples)
        print("darkest to lightest: " + ", ".join(s.source_file or s.name for s in ordered))
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    samples = _load_samples(args.images, args.crop)
    plan = build_plan(samples, set_size=args.set_size)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plan.json").write_text(plan_to_json(plan), encoding="utf-8")
    (out / "recipe.csv").write_text(recipe_csv(plan), encoding="utf-8")
    print(f"wrote {out / 'plan.json'} and {out / 'recipe.csv'} ({plan.set_size} mixtures)")
    return 0


def cmd_swatches(args: argparse.Namespace) -> int:
    width, height = _parse_size(args.size)
    plan = load_plan(args.plan)
    params = SynthesisParams(width=width, height=height, seed=args.seed)
    textures = synthesize_plan_swatches(plan, params, workers=args.workers)
    written = export_swatches(textures, args.out)
    print(f"wrote {len(textures)} swatches to {args.out} ({len(written)} files)")
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    try:
        source = load_image(args.source)
    except (OSError, ValueError):
        raise CliError(f"cannot read {args.source}")
    plan = load_plan(args.plan)

    if args.thresholds:
        interior = tuple(int(v) for v in args.thresholds.split(","))
        if len(interior) != plan.set_size - 1:
            raise CliError(f"expected {plan.set_size - 1} thresholds, got {len(interior)}")
        table = AssignmentTable((0, *interior, 256))
    else:
        table = default_table(plan.set_size)

    swatch_w, swatch_h = _parse_size(args.swatch_size)
    job = RenderJob(
        source=source,
        plan=plan,
        table=table,
        block_size=args.block,
        seed=args.seed,
        swatch_params=SynthesisParams(width=swatch_w, height=swatch_h, seed=args.seed),
    )
    result = render(job, workers=args.workers)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_png(result.image, out / "render.png")
    (out / "slot_map.json").write_text(slot_map_json(result), encoding="utf-8")
    names = ["render.png", "slot_map.json"]
    if args.side_by_side:
        save_png(side_by_side(source, result), out / "side_by_side.png")
        names.append("side_by_side.png")
    print(f"wrote {', '.join(names)} to {out} ({result.image.width}x{result.image.height})")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((args.host, args.port))
    except OSError:
        print(f"cannot bind {args.host}:{args.port}", file=sys.stderr)
        return 1
    finally:
        probe.close()

    import uvicorn

    from .service import create_app

    app = create_app(Path(args.state))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sandtone", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="report mean gray values of sand photos")
    p.add_argument("images", nargs="+", metavar="IMG")
    p.add_argument("--crop", help="analyze only LEFT,TOP,WIDTH,HEIGHT of each photo")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plan", help="build a mixture plan from sand photos")
    p.add_argument("images", nargs="+", metavar="IMG")
    p.add_argument("--set-size", type=int, default=DEFAULTS.set_size)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--crop", help="analyze only LEFT,TOP,WIDTH,HEIGHT of each photo")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("swatches", help="synthesize one preview image per mixture")
    p.add_argument("plan", metavar="PLAN_JSON")
    p.add_argument("--size", default=f"{DEFAULTS.swatch_width}x{DEFAULTS.swatch_height}")
    p.add_argument("--seed", type=int, default=DEFAULTS.seed)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_swatches)

    p = sub.add_parser("convert", help="render a picture as a sand-based image")
    p.add_argument("source", metavar="SRC_IMG")
    p.add_argument("plan", metavar="PLAN_JSON")
    p.add_argument("--block", type=int, default=DEFAULTS.block_size)
    p.add_argument("--seed", type=int, default=DEFAULTS.seed)
    p.add_argument("--thresholds", help="comma-separated interior thresholds, overrides the even table")
    p.add_argument("--side-by-side", action="store_true")
    p.add_argument("--swatch-size", default=f"{DEFAULTS.swatch_width}x{DEFAULTS.swatch_height}")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--state", default="sandtone-state", help="session state directory")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(str(exc), file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
