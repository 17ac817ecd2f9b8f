"""Command-line front end: ``pathmap map|plan|replay``."""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .geometry import Circle
from .errors import ParseError, PathMapError, SchemaError, SimulationTimeout
from .planner import AlphaWarning, build_path_plan
from .pipeline import RunConfig, dump_map, run_pipeline, shape_from_outline, stats_line
from .render import parse_trace_log, render_map, replay_frames
from .robot import NoiseConfig
from .world import parse_shape, parse_world, true_reachable_region, validate_world

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_TIMEOUT = 3


def parse_noise(text: str) -> NoiseConfig:
    """``off``, ``on`` (the default noise model) or ``DIST,HEAD_DEG,GYRO_DEG``."""
    if text == "off":
        return NoiseConfig()
    if text == "on":
        return NoiseConfig.default_on()
    try:
        dist, head, gyro = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("noise must be off, on, or DIST,HEAD_DEG,GYRO_DEG") from None
    return NoiseConfig(dist, math.radians(head), math.radians(gyro))


def config_from_args(args) -> RunConfig:
    return RunConfig(
        alpha=args.alpha,
        d=args.sensor_distance,
        seed=args.seed,
        noise=args.noise,
        max_ticks=args.max_ticks,
    )


def _err(msg: str):
    print(msg, file=sys.stderr)


def map_one(world_path: Path, cfg: RunConfig, out_dir: Path, trace: bool = False) -> tuple[int, str]:
    """Map one world file into ``out_dir``; returns (exit code, stats or error text)."""
    try:
        world = parse_world(world_path.read_text())
    except (ParseError, SchemaError) as exc:
        return EXIT_INVALID, f"{world_path}: {exc}"
    problems = validate_world(world, cfg.d)
    if problems:
        return EXIT_INVALID, "\n".join(f"{world_path}: {p}" for p in problems)
    try:
        out = run_pipeline(world, cfg, trace_log=trace)
    except SimulationTimeout as exc:
        return EXIT_TIMEOUT, f"{world_path}: timeout: {exc}"
    except PathMapError as exc:
        return EXIT_FAILED, f"{world_path}: {type(exc).__name__}: {exc}"
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "map.json").write_text(dump_map(out, cfg))
    (out_dir / "map.svg").write_text(render_map(out.result.boundary, out.plan, out.result.objects))
    if trace:
        (out_dir / "trace.log").write_text("\n".join(out.log) + "\n")
    return EXIT_OK, stats_line(out.result)


def _map_job(job):
    return map_one(*job)


def cmd_map(args) -> int:
    cfg = config_from_args(args)
    out_dir = Path(args.out_dir)
    if args.batch:
        files = sorted(Path(args.batch).glob("*.json"))
        jobs = [(f, cfg, out_dir / f.stem, args.trace) for f in files]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_map_job, jobs))
        worst = EXIT_OK
        for f, (code, text) in zip(files, results):
            if code == EXIT_OK:
                print(f"{f.stem}: {text}")
            else:
                _err(text)
            worst = max(worst, code)
        return worst
    if not args.world:
        _err("map: a world file or --batch DIR is required")
        return EXIT_INVALID
    code, text = map_one(Path(args.world), cfg, out_dir, args.trace)
    if code == EXIT_OK:
        print(text)
    else:
        _err(text)
    return code


def _load_outline(text: str):
    """A boundary file holds one shape form; a world file plans on its reachable region."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    if isinstance(doc, dict) and "outer" in doc:
        world = parse_world(text)
        return world.outer if not world.intrinsic else true_reachable_region(world)
    return parse_shape(doc, "boundary")


def cmd_plan(args) -> int:
    try:
        outline = _load_outline(Path(args.input).read_text())
    except (ParseError, SchemaError) as exc:
        _err(f"{args.input}: {exc}")
        return EXIT_INVALID
    try:
        shape = shape_from_outline(outline)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AlphaWarning)
            plan = build_path_plan(shape, args.alpha)
    except PathMapError as exc:
        _err(f"{args.input}: {type(exc).__name__}: {exc}")
        return EXIT_INVALID
    for w in caught:
        _err(f"warning: {w.message}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "plan.json").write_text(json.dumps({"alpha": args.alpha, "entries": plan.to_json()}, indent=2) + "\n")
    boundary = outline.polygonize() if isinstance(outline, Circle) else outline
    (out_dir / "plan.svg").write_text(render_map(boundary, plan))
    print(f"paths={len(plan)}")
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        log = parse_trace_log(Path(args.log).read_text())
    except ParseError as exc:
        _err(f"{args.log}: {exc}")
        return EXIT_INVALID
    frames = replay_frames(log, args.every)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, svg in enumerate(frames):
        (out_dir / f"frame_{i:05d}.svg").write_text(svg)
    print(f"frames={len(frames)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pathmap", description="Map a simulated room by wall following and path plans.")
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("map", help="run the whole mapping pipeline on a world file")
    m.add_argument("world", nargs="?", help="world JSON file")
    m.add_argument("--batch", metavar="DIR", help="map every *.json world in DIR concurrently")
    m.add_argument("--jobs", type=int, default=None, help="worker processes for --batch")
    m.add_argument("--alpha", type=float, default=0.5, help="path spacing along the boundary, meters")
    m.add_argument("--sensor-distance", type=float, default=0.2, help="IR trigger distance d, meters")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--noise", type=parse_noise, default=NoiseConfig(), help="off, on, or DIST,HEAD_DEG,GYRO_DEG")
    m.add_argument("--max-ticks", type=int, default=5_000_000)
    m.add_argument("--out-dir", default=".")
    m.add_argument("--trace", action="store_true", help="also write trace.log")
    m.set_defaults(func=cmd_map)

    p = sub.add_parser("plan", help="plan paths for a known boundary or world")
    p.add_argument("input", help="boundary shape JSON or world JSON")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_plan)

    r = sub.add_parser("replay", help="render SVG frames from a trace log")
    r.add_argument("log")
    r.add_argument("--every", type=int, default=1000, help="ticks between frames")
    r.add_argument("--out-dir", default="frames")
    r.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
