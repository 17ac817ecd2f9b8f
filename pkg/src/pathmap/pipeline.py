"""End-to-end mapping run: boundary phase, shape identification, planning, object mapping."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .boundary import run_boundary_phase
from .geometry import Circle, Polygon, classify_polygon, Convexity
from .objects import MapResult, MappingParams, run_mapping
from .planner import (
    Circular,
    Concave,
    Convex,
    PathPlan,
    ShapeClass,
    build_path_plan,
    identify_shape,
    shape_kind,
)
from .robot import Limits, NoiseConfig, SensorRig, Simulator
from .world import WorldSpec


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.5
    d: float = 0.2
    step_max: float = 0.02
    turn_max: float = math.radians(5.0)
    seed: int = 0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    max_ticks: int = 5_000_000
    # optional scripted first seek headings; later ones are drawn from the seed
    seek_directions: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("alpha", "d", "step_max", "turn_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_ticks <= 0:
            raise ValueError("max_ticks must be positive")

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["noise"] = asdict(self.noise)
        doc["seek_directions"] = list(self.seek_directions)
        return doc


@dataclass
class RunOutput:
    result: MapResult
    plan: PathPlan
    boundary_ticks: int
    log: list[str] | None


def make_simulator(world: WorldSpec, cfg: RunConfig, log: list[str] | None = None) -> Simulator:
    return Simulator(
        world,
        rig=SensorRig(cfg.d),
        limits=Limits(cfg.step_max, cfg.turn_max),
        noise=cfg.noise,
        seed=cfg.seed,
        log=log,
        max_ticks=cfg.max_ticks,
    )


def run_pipeline(world: WorldSpec, cfg: RunConfig, trace_log: bool = False) -> RunOutput:
    """Run every phase on one world.

    The seek directions of the boundary phase come from a generator seeded
    separately from the simulator's noise stream, so the same seed always
    picks the same directions whether or not noise is on.
    """
    log: list[str] | None = [] if trace_log else None
    sim = make_simulator(world, cfg, log)
    seek_rng = np.random.default_rng([cfg.seed, 1])
    boundary = run_boundary_phase(sim, seek_rng, directions=list(cfg.seek_directions))
    shape = identify_shape(boundary.boundary)
    plan = build_path_plan(shape, cfg.alpha)
    result = run_mapping(sim, plan, boundary, shape, MappingParams())
    return RunOutput(result, plan, boundary.ticks, log)


def shape_from_outline(shape: Polygon | Circle) -> ShapeClass:
    """Shape class of a known boundary, bypassing the robot."""
    if isinstance(shape, Circle):
        return Circular(shape)
    return Convex(shape) if classify_polygon(shape) is Convexity.CONVEX else Concave(shape)


def _rounded(obj, ndigits: int = 6):
    if isinstance(obj, float):
        r = round(obj, ndigits)
        return 0.0 if r == 0 else r
    if isinstance(obj, dict):
        return {k: _rounded(v, ndigits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v, ndigits) for v in obj]
    if isinstance(obj, np.generic):
        return _rounded(obj.item(), ndigits)
    return obj


def map_document(out: RunOutput, cfg: RunConfig) -> dict:
    res = out.result
    return _rounded(
        {
            "boundary": [list(v) for v in res.boundary.vertices],
            "shape": shape_kind(res.shape).lower(),
            "objects": [{"id": o.id, "outline": [list(v) for v in o.outline.vertices]} for o in res.objects],
            "stats": dict(res.stats),
            "config": cfg.to_json(),
        }
    )


def dump_map(out: RunOutput, cfg: RunConfig) -> str:
    """``map.json`` text; coordinates rounded to a micrometre so equal runs give equal bytes."""
    return json.dumps(map_document(out, cfg), indent=2) + "\n"


def stats_line(res: MapResult) -> str:
    s = res.stats
    return f"paths={s['paths_traversed']} objects={len(res.objects)} ticks={s['ticks']} distance={s['distance']:.3f}"
