"""SVG output at a fixed 100 px/m with the y axis pointing up on screen."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .geometry import Polygon
from .planner import PathPlan
from .robot import OdometryDelta, apply_delta
from .world import Pose

PX_PER_M = 100.0
MARGIN_M = 0.5
COLORS = {"boundary": "black", "plan": "gray", "object": "red", "robot": "blue"}


@dataclass(frozen=True)
class Canvas:
    xmin: float
    ymax: float
    width: float
    height: float

    @classmethod
    def around(cls, points: np.ndarray, margin: float = MARGIN_M) -> "Canvas":
        lo = points.min(axis=0) - margin
        hi = points.max(axis=0) + margin
        return cls(float(lo[0]), float(hi[1]), float(hi[0] - lo[0]) * PX_PER_M, float(hi[1] - lo[1]) * PX_PER_M)

    def xy(self, p) -> tuple[float, float]:
        return ((p[0] - self.xmin) * PX_PER_M, (self.ymax - p[1]) * PX_PER_M)

    def path_d(self, pts: Iterable, closed: bool = True) -> str:
        parts = []
        for i, p in enumerate(pts):
            x, y = self.xy(p)
            parts.append(f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}")
        return " ".join(parts) + (" Z" if closed else "")

    def open(self) -> str:
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width:.0f}" height="{self.height:.0f}" '
            f'viewBox="0 0 {self.width:.2f} {self.height:.2f}">'
        )


def _plan_group(canvas: Canvas, plan: PathPlan | None) -> list[str]:
    out = [f'<g id="plan" stroke="{COLORS["plan"]}" stroke-width="1">']
    for e in plan.entries if plan is not None else ():
        x0, y0 = canvas.xy(e.start_vertex)
        x1, y1 = canvas.xy(e.end_point)
        out.append(f'<line data-id="{e.line_id}" x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}"/>')
    out.append("</g>")
    return out


def render_map(boundary: Polygon, plan: PathPlan | None = None, objects: Sequence = ()) -> str:
    """One boundary path, one plan group, one path per mapped object."""
    pts = [boundary.array] + [o.outline.array for o in objects]
    canvas = Canvas.around(np.vstack(pts))
    lines = [canvas.open()]
    lines.append(
        f'<path id="boundary" d="{canvas.path_d(boundary.vertices)}" fill="none" stroke="{COLORS["boundary"]}" stroke-width="2"/>'
    )
    lines += _plan_group(canvas, plan)
    for o in objects:
        lines.append(
            f'<path class="object" data-id="{o.id}" d="{canvas.path_d(o.outline.vertices)}" '
            f'fill="none" stroke="{COLORS["object"]}" stroke-width="2"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- replay


@dataclass(frozen=True)
class TraceLog:
    start: Pose | None
    deltas: list[OdometryDelta]


def parse_trace_log(text: str) -> TraceLog:
    """Read the simulator's trace log; comment lines start with ``#``."""
    start = None
    deltas: list[OdometryDelta] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#start"):
            f = line.split()
            try:
                start = Pose(float(f[1]), float(f[2]), float(f[3]))
            except (IndexError, ValueError):
                raise ParseError(f"line {lineno}", "bad #start header") from None
            continue
        if line.startswith("#"):
            continue
        f = line.split(",")
        if len(f) != 5:
            raise ParseError(f"line {lineno}", f"expected 5 fields, found {len(f)}")
        try:
            tick = int(f[0])
            dist = float(f[2])
            turn = float(f[3])
        except ValueError:
            raise ParseError(f"line {lineno}", "non-numeric field") from None
        if not f[1] or f[1][0] not in "FTS" or set(f[4]) - {"0", "1"} or not f[4]:
            raise ParseError(f"line {lineno}", "bad command or sensor bitmask")
        if start is None:
            raise ParseError(f"line {lineno}", "tick record before #start header")
        deltas.append(OdometryDelta(dist, turn, tick))
    return TraceLog(start, deltas)


def replay_frames(log: TraceLog, every: int = 1000) -> list[str]:
    """SVG frames of the dead-reckoned path, one every ``every`` ticks plus the final tick."""
    if every <= 0:
        raise ValueError("every must be positive")
    if not log.deltas:
        return []
    poses = [log.start]
    for d in log.deltas:
        poses.append(apply_delta(poses[-1], d))
    xy = np.array([p.position for p in poses])
    canvas = Canvas.around(xy)
    cuts = list(range(every, len(log.deltas), every)) + [len(log.deltas)]
    frames = []
    for k in cuts:
        pose = poses[k]
        x, y = canvas.xy(pose.position)
        hx = x + 15 * math.cos(pose.heading)
        hy = y - 15 * math.sin(pose.heading)
        frames.append(
            "\n".join(
                [
                    canvas.open(),
                    f'<path d="{canvas.path_d(xy[: k + 1], closed=False)}" fill="none" stroke="{COLORS["boundary"]}" stroke-width="1"/>',
                    f'<circle cx="{x:.2f}" cy="{y:.2f}" r="5" fill="{COLORS["robot"]}"/>',
                    f'<line x1="{x:.2f}" y1="{y:.2f}" x2="{hx:.2f}" y2="{hy:.2f}" stroke="{COLORS["robot"]}" stroke-width="2"/>',
                    f'<text x="5" y="15" font-size="12">tick {log.deltas[k - 1].tick}</text>',
                    "</svg>",
                ]
            )
            + "\n"
        )
    return frames
