"""Boundary generation: seek an obstacle, follow it until the loop closes,
and decide whether the loop was the reachable boundary or an isolated object."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTrace, SimulationTimeout
from .geometry import ClosedTrace, convex_hull, points_in_polygon
from .robot import BEARINGS, Forward, Simulator, Stop, Turn
from .world import normalize_heading

LEFT = 1
RIGHT = -1


class TraceClassification(str, enum.Enum):
    REACHABLE_BOUNDARY = "reachable_boundary"
    EXTRINSIC_OBJECT = "extrinsic_object"


@dataclass
class FollowParams:
    """Tuning for the contour follower.

    ``veer`` is the steering offset either side of the estimated wall
    direction. ``lost_ticks`` is how long the side sensor may stay dark before
    the robot arcs around a corner. ``fit_window`` is the path length of wall
    samples used to estimate the wall direction.
    """

    veer: float = math.radians(2.0)
    lost_ticks: int = 1
    lit_ticks: int = 8
    reseed_arc: float = math.radians(15.0)
    approach_angle: float = math.radians(5.0)
    fit_window: float = 0.4
    fit_span: float = 0.08
    inset: float = 0.002
    refractory: int = 20
    heading_gate: float = math.radians(30.0)
    bisect_steps: int = 4
    max_ticks: int = 100_000

    def eps_close(self, sim: Simulator) -> float:
        return 2 * sim.limits.step_max


class ContourFollower:
    """Bang-bang contour follower keeping the obstacle on one side.

    The robot steers a small angle toward the obstacle while the side sensor
    is dark and away from it while the sensor fires, around an estimate of the
    wall direction. Every sensor toggle marks a wall sample one sensor range
    off the robot's side, and a chord through recent samples refreshes the
    estimate. A front hit makes the robot measure the facing wall's normal and
    turn parallel to it; a side sensor that stays dark means the wall fell
    away, so the robot arcs around the corner.

    Trace points are estimated positions recorded after every forward step.
    """

    def __init__(self, sim: Simulator, side: int = LEFT, params: FollowParams | None = None):
        self.sim = sim
        self.side = side
        self.p = params or FollowParams()
        self.side_label = "left" if side == LEFT else "right"
        self.wall_ref = sim.estimate.heading
        self.samples: list[tuple[float, float, float]] = []  # (path length, x, y)
        self.path = 0.0
        self.last_side = sim.frame[self.side_label]
        self._reset_counters()
        self.points = np.zeros((1024, 2))
        self.headings = np.zeros(1024)
        self.n = 0
        self._last_heading = sim.estimate.heading
        self._unwrapped = sim.estimate.heading

    def _reset_counters(self):
        self.dark = 0
        self.lit = 0
        self.arc = 0.0
        self.arc_limit = math.pi / 2
        self.approach = 0.0

    # ---------------------------------------------------------------- trace

    def _record(self):
        est = self.sim.estimate
        self._unwrapped += normalize_heading(est.heading - self._last_heading)
        self._last_heading = est.heading
        if self.n == len(self.points):
            self.points = np.vstack([self.points, np.zeros_like(self.points)])
            self.headings = np.concatenate([self.headings, np.zeros_like(self.headings)])
        self.points[self.n] = est.position
        self.headings[self.n] = self._unwrapped
        self.n += 1

    def _forward(self, stride: float):
        delta, _, _ = self.sim.execute(Forward(stride))
        self.path += abs(delta.distance)
        self._record()

    def _trim_past_wall(self, normal: float, max_points: int = 40):
        """Drop trailing trace points that went deeper toward the facing wall
        than the robot's settled position (the overshoot into a corner)."""
        pos = np.array(self.sim.estimate.position)
        u = np.array([math.cos(normal), math.sin(normal)])
        v = np.array([-u[1], u[0]])
        keep = self.n
        floor = max(1, self.n - max_points)
        while keep > floor:
            rel = self.points[keep - 1] - pos
            if float(rel @ u) <= self.p.inset or abs(float(rel @ v)) > self.sim.d:
                break
            keep -= 1
        self.n = keep

    # ---------------------------------------------------------- wall model

    def _lit_edge(self, label: str, direction: float, limit: float = math.pi) -> float | None:
        """Rotate until sensor ``label`` goes dark; return the refined edge heading.

        Coarse ``turn_max`` steps find the first dark heading, then a short
        bisection narrows the lit/dark bracket.
        """
        sim = self.sim
        step = sim.limits.turn_max
        turned = 0.0
        while sim.frame[label]:
            if turned >= limit:
                return None
            sim.execute(Turn(direction * step))
            turned += step
        half = step
        for _ in range(self.p.bisect_steps):
            half /= 2
            sim.execute(Turn((direction if sim.frame[label] else -direction) * half))
        # the edge lies within half a step of the current heading
        edge = sim.estimate.heading
        return edge + (direction if sim.frame[label] else -direction) * half / 2

    def standoff(self):
        """Settle at the front sensor's switching distance, then creep ``inset`` closer."""
        sim = self.sim
        backed = 0.0
        while sim.frame["front"] and backed < sim.d:
            sim.execute(Forward(-sim.limits.step_max))
            backed += sim.limits.step_max
        h = sim.limits.step_max / 2
        for _ in range(self.p.bisect_steps + 1):
            sim.execute(Forward(-h if sim.frame["front"] else h))
            h /= 2
        if not sim.frame["front"]:
            sim.execute(Forward(h))
        sim.execute(Forward(self.p.inset))

    def realign(self, label: str = "front"):
        """Estimate the wall normal from a sensor's lit arc and turn parallel to the wall.

        Within sensor range a sensor fires over an arc of headings centred on
        the normal of the wall it faces, so the two edges of that arc bracket
        the normal. The robot then faces the wall, settles at the sensing
        distance, and turns so the wall is on the following side. The sensor
        ``label`` must be lit on entry.
        """
        sim = self.sim
        if label == "front":
            self.standoff()
        start = sim.estimate.heading
        a = self._lit_edge(label, self.side)
        b = None
        if a is not None:
            sim.turn_to(start)
            b = self._lit_edge(label, -self.side)
        if a is not None and b is not None:
            body = normalize_heading(a + normalize_heading(b - a) / 2)
            normal = normalize_heading(body + BEARINGS[label])
            sim.turn_to(normal)
            if sim.frame["front"]:
                self.standoff()
                self._trim_past_wall(normal)
            sim.turn_to(normalize_heading(normal - self.side * math.pi / 2))
        while sim.frame["front"]:
            sim.execute(Turn(-self.side * sim.limits.turn_max))
        self.wall_ref = sim.estimate.heading
        self.samples.clear()
        self.last_side = sim.frame[self.side_label]
        self._reset_counters()

    def _wall_sample(self):
        est = self.sim.estimate
        a = est.heading + self.side * math.pi / 2
        d = self.sim.d
        self.samples.append((self.path, est.x + d * math.cos(a), est.y + d * math.sin(a)))
        while self.samples and self.path - self.samples[0][0] > self.p.fit_window:
            self.samples.pop(0)
        if len(self.samples) >= 2:
            _, x0, y0 = self.samples[0]
            _, x1, y1 = self.samples[-1]
            if math.hypot(x1 - x0, y1 - y0) >= self.p.fit_span:
                self.wall_ref = math.atan2(y1 - y0, x1 - x0)

    # -------------------------------------------------------------- control

    def acquire(self, turn_sign: int = 1):
        """Turn until the touched obstacle is ahead, then align with it.

        ``turn_sign`` picks the rotation direction: +1 anticlockwise.
        """
        sim = self.sim
        turned = 0.0
        while not sim.frame["front"] and turned < 2 * math.pi:
            sim.execute(Turn(turn_sign * sim.limits.turn_max))
            turned += sim.limits.turn_max
        if sim.frame["front"]:
            self.realign()
        else:
            self.wall_ref = sim.estimate.heading
            self.last_side = sim.frame[self.side_label]
        self._record()

    def _round_corner(self):
        """Arc around a wall that fell away, in quarter turns.

        On an arc of radius ``d`` about a convex corner the side ray always
        points at the corner itself, so it cannot light up again. After each
        quarter turn the robot therefore heads slightly inward for up to ``d``
        of travel to meet the new wall, and resumes arcing if it stays dark.
        """
        sim = self.sim
        lim = sim.limits
        if self.arc < self.arc_limit:
            sim.execute(Turn(self.side * lim.turn_max))
            self.arc += lim.turn_max
            self._forward(min(lim.step_max, sim.d * lim.turn_max))
            return
        if self.approach == 0.0:
            sim.execute(Turn(self.side * self.p.approach_angle))
        self._forward(lim.step_max)
        self.approach += lim.step_max
        if self.approach >= sim.d:
            self.arc_limit += math.pi / 2
            self.approach = 0.0

    def cycle(self):
        """One control decision: at most one turn plus one forward step,
        or a realignment manoeuvre after a front hit or a corner."""
        sim = self.sim
        lim = sim.limits
        frame = sim.frame
        away = -self.side
        if frame["front"]:
            self.realign()
            return
        seen = frame[self.side_label]
        if seen != self.last_side:
            self._wall_sample()
            self.last_side = seen
        if seen:
            if self.arc > self.p.reseed_arc:
                # came round a corner: the old wall estimate is stale
                self.realign(self.side_label)
                return
            self.arc = 0.0
            self.arc_limit = math.pi / 2
            self.approach = 0.0
            self.dark = 0
            self.lit += 1
            if self.lit > self.p.lit_ticks:
                # no toggle for a while: the wall curves into the path
                self.wall_ref = normalize_heading(self.wall_ref + away * self.p.veer / 4)
            desired = self.wall_ref + away * self.p.veer
        else:
            self.lit = 0
            self.dark += 1
            if self.dark > self.p.lost_ticks:
                self._round_corner()
                return
            desired = self.wall_ref + self.side * self.p.veer
        err = normalize_heading(desired - sim.estimate.heading)
        if err != 0.0:
            sim.execute(Turn(max(-lim.turn_max, min(lim.turn_max, err))))
        self._forward(lim.step_max)


def seek_obstacle(sim: Simulator, direction: float, max_ticks: int = 100_000):
    """Drive straight along ``direction`` until any sensor fires; returns the estimated pose."""
    if sim.frame.any():
        return sim.estimate
    start = sim.tick
    sim.turn_to(direction)
    while not sim.frame.any():
        if sim.tick - start > max_ticks:
            raise SimulationTimeout("seek found no obstacle")
        _, _, contact = sim.execute(Forward(sim.limits.step_max))
        if contact and not sim.frame.any():
            raise SimulationTimeout("seek blocked without a sensor reading")
    sim.event("contact", x=f"{sim.estimate.x:.4f}", y=f"{sim.estimate.y:.4f}")
    return sim.estimate


def _closure_index(pts: np.ndarray, heads: np.ndarray, n: int, p: FollowParams, eps: float) -> int | None:
    """Earliest trace index the newest point closes onto, if any."""
    cur = pts[n - 1]
    limit = n - 1 - p.refractory
    if limit <= 0:
        return None
    d = np.hypot(pts[:limit, 0] - cur[0], pts[:limit, 1] - cur[1])
    cand = np.nonzero(d <= eps)[0]
    if len(cand) == 0:
        return None
    dh = np.abs((heads[cand] - heads[n - 1] + np.pi) % (2 * np.pi) - np.pi)
    ok = cand[dh <= p.heading_gate]
    return int(ok[0]) if len(ok) else None


def follow_contour(sim: Simulator, side: int = LEFT, params: FollowParams | None = None) -> ClosedTrace:
    """Follow the touched obstacle until the robot returns to where the loop began.

    The loop closes when the newest point comes within ``eps_close`` of an
    earlier point (outside the refractory window) with a compatible heading,
    after the robot has first moved clear of its anchor. The returned trace
    starts at the matched point and ends with a copy of it.
    """
    p = params or FollowParams()
    if not sim.frame.any():
        raise ValueError("follow_contour needs a sensor reading to start")
    f = ContourFollower(sim, side, p)
    f.acquire()
    eps = p.eps_close(sim)
    start = sim.tick
    left_anchor = False
    while True:
        if sim.tick - start > p.max_ticks:
            raise SimulationTimeout("contour following did not close")
        before = f.n
        f.cycle()
        n = f.n
        if n < 2 or n == before:
            continue
        if not left_anchor:
            left_anchor = math.dist(f.points[0], f.points[n - 1]) > 2 * eps
            continue
        i = _closure_index(f.points, f.headings, n, p, eps)
        if i is not None:
            sim.execute(Stop())
            sim.event("loop-closed", anchor=i, points=n - i)
            pts = np.vstack([f.points[i:n], f.points[i : i + 1]])
            heads = np.concatenate([f.headings[i:n], f.headings[i : i + 1] + (f.headings[n - 1] - f.headings[i])])
            return ClosedTrace(pts, heads, closed=True)


def classify_trace(trace: ClosedTrace, eps_area: float = 1e-3) -> TraceClassification:
    """Clockwise loop (wall on the left) is the boundary; counterclockwise is an island."""
    a = trace.signed_area
    if abs(a) < eps_area:
        raise DegenerateTrace(f"trace encloses no area ({a:.3g})")
    return TraceClassification.REACHABLE_BOUNDARY if a < 0 else TraceClassification.EXTRINSIC_OBJECT


@dataclass
class BoundaryPhaseResult:
    boundary: ClosedTrace
    pre_mapped_objects: list[ClosedTrace] = field(default_factory=list)
    seek_directions_used: list[float] = field(default_factory=list)
    ticks: int = 0


def _aims_at(pos, direction: float, hulls: list[np.ndarray], reach: float = 1e3) -> bool:
    """Whether a ray from ``pos`` along ``direction`` meets any hull polygon."""
    dx, dy = reach * math.cos(direction), reach * math.sin(direction)
    for h in hulls:
        if points_in_polygon(np.array([pos]), h)[0]:
            return True
        b = np.roll(h, -1, axis=0)
        ex, ey = b[:, 0] - h[:, 0], b[:, 1] - h[:, 1]
        denom = dx * ey - dy * ex
        with np.errstate(divide="ignore", invalid="ignore"):
            t = ((h[:, 0] - pos[0]) * ey - (h[:, 1] - pos[1]) * ex) / denom
            s = ((h[:, 0] - pos[0]) * dy - (h[:, 1] - pos[1]) * dx) / denom
        if np.any((denom != 0) & (t >= 0) & (t <= 1) & (s >= 0) & (s <= 1)):
            return True
    return False


def _back_off(sim: Simulator, trace: ClosedTrace, distance: float):
    """Move away from a circumnavigated object, radially from its centroid."""
    c = trace.points.mean(axis=0)
    out = np.array(sim.estimate.position) - c
    sim.turn_to(math.atan2(out[1], out[0]))
    remaining = distance
    while remaining > 1e-12:
        s = min(sim.limits.step_max, remaining)
        _, _, contact = sim.execute(Forward(s))
        remaining -= s
        if contact:
            break


def _hull_with_margin(trace: ClosedTrace, margin: float) -> np.ndarray:
    hull = convex_hull(trace.points).array
    cen = hull.mean(axis=0)
    scale = 1 + margin / max(float(np.ptp(hull, axis=0).max()), 1e-9)
    return cen + (hull - cen) * scale


def run_boundary_phase(
    sim: Simulator,
    rng: np.random.Generator,
    directions=None,
    max_restarts: int = 10,
    params: FollowParams | None = None,
) -> BoundaryPhaseResult:
    """Seek, follow and classify until a loop turns out to be the reachable boundary.

    ``directions`` optionally scripts the first seek headings. Once they run
    out, headings are drawn from ``rng``, rejecting any that aim at an object
    already circumnavigated.
    """
    scripted = list(directions or [])
    start_tick = sim.tick
    objects: list[ClosedTrace] = []
    hulls: list[np.ndarray] = []
    used: list[float] = []
    for attempt in range(max_restarts + 1):
        if scripted:
            direction = float(scripted.pop(0))
        else:
            for _ in range(1000):
                direction = float(rng.uniform(-math.pi, math.pi))
                if not _aims_at(sim.estimate.position, direction, hulls):
                    break
            else:
                raise SimulationTimeout("no free seek direction")
        used.append(direction)
        seek_obstacle(sim, direction)
        trace = follow_contour(sim, LEFT, params)
        kind = classify_trace(trace)
        sim.event("classified", kind=kind.value)
        if kind is TraceClassification.REACHABLE_BOUNDARY:
            return BoundaryPhaseResult(trace, objects, used, sim.tick - start_tick)
        objects.append(trace)
        hulls.append(_hull_with_margin(trace, 2 * sim.d))
        _back_off(sim, trace, 3 * sim.d)
        sim.event("restart", attempt=attempt + 1)
    raise SimulationTimeout("boundary not found within max_restarts")
