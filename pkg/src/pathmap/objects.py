"""Object mapping: drive every planned path, react to obstacles, and map
unknown objects by circling them halfway on each of two traversals of the
same path."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .boundary import LEFT, RIGHT, BoundaryPhaseResult, ContourFollower, FollowParams, _closure_index
from .errors import DegenerateInput, FusionGap, LostObject
from .geometry import (
    ClosedTrace,
    Polygon,
    distances_to_edges,
    points_in_polygon,
    segment_in_region,
    simplify_closed,
    simplify_trace,
)
from .planner import PathPlan, PathPlanEntry, ShapeClass
from .robot import Forward, Simulator, Turn
from .world import normalize_heading

FORWARD = 1
REVERSE = -1

# sensors whose hits send the robot anticlockwise round an unknown object
RIGHT_GROUP = frozenset({"front", "right", "diag-fr"})
# sensors that can report an obstacle ahead of or beside a moving robot
TRIGGERS = frozenset({"front", "left", "right", "diag-fl", "diag-fr"})


@dataclass(frozen=True)
class ContinuePath:
    pass


@dataclass(frozen=True)
class SkirtKnownObject:
    object_id: str


@dataclass(frozen=True)
class MapNewObject:
    direction: str  # "cw" or "ccw"

    @property
    def side(self) -> int:
        """Follower side: anticlockwise means turning left, keeping the object on the right."""
        return RIGHT if self.direction == "ccw" else LEFT


ObstacleAction = Union[ContinuePath, SkirtKnownObject, MapNewObject]


@dataclass(frozen=True)
class ObstacleEvent:
    hit_point: tuple[float, float]
    sensors: frozenset


@dataclass
class MappedObject:
    id: str
    outline: Polygon
    source_traces: tuple
    first_seen: tuple[str, int]


@dataclass
class MapResult:
    boundary: Polygon
    shape: ShapeClass
    objects: list[MappedObject]
    stats: dict
    plan: PathPlan | None = None


@dataclass
class MappingParams:
    """Thresholds for obstacle handling; ``None`` derives a default from the robot."""

    delta_bound: float | None = None
    delta_obj: float | None = None
    eps_line: float | None = None
    eps_simplify: float = 0.05
    lookahead: float = 0.2
    max_object_ticks: int = 40_000
    stuck_ticks: int = 5
    max_hits_per_path: int = 50
    follow: FollowParams = field(default_factory=FollowParams)

    def resolved(self, sim: Simulator) -> "MappingParams":
        d = sim.d
        step = sim.limits.step_max
        return MappingParams(
            d / 2 + 2 * step if self.delta_bound is None else self.delta_bound,
            2 * d if self.delta_obj is None else self.delta_obj,
            2 * step if self.eps_line is None else self.eps_line,
            self.eps_simplify,
            self.lookahead,
            self.max_object_ticks,
            self.stuck_ticks,
            self.max_hits_per_path,
            self.follow,
        )


# ------------------------------------------------------------------ ordering


def order_traversal(plan: PathPlan, robot_pos) -> list[tuple[PathPlanEntry, int]]:
    """Boustrophedon order over the plan.

    Starting from the start vertex nearest the robot, a vertex's entries run
    in increasing start angle, alternately outward and back, so each path
    begins where the previous one ended. Then the nearest unvisited vertex
    follows. A vertex owning a single entry may be entered from either end,
    whichever is nearer.
    """
    groups: dict = {}
    for e in plan.entries:
        groups.setdefault(e.start_vertex, []).append(e)
    for v in groups:
        groups[v].sort(key=lambda e: e.start_angle)
    pos = (float(robot_pos[0]), float(robot_pos[1]))
    order: list[tuple[PathPlanEntry, int]] = []
    remaining = list(groups)
    while remaining:
        best = None
        for k, v in enumerate(remaining):
            ents = groups[v]
            cands = [(math.dist(pos, v), FORWARD)]
            if len(ents) == 1:
                cands.append((math.dist(pos, ents[0].end_point), REVERSE))
            for dist, direction in cands:
                if best is None or dist < best[0] - 1e-12:
                    best = (dist, k, direction)
        _, k, direction = best
        v = remaining.pop(k)
        for e in groups[v]:
            order.append((e, direction))
            pos = e.end_point if direction == FORWARD else e.start_vertex
            direction = -direction
    return order


# --------------------------------------------------------- obstacle cases


def _inside_or_near(p, poly: Polygon, tol: float) -> bool:
    pt = np.array([p], dtype=float)
    if points_in_polygon(pt, poly.array)[0]:
        return True
    return float(distances_to_edges(pt, poly.array)[0]) <= tol


def handle_obstacle(
    event: ObstacleEvent, boundary: Polygon, known: Sequence[MappedObject], params: MappingParams
) -> ObstacleAction:
    """Decide what a sensor hit means.

    The hit point is where the firing sensor's beam reaches its range. A
    point beyond the traced boundary, or within ``delta_bound`` inside it,
    is the wall; one within ``delta_obj`` of a known object is that object;
    anything else is a new object, circled anticlockwise when a right-hand or
    front sensor saw it and clockwise otherwise.
    """
    p = np.array([event.hit_point], dtype=float)
    inside = bool(points_in_polygon(p, boundary.array)[0])
    if not inside or float(distances_to_edges(p, boundary.array)[0]) <= params.delta_bound:
        return ContinuePath()
    for obj in known:
        if _inside_or_near(event.hit_point, obj.outline, params.delta_obj):
            return SkirtKnownObject(obj.id)
    return MapNewObject("ccw" if event.sensors & RIGHT_GROUP else "cw")


# ------------------------------------------------------------------ fusion


def _best_join(tail: np.ndarray, head: np.ndarray) -> tuple[int, int, float]:
    """Closest pair between the tail window of one polyline and the head window of the next."""
    d = np.hypot(tail[:, None, 0] - head[None, :, 0], tail[:, None, 1] - head[None, :, 1])
    i, j = np.unravel_index(int(np.argmin(d)), d.shape)
    return int(i), int(j), float(d[i, j])


def fuse_object_traces(half1, half2, eps_close: float = 0.04, eps_simplify: float = 0.05) -> Polygon:
    """Join two half-loops round an object into one closed outline.

    Each junction is cut at the closest pair of points between the end of
    one half and the start of the other, which trims any overlap. A gap
    wider than ``4 * eps_close`` at either junction raises FusionGap.
    """
    a = np.asarray(half1, dtype=float).reshape(-1, 2)
    b = np.asarray(half2, dtype=float).reshape(-1, 2)
    if len(a) < 2 or len(b) < 2:
        raise FusionGap("each half needs at least two points")
    wa = max(2, len(a) // 4)
    wb = max(2, len(b) // 4)
    limit = 4 * eps_close
    # junction 1: end of half1 -> start of half2
    i, j, gap1 = _best_join(a[-wa:], b[:wb])
    a = a[: len(a) - wa + i + 1]
    b = b[j:]
    # junction 2: end of half2 -> start of half1
    k, m, gap2 = _best_join(b[-wb:] if len(b) > wb else b, a[:wa])
    tail_start = max(0, len(b) - wb) if len(b) > wb else 0
    b = b[: tail_start + k + 1]
    a = a[m:]
    gap = max(gap1, gap2)
    if gap > limit:
        raise FusionGap(f"half-loops are {gap:.3f} m apart, more than {limit:.3f} m")
    ring = np.vstack([a, b])
    return _outline(ring, eps_simplify)


def _outline(ring: np.ndarray, eps_simplify: float) -> Polygon:
    """Simplified CCW polygon of a closed point ring."""
    if len(ring) >= 8:
        try:
            return simplify_trace(ClosedTrace.from_points(ring), eps_simplify)[0]
        except DegenerateInput:
            pass
    eps = eps_simplify
    for _ in range(6):
        try:
            return Polygon.from_points(ring[simplify_closed(ring, eps)])
        except DegenerateInput:
            eps /= 2
    return Polygon.from_points(ring, check_simple=False)


# ------------------------------------------------------------------ driving


def _lit(frame) -> set[str]:
    return {lab for lab, on in zip(frame.labels, frame.readings) if on}


class _Mapper:
    """Host-side state for the traversal phase."""

    def __init__(self, sim: Simulator, plan: PathPlan, boundary: Polygon, known: list[MappedObject], p: MappingParams):
        self.sim = sim
        self.plan = plan
        self.boundary = boundary
        self.objects = known
        self.p = p
        self.in_progress: list[dict] = []
        self._vis = None

    # -------------------------------------------------------------- transit

    def _visibility(self):
        if self._vis is None:
            v = self.boundary.vertices
            n = len(v)
            vis = np.zeros((n, n), dtype=bool)
            for i in range(n):
                for j in range(i + 1, n):
                    vis[i, j] = vis[j, i] = segment_in_region(v[i], v[j], self.boundary)
            self._vis = vis
        return self._vis

    def _route(self, a, b) -> list:
        """Waypoints from a to b through the traced boundary, straight when possible."""
        if segment_in_region(a, b, self.boundary):
            return [b]
        verts = self.boundary.vertices
        n = len(verts)
        vis = self._visibility()
        from_a = [segment_in_region(a, v, self.boundary) for v in verts]
        to_b = [segment_in_region(v, b, self.boundary) for v in verts]
        if not any(from_a) or not any(to_b):
            return [b]
        # Dijkstra over boundary vertices; node n is the goal
        dist = [math.inf] * (n + 1)
        prev = [-1] * (n + 1)
        heap = []
        for i in range(n):
            if from_a[i]:
                dist[i] = math.dist(a, verts[i])
                heapq.heappush(heap, (dist[i], i))
        while heap:
            dcur, i = heapq.heappop(heap)
            if dcur > dist[i] or i == n:
                continue
            nbrs = [(j, math.dist(verts[i], verts[j])) for j in range(n) if vis[i, j]]
            if to_b[i]:
                nbrs.append((n, math.dist(verts[i], b)))
            for j, w in nbrs:
                if dcur + w < dist[j]:
                    dist[j] = dcur + w
                    prev[j] = i
                    heapq.heappush(heap, (dist[j], j))
        if math.isinf(dist[n]):
            return [b]
        path = [b]
        k = prev[n]
        while k != -1:
            path.append(verts[k])
            k = prev[k]
        return path[::-1]

    def transit(self, target):
        for wp in self._route(self.sim.estimate.position, target):
            self.drive_line(self.sim.estimate.position, wp, entry=None)

    # ------------------------------------------------------------ line drive

    def drive_line(self, a, b, entry: PathPlanEntry | None, direction: int = FORWARD) -> list[dict]:
        """Follow the segment a->b, handling obstacle hits; returns objects begun on it."""
        sim = self.sim
        p = self.p
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        L = float(np.hypot(*(b - a)))
        begun: list[dict] = []
        if L <= 1e-6:
            return begun
        u = (b - a) / L
        sim.turn_to(math.atan2(u[1], u[0]))
        lit_before = _lit(sim.frame)
        stuck = 0
        hits = 0
        ax, ay = float(a[0]), float(a[1])
        ux, uy = float(u[0]), float(u[1])
        gate = math.radians(30.0)
        turn_max = sim.limits.turn_max
        step_max = sim.limits.step_max
        while True:
            est = sim.estimate
            px, py = est.x, est.y
            t = (px - ax) * ux + (py - ay) * uy
            if t >= L - 1e-3:
                break
            # pure pursuit toward a point ahead on the line
            k = min(L, max(t, 0.0) + p.lookahead)
            want = math.atan2(ay + uy * k - py, ax + ux * k - px)
            err = normalize_heading(want - est.heading)
            if abs(err) > gate:
                # still turning onto the line: nothing ahead matters yet
                sim.execute(Turn(math.copysign(turn_max, err)))
                lit_before = _lit(sim.frame)
                continue
            lit = _lit(sim.frame)
            if lit:
                fired = {lab for lab in lit & TRIGGERS if lab == "front" or lab not in lit_before}
            else:
                fired = set()
            lit_before = lit
            if fired and hits < p.max_hits_per_path:
                outcome = self._on_hit(fired, a, u, L, t, entry, direction, begun)
                if outcome != "continue":
                    hits += 1
                    lit_before = _lit(sim.frame)
                    if outcome == "abandon":
                        break
                    continue
            if abs(err) > 1e-9:
                sim.execute(Turn(max(-turn_max, min(turn_max, err))))
            delta, _, contact = sim.execute(Forward(min(step_max, max(L - t, 1e-4))))
            if contact and abs(delta.distance) < 0.25 * step_max:
                stuck += 1
                if stuck >= p.stuck_ticks:
                    sim.event("path-blocked", t=f"{t:.3f}")
                    break
            else:
                stuck = 0
        return begun

    def _hit_point(self, labels) -> tuple[float, float]:
        est = self.sim.estimate
        bearings = [self.sim.rig.bearings[self.sim.rig.labels.index(lab)] for lab in sorted(labels)]
        # average the beams of all firing sensors
        ang = math.atan2(sum(math.sin(est.heading + b) for b in bearings), sum(math.cos(est.heading + b) for b in bearings))
        return (est.x + self.sim.d * math.cos(ang), est.y + self.sim.d * math.sin(ang))

    def _on_hit(self, fired, a, u, L, t, entry, direction, begun) -> str:
        sim = self.sim
        hit = self._hit_point(fired)
        action = None
        for job in self.in_progress:
            if float(distances_to_edges(np.array([hit]), job["half1"]).min()) > self.p.delta_obj + sim.d:
                continue
            if entry is not None and job["entry"] == entry.line_id and job["direction"] == -direction:
                # the return pass reached an object begun on this path
                return self._second_half(job, a, u, t)
            action = SkirtKnownObject("pending")
        if action is None:
            action = handle_obstacle(ObstacleEvent(hit, frozenset(fired)), self.boundary, self.objects, self.p)
        sim.event("obstacle", case=type(action).__name__, x=f"{hit[0]:.4f}", y=f"{hit[1]:.4f}")
        if isinstance(action, ContinuePath):
            return "continue"
        side = RIGHT if fired & RIGHT_GROUP else LEFT
        if isinstance(action, SkirtKnownObject) or entry is None:
            # transit legs only skirt; objects are mapped from planned paths
            _, closed = self.follow_to_line(a, u, t, side, fired)
            return "abandon" if closed else "skirted"
        half, closed = self.follow_to_line(a, u, t, action.side, fired)
        job = {
            "entry": entry.line_id,
            "direction": direction,
            "side": action.side,
            "half1": half,
            "first_seen": (entry.line_id, sim.tick),
        }
        if closed:
            self._finish(job, None, closed=True)
            return "abandon"
        self.in_progress.append(job)
        begun.append(job)
        sim.event("object-half", pass_=1, points=len(half))
        return "mapped"

    def _second_half(self, job, a, u, t) -> str:
        fired = _lit(self.sim.frame)
        half, closed = self.follow_to_line(a, u, t, job["side"], fired)
        self.in_progress.remove(job)
        self._finish(job, half, closed)
        return "abandon" if closed else "mapped"

    def follow_to_line(self, a, u, t_hit, side, fired) -> tuple[np.ndarray, bool]:
        """Follow the touched contour until the robot is back on the line beyond the hit.

        Returns the recorded half-loop and whether the contour closed on
        itself before the line was regained.
        """
        sim = self.sim
        p = self.p
        f = ContourFollower(sim, side, p.follow)
        lit_right = bool(set(fired) & {"right", "diag-fr"})
        f.acquire(-1 if lit_right else 1)
        start = sim.tick
        eps = p.eps_line
        left_line = False
        prev_s = None
        while True:
            if sim.tick - start > p.max_object_ticks:
                raise LostObject("object contour never met the path line again")
            before = f.n
            f.cycle()
            n = f.n
            if n == before:
                continue
            q = f.points[n - 1]
            rel = q - a
            s = float(u[0] * rel[1] - u[1] * rel[0])
            along = float(rel @ u)
            if not left_line:
                left_line = abs(s) > eps
                prev_s = s
                continue
            crossed = abs(s) <= eps or (prev_s is not None and s * prev_s < 0)
            prev_s = s
            if crossed and along > t_hit + eps:
                return f.points[:n].copy(), False
            if n > 2 * p.follow.refractory and _closure_index(f.points, f.headings, n, p.follow, p.follow.eps_close(sim)) is not None:
                return f.points[:n].copy(), True

    def _finish(self, job, half2, closed: bool):
        sim = self.sim
        traces = (job["half1"],) if half2 is None else (job["half1"], half2)
        try:
            if closed or half2 is None:
                ring = job["half1"] if half2 is None else half2
                outline = _outline(ring, self.p.eps_simplify)
            else:
                outline = fuse_object_traces(job["half1"], half2, 2 * sim.limits.step_max, self.p.eps_simplify)
        except FusionGap:
            outline = _outline(np.vstack(traces), self.p.eps_simplify)
            sim.event("fusion-gap")
        obj = MappedObject(f"O{len(self.objects) + 1}", outline, traces, job["first_seen"])
        self.objects.append(obj)
        sim.event("object-mapped", id=obj.id, area=f"{outline.area:.4f}")

    def flush(self):
        """Outline any object whose second half was never traced."""
        for job in list(self.in_progress):
            self.in_progress.remove(job)
            self._finish(job, None, closed=False)


def run_mapping(
    sim: Simulator,
    plan: PathPlan,
    boundary_result: BoundaryPhaseResult,
    shape: ShapeClass | None = None,
    params: MappingParams | None = None,
) -> MapResult:
    """Traverse every plan entry once, mapping objects on the way.

    Objects circled during the boundary phase are known from the start. A
    path that begins an object is immediately driven again in reverse to
    trace the object's other half.
    """
    p = (params or MappingParams()).resolved(sim)
    boundary = simplify_trace(boundary_result.boundary, p.eps_simplify)[0]
    known = []
    for i, tr in enumerate(boundary_result.pre_mapped_objects):
        pts = tr.points[:-1] if len(tr.points) > 1 else tr.points
        known.append(MappedObject(f"O{i + 1}", _outline(pts, p.eps_simplify), (tr.points,), ("boundary", 0)))
    m = _Mapper(sim, plan, boundary, known, p)
    queue = order_traversal(plan, sim.estimate.position) if len(plan) else []
    done: set[str] = set()
    while queue:
        entry, direction = queue.pop(0)
        a, b = (entry.start_vertex, entry.end_point) if direction == FORWARD else (entry.end_point, entry.start_vertex)
        if math.dist(sim.estimate.position, a) > sim.limits.step_max:
            m.transit(a)
        sim.event("path", id=entry.line_id, dir="fwd" if direction == FORWARD else "rev")
        begun = m.drive_line(a, b, entry, direction)
        done.add(entry.line_id)
        if begun:
            queue.insert(0, (entry, -direction))
        elif any(j["entry"] == entry.line_id for j in m.in_progress):
            # the return pass missed an object begun on this path
            m.flush()
    m.flush()
    stats = {
        "ticks": sim.tick,
        "paths_traversed": len(done),
        "distance": sim.distance,
        "restarts": len(boundary_result.pre_mapped_objects),
    }
    return MapResult(boundary, shape, m.objects, stats, plan)
