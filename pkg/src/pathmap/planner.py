"""Shape identification and alpha-spaced path plans.

A boundary trace is identified as Convex, Concave, Circular or Complex (a
polygon with circular arcs cut off as their own parts). Each shape then gets
a fan of straight lines: from every polygon vertex to points stepped ``alpha``
apart along every edge not incident to it, or from points stepped ``alpha``
apart along a circle through its center.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import BadAlpha, DegenerateInput, UnclassifiableTrace
from .geometry import (
    EPS_PT,
    Circle,
    CircleParams,
    ClosedTrace,
    Convexity,
    Polygon,
    classify_polygon,
    detect_arcs,
    detect_circle,
    segment_in_region,
    signed_area,
    simplify_closed,
    simplify_trace,
    vertex_turns,
)

TWO_PI = 2 * math.pi


class AlphaWarning(UserWarning):
    """Alpha is so large that the plan degenerates to vertex-to-vertex lines."""


# ------------------------------------------------------------------ shapes


@dataclass(frozen=True)
class Convex:
    polygon: Polygon


@dataclass(frozen=True)
class Concave:
    polygon: Polygon


@dataclass(frozen=True)
class Circular:
    """A circle, or the region between an arc and its chord.

    ``arc_span`` is ``None`` for the full circle, otherwise ``(start, end)``
    bearings from the center: the arc runs clockwise from ``start`` to ``end``.
    """

    circle: Circle
    arc_span: tuple[float, float] | None = None

    @property
    def extent(self) -> float:
        if self.arc_span is None:
            return TWO_PI
        s, e = self.arc_span
        ext = (s - e) % TWO_PI
        return TWO_PI if ext == 0 else ext

    @property
    def area(self) -> float:
        r = self.circle.radius
        t = self.extent
        return 0.5 * r * r * (t - math.sin(t))

    def chord(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Chord from the arc's end back to its start: the region's straight edge."""
        s, e = self.arc_span
        return self.circle.point_at(e), self.circle.point_at(s)


@dataclass(frozen=True)
class Complex:
    parts: tuple

    def __post_init__(self):
        if len(self.parts) < 2:
            raise ValueError("a complex shape needs at least two parts")
        if any(isinstance(p, Complex) for p in self.parts):
            raise ValueError("complex parts cannot nest")


ShapeClass = Union[Convex, Concave, Circular, Complex]


def shape_kind(shape: ShapeClass) -> str:
    return type(shape).__name__


def shape_area(shape: ShapeClass) -> float:
    if isinstance(shape, Complex):
        return sum(shape_area(p) for p in shape.parts)
    if isinstance(shape, Circular):
        return shape.area
    return shape.polygon.area


def _polygon_shape(poly: Polygon) -> ShapeClass:
    return Convex(poly) if classify_polygon(poly) is Convexity.CONVEX else Concave(poly)


# ---------------------------------------------------------- identification


def _ccw_points(trace: ClosedTrace) -> np.ndarray:
    pts = trace.points
    if len(pts) > 1 and math.dist(tuple(pts[0]), tuple(pts[-1])) <= EPS_PT:
        pts = pts[:-1]
    return pts if signed_area(pts) >= 0 else pts[::-1]


def _is_convex_arc(pts: np.ndarray, circle: Circle, span: tuple[int, int]) -> bool:
    """True when a counterclockwise trace runs counterclockwise around the arc's center."""
    n = len(pts)
    s, e = span
    idx = (s + np.arange((e - s) % n + 1)) % n
    c = np.asarray(circle.center)
    ang = np.unwrap(np.arctan2(pts[idx, 1] - c[1], pts[idx, 0] - c[0]))
    return bool(ang[-1] > ang[0])


def identify_shape(trace: ClosedTrace, params: CircleParams | None = None, eps_simplify: float = 0.05) -> ShapeClass:
    """Classify a closed boundary trace.

    A trace without turn points is a circle. Otherwise convex circular arcs
    found by the Hough vote are cut off as Circular parts, and whatever
    remains is a Convex or Concave polygon.
    """
    poly, turns = simplify_trace(trace, eps_simplify)
    if not turns:
        found = detect_circle(trace, params)
        if found is None:
            raise UnclassifiableTrace("trace has no turn points but no circle fits it")
        return Circular(found[0])
    ccw = ClosedTrace.from_points(_ccw_points(trace))
    arcs = detect_arcs(ccw, params)
    n = len(ccw.points)
    for circle, (s, e) in arcs:
        if (e - s) % n + 1 >= n:
            return Circular(circle)
    arcs = [a for a in arcs if _is_convex_arc(ccw.points, *a)]
    if not arcs:
        return _polygon_shape(poly)
    try:
        parts = decompose_complex(ccw, arcs, eps_simplify, params)
    except DegenerateInput as exc:
        raise UnclassifiableTrace(f"cannot split trace at its arcs: {exc}") from None
    return parts[0] if len(parts) == 1 else Complex(tuple(parts))


def decompose_complex(
    trace: ClosedTrace, arcs, eps_simplify: float = 0.05, params: CircleParams | None = None
) -> list[ShapeClass]:
    """Cut a trace at the ends of each arc span.

    ``arcs`` holds ``(Circle, (i_start, i_end))`` inclusive index spans into
    the trace points, as returned by ``detect_arcs``. Each arc plus its chord
    becomes a Circular part; the rest of the trace, closed by the chords,
    becomes one polygon part.
    """
    pts = trace.points
    if len(pts) > 1 and math.dist(tuple(pts[0]), tuple(pts[-1])) <= EPS_PT:
        pts = pts[:-1]
    n = len(pts)
    flipped = signed_area(pts) < 0
    if flipped:
        pts = pts[::-1]
    inner = np.zeros(n, dtype=bool)
    spans = []
    for circle, (s, e) in arcs:
        if flipped:
            s, e = n - 1 - e, n - 1 - s
        length = (e - s) % n + 1
        if length >= n:
            return [Circular(circle)]
        idx = (s + np.arange(length)) % n
        # arcs may share an endpoint but not interior points
        if inner[idx].any():
            raise UnclassifiableTrace("arc spans overlap")
        inner[idx[1:-1]] = True
        spans.append((circle, s, e))
    if any(inner[s] or inner[e] for _, s, e in spans):
        raise UnclassifiableTrace("arc spans overlap")

    parts: list[ShapeClass] = []
    for circle, s, e in spans:
        cx, cy = circle.center
        a_start = math.atan2(pts[e, 1] - cy, pts[e, 0] - cx)
        a_end = math.atan2(pts[s, 1] - cy, pts[s, 0] - cx)
        parts.append(Circular(circle, (a_start, a_end)))

    rest = pts[~inner]
    poly = Polygon.from_points(rest[simplify_closed(rest, eps_simplify)])
    poly = _drop_arc_leftovers(poly, [c for c, _, _ in spans], (params or CircleParams()).fit_tol)
    parts.insert(0, _polygon_shape(poly))
    return parts


def _drop_arc_leftovers(poly: Polygon, circles: list[Circle], tol: float) -> Polygon:
    """Remove reflex vertices that lie on a cut arc's circle.

    Wall-following ripple can leave a trace point just past the detected
    end of an arc; it belongs to the arc and would otherwise dent the
    polygon part.
    """
    while len(poly) > 3:
        turns = vertex_turns(poly)
        v = poly.array
        drop = None
        for i in np.nonzero(turns < 0)[0]:
            if any(abs(math.dist(v[i], c.center) - c.radius) <= tol for c in circles):
                drop = i
                break
        if drop is None:
            break
        try:
            poly = Polygon.from_points(np.delete(v, drop, axis=0))
        except DegenerateInput:
            break
    return poly


# ------------------------------------------------------------------- plans


@dataclass(frozen=True)
class PathPlanEntry:
    line_id: str
    start_vertex: tuple[float, float]
    end_point: tuple[float, float]
    start_angle: float
    part_id: int = 0

    @property
    def length(self) -> float:
        return math.dist(self.start_vertex, self.end_point)


@dataclass
class PathPlan:
    entries: list[PathPlanEntry]
    alpha: float
    per_vertex_index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.per_vertex_index:
            self.per_vertex_index = _index_by_vertex(self.entries)

    def __len__(self):
        return len(self.entries)

    def to_json(self) -> list[dict]:
        return [
            {
                "line_id": e.line_id,
                "part_id": e.part_id,
                "start": [e.start_vertex[0], e.start_vertex[1]],
                "end": [e.end_point[0], e.end_point[1]],
                "angle_rad": e.start_angle,
            }
            for e in self.entries
        ]

    @classmethod
    def from_json(cls, doc: list[dict], alpha: float) -> "PathPlan":
        entries = [
            PathPlanEntry(
                str(d["line_id"]),
                (float(d["start"][0]), float(d["start"][1])),
                (float(d["end"][0]), float(d["end"][1])),
                float(d["angle_rad"]),
                int(d["part_id"]),
            )
            for d in doc
        ]
        return cls(entries, alpha)


def _index_by_vertex(entries) -> dict:
    index: dict = {}
    for i, e in enumerate(entries):
        index.setdefault(e.start_vertex, []).append(i)
    return {k: tuple(v) for k, v in index.items()}


def _check_alpha(alpha: float):
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha) and alpha > 0):
        raise BadAlpha(f"alpha must be a positive finite length, got {alpha!r}")


def _ccw_angle(ux, uy, vx, vy) -> float:
    """Anticlockwise angle from u to v in [0, 2*pi)."""
    return math.atan2(ux * vy - uy * vx, ux * vx + uy * vy) % TWO_PI


def edge_points(a, b, alpha: float) -> list[tuple[float, float]]:
    """Points from a toward b spaced alpha apart, always ending exactly at b."""
    ax, ay = a
    L = math.dist(a, b)
    ux, uy = (b[0] - ax) / L, (b[1] - ay) / L
    out = [(ax, ay)]
    k = 1
    while k * alpha < L - EPS_PT:
        out.append((ax + k * alpha * ux, ay + k * alpha * uy))
        k += 1
    out.append((float(b[0]), float(b[1])))
    return out


def _on_boundary_edge(p, q, verts: np.ndarray) -> bool:
    """True when segment pq runs along some polygon edge for a positive length."""
    dx, dy = q[0] - p[0], q[1] - p[1]
    L = math.hypot(dx, dy)
    if L <= EPS_PT:
        return True
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]
        el = math.hypot(ex, ey)
        # both ends on the edge's line
        if abs(ex * (p[1] - a[1]) - ey * (p[0] - a[0])) > EPS_PT * el:
            continue
        if abs(ex * (q[1] - a[1]) - ey * (q[0] - a[0])) > EPS_PT * el:
            continue
        tp = (ex * (p[0] - a[0]) + ey * (p[1] - a[1])) / el
        tq = (ex * (q[0] - a[0]) + ey * (q[1] - a[1])) / el
        lo, hi = min(tp, tq), max(tp, tq)
        if min(hi, el) - max(lo, 0.0) > EPS_PT:
            return True
    return False


def _seg_key(p, q):
    a = (round(p[0], 6), round(p[1], 6))
    b = (round(q[0], 6), round(q[1], 6))
    return (a, b) if a <= b else (b, a)


def _fan_candidates(poly: Polygon, alpha: float):
    """Every (vertex, endpoint, start_angle) of the fan construction, in sweep order."""
    v = poly.vertices
    n = len(v)
    for i in range(n):
        p = v[i]
        nxt = v[(i + 1) % n]
        ux, uy = nxt[0] - p[0], nxt[1] - p[1]
        # opposite edges in boundary order, each swept from the end shared with the previous one
        for k in range(1, n - 1):
            j = (i + k) % n
            a, b = v[j], v[(j + 1) % n]
            for q in edge_points(a, b, alpha):
                yield p, q, _ccw_angle(ux, uy, q[0] - p[0], q[1] - p[1])


def _fan_plan(poly: Polygon, alpha: float, filter_region: bool, part_id: int = 0) -> PathPlan:
    _check_alpha(alpha)
    longest = max(math.dist(a, b) for a, b in poly.edges())
    if alpha >= longest:
        warnings.warn(
            f"alpha {alpha:g} is not shorter than the longest edge {longest:g}; only vertex-to-vertex lines remain",
            AlphaWarning,
            stacklevel=3,
        )
    seen = set()
    entries = []
    verts = poly.array
    corners = set(poly.vertices)
    for p, q, ang in _fan_candidates(poly, alpha):
        if q in corners and q < p:
            # vertex-to-vertex lines belong to their lexicographically smaller end
            continue
        key = _seg_key(p, q)
        if key in seen:
            continue
        if _on_boundary_edge(p, q, verts):
            continue
        if filter_region and not segment_in_region(p, q, poly):
            continue
        seen.add(key)
        entries.append(PathPlanEntry(f"L{len(entries) + 1}", p, q, ang, part_id))
    return PathPlan(entries, alpha)


def plan_convex(poly: Polygon, alpha: float, part_id: int = 0) -> PathPlan:
    """Fan lines from every vertex to alpha-spaced points on each non-incident edge."""
    return _fan_plan(poly, alpha, filter_region=False, part_id=part_id)


def plan_concave(poly: Polygon, alpha: float, part_id: int = 0) -> PathPlan:
    """The convex fan, keeping only lines that stay inside the polygon."""
    return _fan_plan(poly, alpha, filter_region=True, part_id=part_id)


def _chord_hit(p, c, a, b):
    """Where segment p->c meets the chord line ab, as a parameter along p->c, or None."""
    dx, dy = c[0] - p[0], c[1] - p[1]
    ex, ey = b[0] - a[0], b[1] - a[1]
    den = dx * ey - dy * ex
    if abs(den) <= 1e-15:
        return None
    t = ((a[0] - p[0]) * ey - (a[1] - p[1]) * ex) / den
    return t if 0.0 <= t <= 1.0 else None


def plan_circular(shape: Circular, alpha: float, part_id: int = 0) -> PathPlan:
    """Lines through the center from boundary points stepped clockwise by arc length alpha.

    A full circle gets diameters, each stored once even when both of its ends
    were visited. A partial arc gets radius lines running from the arc to the
    center, cut at the chord when the center lies beyond it; lines from the
    arc's own ends run along the chord and are dropped.
    """
    _check_alpha(alpha)
    circle = shape.circle
    r = circle.radius
    cx, cy = circle.center
    ext = shape.extent
    if alpha >= r * ext:
        raise BadAlpha(f"alpha {alpha:g} is not shorter than the arc length {r * ext:g}")
    start = 0.0 if shape.arc_span is None else shape.arc_span[0]
    step = alpha / r
    bearings = []
    k = 0
    while True:
        swept = k * step
        if shape.arc_span is None:
            # one revolution; a repeat of the seed point ends it
            if swept > TWO_PI - EPS_PT / r:
                break
        elif swept > ext + EPS_PT / r:
            break
        bearings.append(start - swept)
        k += 1
    if shape.arc_span is not None and ext - (len(bearings) - 1) * step > EPS_PT / r:
        bearings.append(start - ext)

    entries = []
    if shape.arc_span is None:
        seen = []
        for b in bearings:
            if any(abs(math.remainder(b - s + math.pi, TWO_PI)) <= EPS_PT / r for s in seen):
                continue
            seen.append(b)
            p = circle.point_at(b)
            q = circle.point_at(b + math.pi)
            # the boundary leaves p anticlockwise, the diameter points at the center
            entries.append(PathPlanEntry(f"L{len(entries) + 1}", p, q, math.pi / 2, part_id))
        return PathPlan(entries, alpha)

    a, b = shape.chord()
    cux, cuy = b[0] - a[0], b[1] - a[1]
    for bearing in bearings:
        p = circle.point_at(bearing)
        if _on_boundary_edge(p, (cx, cy), np.array([a, b])):
            continue
        t = _chord_hit(p, (cx, cy), a, b)
        end = (cx, cy) if t is None else (p[0] + t * (cx - p[0]), p[1] + t * (cy - p[1]))
        if math.dist(p, end) <= EPS_PT:
            continue
        ang = _ccw_angle(cux, cuy, end[0] - p[0], end[1] - p[1])
        entries.append(PathPlanEntry(f"L{len(entries) + 1}", p, end, ang, part_id))
    return PathPlan(entries, alpha)


def build_path_plan(shape: ShapeClass, alpha: float) -> PathPlan:
    """Plan any shape; a complex shape's parts are planned separately with their own part ids."""
    _check_alpha(alpha)
    parts = shape.parts if isinstance(shape, Complex) else (shape,)
    entries = []
    for pid, part in enumerate(parts):
        if isinstance(part, Convex):
            sub = plan_convex(part.polygon, alpha, pid)
        elif isinstance(part, Concave):
            sub = plan_concave(part.polygon, alpha, pid)
        elif isinstance(part, Circular):
            sub = plan_circular(part, alpha, pid)
        else:
            raise TypeError(f"unknown shape {part!r}")
        for e in sub.entries:
            entries.append(PathPlanEntry(f"L{len(entries) + 1}", e.start_vertex, e.end_point, e.start_angle, pid))
    return PathPlan(entries, alpha)


def part_region(part: ShapeClass, step_deg: float = 0.5) -> Polygon:
    """Polygonal region of a single part, used for containment checks and drawing."""
    if isinstance(part, (Convex, Concave)):
        return part.polygon
    if part.arc_span is None:
        return part.circle.polygonize(step_deg)
    s = part.arc_span[0]
    ext = part.extent
    m = max(2, int(math.ceil(math.degrees(ext) / step_deg)))
    pts = [part.circle.point_at(s - ext * i / m) for i in range(m + 1)]
    return Polygon.from_points(pts)
