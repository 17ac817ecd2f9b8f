"""Ground-truth environments: the world file format, validation, and the
true reachable region used by tests to score a mapping run."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import shapely
from shapely.geometry import Point as ShPoint
from shapely.geometry import Polygon as ShPolygon

from .errors import DegenerateInput, ParseError, SchemaError, UnsupportedWorld
from .geometry import Circle, Polygon

Shape = Union[Polygon, Circle]

CIRCLE_STEP_DEG = 0.5


def normalize_heading(h: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    h = math.fmod(h, 2 * math.pi)
    if h <= -math.pi:
        h += 2 * math.pi
    elif h > math.pi:
        h -= 2 * math.pi
    return h


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "heading", normalize_heading(float(self.heading)))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class WorldSpec:
    outer: Shape
    intrinsic: tuple[Polygon, ...] = ()
    extrinsic: tuple[Shape, ...] = ()
    start: Pose = field(default_factory=lambda: Pose(0.0, 0.0, 0.0))


def as_polygon(shape: Shape) -> Polygon:
    return shape.polygonize(CIRCLE_STEP_DEG) if isinstance(shape, Circle) else shape


def to_shapely(shape: Shape):
    if isinstance(shape, Circle):
        return ShPolygon(as_polygon(shape).vertices)
    return ShPolygon(shape.vertices)


# ------------------------------------------------------------------ file format

_TOP_FIELDS = {"outer", "intrinsic", "extrinsic", "start", "units"}


def parse_shape(obj, where: str, allow_circle: bool = True) -> Shape:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise SchemaError(where, 'expected {"polygon": ...} or {"circle": ...}')
    (kind, body), = obj.items()
    if kind == "polygon":
        try:
            pts = [(float(p[0]), float(p[1])) for p in body if len(p) == 2]
            if len(pts) != len(body):
                raise TypeError
            return Polygon.from_points(pts)
        except (TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, DegenerateInput):
                raise SchemaError(where, str(exc)) from None
            raise SchemaError(where, "polygon must be a list of [x, y] pairs") from None
    if kind == "circle" and allow_circle:
        if not isinstance(body, dict) or set(body) != {"center", "radius"}:
            raise SchemaError(where, 'circle needs exactly "center" and "radius"')
        try:
            c = (float(body["center"][0]), float(body["center"][1]))
            return Circle(c, float(body["radius"]))
        except (TypeError, ValueError, IndexError, DegenerateInput) as exc:
            raise SchemaError(where, f"bad circle: {exc}") from None
    raise SchemaError(where, f"unknown shape kind {kind!r}")


def parse_world(text: str) -> WorldSpec:
    """Parse a world document without checking clearances."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "expected a JSON object")
    unknown = set(doc) - _TOP_FIELDS
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown field")
    for req in ("outer", "start"):
        if req not in doc:
            raise SchemaError(req, "required field missing")
    if doc.get("units", "meters") != "meters":
        raise SchemaError("units", 'must be "meters"')
    outer = parse_shape(doc["outer"], "outer")
    intrinsic = tuple(parse_shape(o, f"intrinsic[{i}]", allow_circle=False) for i, o in enumerate(doc.get("intrinsic", [])))
    extrinsic = tuple(parse_shape(o, f"extrinsic[{i}]") for i, o in enumerate(doc.get("extrinsic", [])))
    st = doc["start"]
    if not isinstance(st, dict) or set(st) - {"position", "heading_deg"} or "position" not in st:
        raise SchemaError("start", 'expected {"position": [x, y], "heading_deg": h}')
    try:
        start = Pose(float(st["position"][0]), float(st["position"][1]), math.radians(float(st.get("heading_deg", 0.0))))
    except (TypeError, ValueError, IndexError):
        raise SchemaError("start", "bad position or heading") from None
    return WorldSpec(outer, intrinsic, extrinsic, start)


def load_world(text: str, sensor_distance: float | None = 0.2) -> WorldSpec:
    """Parse and validate a world file; the first violation raises SchemaError.

    Pass ``sensor_distance=None`` to skip the clearance checks.
    """
    w = parse_world(text)
    if sensor_distance is not None:
        problems = validate_world(w, sensor_distance)
        if problems:
            field_name, _, msg = problems[0].partition(": ")
            raise SchemaError(field_name, msg)
    return w


def _shape_doc(shape: Shape) -> dict:
    if isinstance(shape, Circle):
        return {"circle": {"center": list(shape.center), "radius": shape.radius}}
    return {"polygon": [list(v) for v in shape.vertices]}


def _exact_degrees(h: float) -> float:
    """A degree value whose conversion back to radians reproduces ``h`` exactly."""
    deg = math.degrees(h)
    if math.radians(deg) == h:
        return deg
    lo = hi = deg
    for _ in range(64):
        lo = math.nextafter(lo, -math.inf)
        hi = math.nextafter(hi, math.inf)
        for cand in (lo, hi):
            if math.radians(cand) == h:
                return cand
    return deg


def dump_world(w: WorldSpec) -> str:
    doc = {
        "units": "meters",
        "outer": _shape_doc(w.outer),
        "intrinsic": [_shape_doc(o) for o in w.intrinsic],
        "extrinsic": [_shape_doc(o) for o in w.extrinsic],
        "start": {"position": [w.start.x, w.start.y], "heading_deg": _exact_degrees(w.start.heading)},
    }
    return json.dumps(doc, indent=2)


# ------------------------------------------------------------------- validation


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def validate_world(w: WorldSpec, d: float) -> list[str]:
    """Every invariant violation as ``"<field>: <message>"``; empty when valid."""
    out: list[str] = []
    outer = to_shapely(w.outer)
    outer_ring = outer.exterior
    intr = [to_shapely(p) for p in w.intrinsic]
    extr = [to_shapely(s) for s in w.extrinsic]
    need = 2 * d

    for i, p in enumerate(intr):
        if not p.intersects(outer_ring) and outer.contains(p):
            out.append(f"intrinsic[{i}]: does not touch the outer boundary")
        if not p.intersects(outer):
            out.append(f"intrinsic[{i}]: lies outside the outer boundary")

    for i, e in enumerate(extr):
        name = f"extrinsic[{i}]"
        if not outer.contains(e):
            out.append(f"{name}: not inside the outer boundary")
            continue
        c = e.distance(outer_ring)
        if c <= need:
            out.append(f"{name}: clearance {_fmt(c)} < {_fmt(need)} to outer boundary")
        for j, p in enumerate(intr):
            if e.intersects(p):
                out.append(f"{name}: touches intrinsic[{j}]")
                continue
            c = e.distance(p)
            if c <= need:
                out.append(f"{name}: clearance {_fmt(c)} < {_fmt(need)} to intrinsic[{j}]")
        for j in range(i + 1, len(extr)):
            f = extr[j]
            if e.intersects(f):
                out.append(f"{name}: extrinsic objects intersect (with extrinsic[{j}])")
                continue
            c = e.distance(f)
            if c <= need:
                out.append(f"{name}: clearance {_fmt(c)} < {_fmt(need)} to extrinsic[{j}]")

    sp = ShPoint(w.start.x, w.start.y)
    if not outer.contains(sp):
        out.append("start: outside the outer boundary")
    else:
        blocked = [o for o in intr + extr if o.covers(sp)]
        if blocked:
            out.append("start: inside an object")
        else:
            obstacles = [outer_ring] + intr + extr
            c = min(o.distance(sp) for o in obstacles)
            if c <= d:
                out.append(f"start: clearance {_fmt(c)} <= sensor distance {_fmt(d)}")
    return out


def true_reachable_region(w: WorldSpec) -> Polygon:
    """Outer region minus intrinsic objects, as one polygon (test oracle)."""
    region = to_shapely(w.outer)
    for p in w.intrinsic:
        region = region.difference(to_shapely(p))
    region = shapely.normalize(region)
    if region.geom_type != "Polygon" or len(region.interiors) > 0:
        raise UnsupportedWorld("reachable region is not simply connected")
    coords = list(region.exterior.coords)[:-1]
    return Polygon.from_points(coords, check_simple=False)
