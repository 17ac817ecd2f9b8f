"""2D geometric kernel: polygons, hulls, containment, trace simplification
and circle detection.

Points are plain ``(x, y)`` float tuples at the API boundary; heavier
routines work on ``(n, 2)`` numpy arrays internally.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInput, DegenerateTrace

EPS_PT = 1e-6
EPS_CROSS = 1e-9
TURN_THRESHOLD = math.radians(1.0)

Point = tuple[float, float]


class Convexity(str, enum.Enum):
    CONVEX = "convex"
    CONCAVE = "concave"


class Location(str, enum.Enum):
    INSIDE = "inside"
    ON_BOUNDARY = "on_boundary"
    OUTSIDE = "outside"


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def orient(p: Point, q: Point, r: Point) -> float:
    """Twice the signed area of triangle pqr (positive when counterclockwise)."""
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def signed_area(points) -> float:
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, p3, p4) -> bool:
    """Proper or touching intersection of segments p1p2 and p3p4."""
    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > EPS_CROSS and d2 < -EPS_CROSS) or (d1 < -EPS_CROSS and d2 > EPS_CROSS)) and (
        (d3 > EPS_CROSS and d4 < -EPS_CROSS) or (d3 < -EPS_CROSS and d4 > EPS_CROSS)
    ):
        return True

    def on_seg(a, b, c, o):
        return abs(o) <= EPS_CROSS and min(a[0], b[0]) - EPS_PT <= c[0] <= max(a[0], b[0]) + EPS_PT and (
            min(a[1], b[1]) - EPS_PT <= c[1] <= max(a[1], b[1]) + EPS_PT
        )

    return on_seg(p3, p4, p1, d1) or on_seg(p3, p4, p2, d2) or on_seg(p1, p2, p3, d3) or on_seg(p1, p2, p4, d4)


def is_simple(points: Sequence[Point]) -> bool:
    """True when the closed polyline has no self-intersections."""
    n = len(points)
    pts = np.asarray(points, dtype=float)
    a = pts
    b = np.roll(pts, -1, axis=0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    for i in range(n):
        # bounding-box prefilter, then exact test on the survivors
        cand = np.nonzero(
            (lo[:, 0] <= hi[i, 0] + EPS_PT)
            & (hi[:, 0] >= lo[i, 0] - EPS_PT)
            & (lo[:, 1] <= hi[i, 1] + EPS_PT)
            & (hi[:, 1] >= lo[i, 1] - EPS_PT)
        )[0]
        for j in cand:
            if j <= i or j == (i + 1) % n or i == (j + 1) % n:
                continue
            if _segments_cross(tuple(a[i]), tuple(b[i]), tuple(a[j]), tuple(b[j])):
                return False
    return True


@dataclass(frozen=True)
class Polygon:
    """Simple polygon, counterclockwise, implicitly closed."""

    vertices: tuple[Point, ...]
    array: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise DegenerateInput("polygon needs at least 3 vertices")
        arr = np.asarray(self.vertices, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise DegenerateInput("non-finite polygon coordinate")
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]], check_simple: bool = True) -> "Polygon":
        """Normalize raw points: drop repeated vertices, orient CCW, validate."""
        pts: list[Point] = []
        for p in points:
            q = (float(p[0]), float(p[1]))
            if pts and math.dist(pts[-1], q) <= EPS_PT:
                continue
            pts.append(q)
        while len(pts) > 1 and math.dist(pts[0], pts[-1]) <= EPS_PT:
            pts.pop()
        if len(pts) < 3:
            raise DegenerateInput("fewer than 3 distinct vertices")
        area = signed_area(pts)
        if abs(area) <= EPS_CROSS:
            raise DegenerateInput("polygon has zero area")
        if area < 0:
            pts.reverse()
        if check_simple and not is_simple(pts):
            raise DegenerateInput("polygon edges self-intersect")
        return cls(tuple(pts))

    def __len__(self):
        return len(self.vertices)

    @property
    def area(self) -> float:
        return abs(signed_area(self.array))

    @property
    def perimeter(self) -> float:
        return float(np.sum(np.hypot(*(np.roll(self.array, -1, axis=0) - self.array).T)))

    def edges(self) -> list[tuple[Point, Point]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def bounds(self) -> tuple[float, float, float, float]:
        lo = self.array.min(axis=0)
        hi = self.array.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


@dataclass(frozen=True)
class Circle:
    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise DegenerateInput("circle radius must be positive")

    def polygonize(self, step_deg: float = 0.5) -> Polygon:
        n = int(round(360.0 / step_deg))
        t = np.arange(n) * (2 * math.pi / n)
        cx, cy = self.center
        pts = np.column_stack([cx + self.radius * np.cos(t), cy + self.radius * np.sin(t)])
        return Polygon(tuple(map(tuple, pts.tolist())))

    def point_at(self, angle: float) -> Point:
        return (self.center[0] + self.radius * math.cos(angle), self.center[1] + self.radius * math.sin(angle))


@dataclass(eq=False)
class ClosedTrace:
    """Odometry polyline from contour following."""

    points: np.ndarray
    cumulative_heading: np.ndarray
    closed: bool = True

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.cumulative_heading = np.asarray(self.cumulative_heading, dtype=float).reshape(-1)
        if len(self.cumulative_heading) != len(self.points):
            raise DegenerateTrace("one heading per trace point required")

    def __len__(self):
        return len(self.points)

    @classmethod
    def from_points(cls, points, closed: bool = True) -> "ClosedTrace":
        """Build a trace from bare points, deriving headings from the chords."""
        pts = np.asarray(points, dtype=float)
        d = np.diff(pts, axis=0, append=pts[:1])
        head = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
        return cls(pts, head, closed)

    @property
    def signed_area(self) -> float:
        return signed_area(self.points)

    @property
    def length(self) -> float:
        d = np.diff(self.points, axis=0)
        return float(np.hypot(d[:, 0], d[:, 1]).sum())


# --------------------------------------------------------------------- hulls


def convex_hull(points: Iterable[Sequence[float]]) -> Polygon:
    """Gift-wrapping (Jarvis march) hull, counterclockwise, collinear points dropped."""
    uniq: list[Point] = []
    for p in sorted({(float(p[0]), float(p[1])) for p in points}):
        if not uniq or math.dist(uniq[-1], p) > EPS_PT:
            uniq.append(p)
    if len(uniq) < 3:
        raise DegenerateInput("fewer than 3 distinct points")
    start = min(uniq, key=lambda p: (p[1], p[0]))
    hull = [start]
    current = start
    while True:
        cand = uniq[0] if uniq[0] != current else uniq[1]
        for r in uniq:
            if r == current or r == cand:
                continue
            o = orient(current, cand, r)
            if o < -EPS_CROSS:
                cand = r
            elif abs(o) <= EPS_CROSS and math.dist(current, r) > math.dist(current, cand):
                cand = r
        current = cand
        if current == start:
            break
        hull.append(current)
        if len(hull) > len(uniq):
            raise DegenerateInput("hull construction did not terminate")
    if len(hull) < 3:
        raise DegenerateInput("all points collinear")
    return Polygon(tuple(hull))


def vertex_turns(poly: Polygon) -> np.ndarray:
    """Cross product of incoming and outgoing edge at each vertex."""
    v = poly.array
    e_in = v - np.roll(v, 1, axis=0)
    e_out = np.roll(v, -1, axis=0) - v
    return _cross(e_in[:, 0], e_in[:, 1], e_out[:, 0], e_out[:, 1])


def classify_polygon(poly: Polygon) -> Convexity:
    if np.any(vertex_turns(poly) < -EPS_CROSS):
        return Convexity.CONCAVE
    return Convexity.CONVEX


# --------------------------------------------------------------- containment


def point_segment_distance(p, a, b) -> float:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / L2))
    return math.hypot(p[0] - ax - t * dx, p[1] - ay - t * dy)


def distances_to_edges(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Distance of each point to the closed polyline ``verts``; shape (n,)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = verts
    b = np.roll(verts, -1, axis=0)
    ab = b - a
    L2 = np.einsum("ij,ij->i", ab, ab)
    L2 = np.where(L2 == 0, 1.0, L2)
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("nij,ij->ni", ap, ab) / L2, 0.0, 1.0)
    diff = ap - t[:, :, None] * ab[None, :, :]
    return np.sqrt(np.min(np.einsum("nij,nij->ni", diff, diff), axis=1))


def points_in_polygon(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Even-odd ray-cast test for many points; boundary handling undefined."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    x0, y0 = verts[:, 0][None, :], verts[:, 1][None, :]
    nxt = np.roll(verts, -1, axis=0)
    x1, y1 = nxt[:, 0][None, :], nxt[:, 1][None, :]
    straddle = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (px < xint)
    return (np.count_nonzero(hits, axis=1) % 2) == 1


def point_in_region(p: Sequence[float], poly: Polygon) -> Location:
    pt = np.array([[float(p[0]), float(p[1])]])
    if distances_to_edges(pt, poly.array)[0] <= EPS_PT:
        return Location.ON_BOUNDARY
    return Location.INSIDE if points_in_polygon(pt, poly.array)[0] else Location.OUTSIDE


def segment_in_region(a: Sequence[float], b: Sequence[float], poly: Polygon) -> bool:
    """True iff every point of segment ab lies inside or on the polygon."""
    a = (float(a[0]), float(a[1]))
    b = (float(b[0]), float(b[1]))
    if point_in_region(a, poly) is Location.OUTSIDE or point_in_region(b, poly) is Location.OUTSIDE:
        return False
    dx, dy = b[0] - a[0], b[1] - a[1]
    L = math.hypot(dx, dy)
    if L <= EPS_PT:
        return True
    ts = {0.0, 1.0}
    v = poly.array
    for i in range(len(v)):
        p = v[i]
        q = v[(i + 1) % len(v)]
        ex, ey = q[0] - p[0], q[1] - p[1]
        el = math.hypot(ex, ey)
        denom = _cross(dx, dy, ex, ey)
        apx, apy = p[0] - a[0], p[1] - a[1]
        if abs(denom) > 1e-12 * L * el:
            t = _cross(apx, apy, ex, ey) / denom
            u = _cross(apx, apy, dx, dy) / denom
            if -1e-12 <= t <= 1 + 1e-12 and -1e-9 <= u <= 1 + 1e-9:
                ts.add(min(1.0, max(0.0, t)))
        elif abs(_cross(apx, apy, dx, dy)) <= EPS_PT * L:
            # collinear: sub-divide at the edge's endpoints
            for w in (p, q):
                t = ((w[0] - a[0]) * dx + (w[1] - a[1]) * dy) / (L * L)
                if 0.0 < t < 1.0:
                    ts.add(t)
    tt = sorted(ts)
    for t0, t1 in zip(tt, tt[1:]):
        if t1 - t0 <= 1e-12:
            continue
        tm = 0.5 * (t0 + t1)
        if point_in_region((a[0] + tm * dx, a[1] + tm * dy), poly) is Location.OUTSIDE:
            return False
    return True


# -------------------------------------------------------------- simplification


def _dp_open(pts: np.ndarray, eps: float) -> list[int]:
    """Douglas-Peucker on an open polyline; returns kept indices (inclusive ends)."""
    n = len(pts)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        seg = pts[i + 1 : j]
        a, b = pts[i], pts[j]
        ab = b - a
        L = math.hypot(ab[0], ab[1])
        if L <= 1e-12:
            d = np.hypot(*(seg - a).T)
        else:
            d = np.abs(_cross(ab[0], ab[1], seg[:, 0] - a[0], seg[:, 1] - a[1])) / L
        k = int(np.argmax(d))
        if d[k] > eps:
            m = i + 1 + k
            keep[m] = True
            stack.append((i, m))
            stack.append((m, j))
    return list(np.nonzero(keep)[0])


def _max_dev(points: np.ndarray, i: int, j: int, n: int) -> float:
    """Max distance of cyclic range (i..j) to segment points[i]-points[j]."""
    idx = np.arange(i, i + ((j - i) % n) + 1) % n
    seg = points[idx]
    a, b = points[i], points[j]
    return float(distances_to_edges(seg, np.array([a, b]))[:].max()) if len(seg) > 2 else 0.0


def simplify_closed(points: np.ndarray, eps: float) -> list[int]:
    """Closed-curve Douglas-Peucker; returns sorted kept indices."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    c = pts.mean(axis=0)
    i0 = int(np.argmax(np.hypot(*(pts - c).T)))
    i1 = int(np.argmax(np.hypot(*(pts - pts[i0]).T)))
    order = np.roll(np.arange(n), -i0)
    ring = pts[order]
    k1 = (i1 - i0) % n
    first = _dp_open(ring[: k1 + 1], eps)
    second = [k1 + k for k in _dp_open(np.vstack([ring[k1:], ring[:1]]), eps)]
    kept = sorted({int(order[k % n]) for k in first + second})
    # the two split points are arbitrary; drop them when the merged chord still fits
    changed = True
    while changed and len(kept) > 3:
        changed = False
        for s in (i0, i1):
            if s not in kept or len(kept) <= 3:
                continue
            pos = kept.index(s)
            prev_i = kept[pos - 1]
            next_i = kept[(pos + 1) % len(kept)]
            if _max_dev(pts, prev_i, next_i, n) <= eps:
                kept.remove(s)
                changed = True
    return kept


def fit_circle(points: np.ndarray) -> tuple[float, float, float]:
    """Algebraic least-squares (Kasa) circle fit; returns (cx, cy, r)."""
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    A = np.column_stack([x, y, np.ones_like(x)])
    rhs = -(x * x + y * y)
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    cx, cy = -sol[0] / 2, -sol[1] / 2
    r2 = cx * cx + cy * cy - sol[2]
    return float(cx), float(cy), float(math.sqrt(max(r2, 0.0)))


def _turn_angle(a, b, c) -> float:
    h1 = math.atan2(b[1] - a[1], b[0] - a[0])
    h2 = math.atan2(c[1] - b[1], c[0] - b[0])
    return (h2 - h1 + math.pi) % (2 * math.pi) - math.pi


def _run_heading(run: np.ndarray) -> float:
    """Travel direction of a roughly straight run of points, from a total-least-squares line fit."""
    chord = run[-1] - run[0]
    if len(run) < 3:
        return math.atan2(chord[1], chord[0])
    centered = run - run.mean(axis=0)
    axis = np.linalg.svd(centered, full_matrices=False)[2][0]
    if axis @ chord < 0:
        axis = -axis
    return math.atan2(axis[1], axis[0])


def _fitted_turn(pts: np.ndarray, i_prev: int, i: int, i_next: int) -> float:
    """Turn at vertex i between lines fitted to the raw runs on either side of it."""
    n = len(pts)
    before = pts[(i_prev + np.arange((i - i_prev) % n + 1)) % n]
    after = pts[(i + np.arange((i_next - i) % n + 1)) % n]
    d = _run_heading(after) - _run_heading(before)
    return (d + math.pi) % (2 * math.pi) - math.pi


def _cyclic_run(pts: np.ndarray, i: int, j: int) -> np.ndarray:
    n = len(pts)
    return pts[(i + np.arange((j - i) % n + 1)) % n]


def _line_residual(run: np.ndarray) -> float:
    """Largest distance of the points from their total-least-squares line."""
    if len(run) < 3:
        return 0.0
    centered = run - run.mean(axis=0)
    normal = np.linalg.svd(centered, full_matrices=False)[2][-1]
    return float(np.abs(centered @ normal).max())


def _merge_straight_runs(pts: np.ndarray, kept: list[int], eps: float) -> list[int]:
    """Drop kept vertices whose two neighbouring runs fit one line within eps.

    Douglas-Peucker anchors its chords on raw, possibly jittered points, so
    it can keep vertices in the middle of a straight wall; a fitted line is
    not fooled by that. Used only to decide turn points.
    """
    cand = list(kept)

    def residual(k: int) -> float:
        m = len(cand)
        return _line_residual(_cyclic_run(pts, cand[k - 1], cand[(k + 1) % m]))

    res = [residual(k) for k in range(len(cand))]
    while len(cand) > 3:
        k = int(np.argmin(res))
        if res[k] > eps:
            break
        cand.pop(k)
        res.pop(k)
        m = len(cand)
        for j in ((k - 1) % m, k % m):
            res[j] = residual(j)
    return cand


def _median_spacing(pts: np.ndarray) -> float:
    d = np.hypot(*np.diff(pts, axis=0).T)
    d = d[d > 1e-9]
    return float(np.median(d)) if len(d) else 0.0


def simplify_trace(trace: ClosedTrace, eps_simplify: float = 0.05) -> tuple[Polygon, list[int]]:
    """Simplify a closed trace and report the indices where the robot turned > 1 deg.

    The turn at a retained vertex is its polyline turn angle, unless the
    trace around it is a smooth arc: then the robot turned continuously and
    its per-step turn is ``spacing / radius`` of the best-fit circle.
    """
    pts = trace.points
    if len(pts) >= 2 and math.dist(tuple(pts[0]), tuple(pts[-1])) <= EPS_PT:
        pts = pts[:-1]
    if len(pts) < 8:
        raise DegenerateTrace("closed trace needs at least 8 points")
    n = len(pts)
    eps = eps_simplify
    for _ in range(4):
        kept = simplify_closed(pts, eps)
        try:
            poly = Polygon.from_points(pts[kept])
            break
        except DegenerateInput:
            eps /= 2
    else:
        raise DegenerateTrace("trace does not simplify to a simple polygon")
    # keep index list aligned with the polygon vertex order (from_points may reverse)
    if signed_area(pts[kept]) < 0:
        kept = kept[::-1]
    spacing = _median_spacing(pts)
    cand = _merge_straight_runs(pts, list(kept), eps_simplify)
    turns = []
    m = len(cand)
    for k in range(m):
        i_prev, i, i_next = cand[k - 1], cand[k], cand[(k + 1) % m]
        # fitted rather than chord directions, so per-point jitter does not read as turning
        turn = abs(_fitted_turn(pts, i_prev, i, i_next))
        if turn <= TURN_THRESHOLD:
            continue
        # raw points between the two neighbouring vertices, walking through i
        start = i_prev if (i - i_prev) % n < (i_next - i_prev) % n else i_next
        end = i_next if start == i_prev else i_prev
        idx = (start + np.arange((end - start) % n + 1)) % n
        neigh = pts[idx]
        if len(neigh) >= 5:
            cx, cy, r = fit_circle(neigh)
            resid = np.abs(np.hypot(neigh[:, 0] - cx, neigh[:, 1] - cy) - r)
            if r > 0 and resid.max() <= eps_simplify / 2:
                turn = spacing / r
        if turn > TURN_THRESHOLD:
            turns.append(i)
    return poly, turns


# ------------------------------------------------------------ circle detection


def _cyclic_runs(mask: np.ndarray, max_gap: int = 2) -> list[tuple[int, int]]:
    """Runs of True in a cyclic mask as (start, length), bridging short gaps."""
    n = len(mask)
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    # start scanning just after a False entry so runs never wrap mid-scan
    off = int(np.nonzero(~mask)[0][0]) + 1
    m = np.roll(mask, -off)
    runs = []
    i = 0
    while i < n:
        if not m[i]:
            i += 1
            continue
        j = i
        last = i
        while j < n:
            if m[j]:
                last = j
                j += 1
            elif j - last <= max_gap and j < n:
                j += 1
            else:
                break
        runs.append(((i + off) % n, last - i + 1))
        i = last + 1
    return runs


def _local_curvature(pts: np.ndarray, w: int) -> np.ndarray:
    """Signed turning per unit length at each point, over a +-w window (cyclic)."""
    prev = np.roll(pts, w, axis=0)
    nxt = np.roll(pts, -w, axis=0)
    h1 = np.arctan2(pts[:, 1] - prev[:, 1], pts[:, 0] - prev[:, 0])
    h2 = np.arctan2(nxt[:, 1] - pts[:, 1], nxt[:, 0] - pts[:, 0])
    turn = (h2 - h1 + np.pi) % (2 * np.pi) - np.pi
    length = np.hypot(*(pts - prev).T) + np.hypot(*(nxt - pts).T)
    return turn / np.maximum(length / 2, 1e-12)


@dataclass
class CircleParams:
    rho: float = 0.05
    theta: float = 0.90
    eps_fit: float | None = None
    r_min: float = 0.1
    min_arc_deg: float = 60.0
    min_arc_fraction: float = 0.05
    max_points: int = 400
    candidates: int = 40

    @property
    def fit_tol(self) -> float:
        return 3 * self.rho if self.eps_fit is None else self.eps_fit


def _hough_candidates(pts: np.ndarray, p: CircleParams):
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    r_max = 0.5 * math.hypot(*(hi - lo))
    if r_max <= p.r_min:
        return []
    cxs = np.arange(lo[0], hi[0] + p.rho / 2, p.rho)
    cys = np.arange(lo[1], hi[1] + p.rho / 2, p.rho)
    nr = int(math.floor((r_max - p.r_min) / p.rho)) + 1
    gx, gy = np.meshgrid(cxs, cys, indexing="ij")
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    nc = len(centers)
    acc = np.zeros(nc * nr, dtype=np.int32)
    sub = pts if len(pts) <= p.max_points else pts[np.linspace(0, len(pts) - 1, p.max_points).astype(int)]
    base = np.arange(nc)[:, None] * nr
    chunk = max(1, 2_000_000 // max(nc, 1))
    for s in range(0, len(sub), chunk):
        q = sub[s : s + chunk]
        d = np.hypot(centers[:, 0:1] - q[None, :, 0], centers[:, 1:2] - q[None, :, 1])
        rb = np.rint((d - p.r_min) / p.rho).astype(np.int64)
        ok = (rb >= 0) & (rb < nr)
        acc += np.bincount((base + rb)[ok], minlength=nc * nr).astype(np.int32)
    order = np.argsort(acc, kind="stable")[::-1]
    out = []
    for flat in order:
        if acc[flat] <= 2 or len(out) >= p.candidates:
            break
        c = centers[flat // nr]
        r = p.r_min + (flat % nr) * p.rho
        # non-maximum suppression in (center, radius)
        if any(math.dist(c, o[0]) <= 2 * p.rho and abs(r - o[1]) <= 2 * p.rho for o in out):
            continue
        out.append((c, r))
    return out


def _evaluate_arc(pts, avail, cx, cy, r, p: CircleParams):
    """Refine a candidate and return (circle, start, length, residual) or None."""
    n = len(pts)
    tol = p.fit_tol
    for _ in range(3):
        dist = np.abs(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) - r)
        inl = (dist <= tol) & avail
        if inl.sum() < 5:
            return None
        cx, cy, r = fit_circle(pts[inl])
        if not (r >= p.r_min and math.isfinite(r)):
            return None
    dist = np.abs(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) - r)
    inl = (dist <= tol) & avail
    runs = _cyclic_runs(inl)
    if not runs:
        return None
    start, length = max(runs, key=lambda s: s[1])
    n_avail = int(avail.sum())
    if length >= p.theta * n_avail and inl.sum() >= p.theta * n_avail:
        return Circle((cx, cy), r), 0, n, float(np.sqrt(np.mean(dist[inl] ** 2)))
    # partial arc: trim tangent continuations using local curvature, measured
    # over about half a radian of arc so wall-following ripple averages out
    spacing = _median_spacing(pts)
    w = max(1, int(round(max(2 * p.rho, 0.25 * r) / max(spacing, 1e-9))))
    curv = _local_curvature(pts, w)
    idx = (start + np.arange(length)) % n
    # orientation of traversal around the fitted center
    ang = np.unwrap(np.arctan2(pts[idx, 1] - cy, pts[idx, 0] - cx))
    sign = 1.0 if ang[-1] >= ang[0] else -1.0
    good = sign * curv[idx] >= 0.5 / r
    if not good.any():
        return None
    a = int(np.argmax(good))
    b = len(good) - 1 - int(np.argmax(good[::-1]))
    idx = idx[a : b + 1]
    if len(idx) < p.min_arc_fraction * n:
        return None
    cx, cy, r = fit_circle(pts[idx])
    ang = np.unwrap(np.arctan2(pts[idx, 1] - cy, pts[idx, 0] - cx))
    if abs(ang[-1] - ang[0]) < math.radians(p.min_arc_deg):
        return None
    resid = np.abs(np.hypot(pts[idx, 0] - cx, pts[idx, 1] - cy) - r)
    rms = float(np.sqrt(np.mean(resid**2)))
    if rms > p.rho or _corner_rms(pts[idx]) <= rms:
        return None
    return Circle((cx, cy), r), int(idx[0]), len(idx), rms


def _corner_rms(pts: np.ndarray) -> float:
    """RMS distance of points to the two-segment polyline through their farthest point.

    A sharp corner fits this better than any circle; a genuine arc does not.
    """
    a, b = pts[0], pts[-1]
    k = int(np.argmax(distances_to_edges(pts, np.array([a, b]))))
    k = min(max(k, 1), len(pts) - 2)
    d1 = distances_to_edges(pts[: k + 1], np.array([a, pts[k]]))
    d2 = distances_to_edges(pts[k:], np.array([pts[k], b]))
    return float(np.sqrt(np.mean(np.concatenate([d1, d2]) ** 2)))


def detect_circle(trace: ClosedTrace, params: CircleParams | None = None, exclude: np.ndarray | None = None):
    """Hough-vote a circle on the trace.

    Returns ``None`` or ``(Circle, (start, end))`` where the index range is
    inclusive and may wrap; a full circle spans ``(0, n - 1)``.
    """
    p = params or CircleParams()
    pts = trace.points
    if len(pts) > 1 and math.dist(tuple(pts[0]), tuple(pts[-1])) <= EPS_PT:
        pts = pts[:-1]
    n = len(pts)
    if n < 8:
        return None
    avail = np.ones(n, dtype=bool) if exclude is None else ~np.asarray(exclude[:n], dtype=bool)
    if avail.sum() < 8:
        return None
    best = None
    for c, r in _hough_candidates(pts[avail], p):
        res = _evaluate_arc(pts, avail, c[0], c[1], r, p)
        if res is None:
            continue
        if best is None or (res[2], -res[3]) > (best[2], -best[3]):
            best = res
    if best is None:
        return None
    circle, start, length, _ = best
    return circle, (start, (start + length - 1) % n)


def detect_arcs(trace: ClosedTrace, params: CircleParams | None = None, max_arcs: int = 8):
    """Repeated detect_circle, masking each found span; full circles stop the search."""
    pts = trace.points
    n = len(pts) - 1 if len(pts) > 1 and math.dist(tuple(pts[0]), tuple(pts[-1])) <= EPS_PT else len(pts)
    taken = np.zeros(n, dtype=bool)
    arcs = []
    for _ in range(max_arcs):
        found = detect_circle(trace, params, exclude=taken)
        if found is None:
            break
        circle, (s, e) = found
        length = (e - s) % n + 1
        arcs.append((circle, (s, e)))
        if length >= n:
            break
        taken[(s + np.arange(length)) % n] = True
    return arcs


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two closed polylines (vertex-to-edge)."""
    return max(float(distances_to_edges(a, b).max()), float(distances_to_edges(b, a).max()))
