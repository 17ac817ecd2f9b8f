"""Independent brute-force oracles and instance generators for the tests.

Nothing here calls the code under test for the quantity being checked; the
oracles use exact integer arithmetic, dense sampling, or shapely.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import shapely
from shapely.geometry import LineString, Point
from shapely.geometry import Polygon as ShPolygon

# ------------------------------------------------------------------ hulls


def _orient(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def brute_hull_vertices(points) -> set:
    """Strict hull vertices by O(n^3) edge enumeration.

    Directed pair (i, j) is a hull edge when every other point is strictly
    left of i->j or lies on the closed segment ij. Its endpoints are then
    extreme points, except that points strictly inside a hull edge are not
    vertices. Exact for integer or Fraction coordinates.
    """
    pts = sorted(set(map(tuple, points)))
    verts = set()
    for i, p in enumerate(pts):
        for j, q in enumerate(pts):
            if i == j:
                continue
            ok = True
            for k, r in enumerate(pts):
                if k in (i, j):
                    continue
                o = _orient(p, q, r)
                if o < 0:
                    ok = False
                    break
                if o == 0 and not (min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])):
                    ok = False
                    break
            if ok:
                verts.add(p)
                verts.add(q)
    return verts


def convex_by_area(vertices) -> bool:
    """A simple polygon is convex iff its area equals its hull's area (shapely)."""
    poly = ShPolygon(vertices)
    return math.isclose(poly.area, poly.convex_hull.area, rel_tol=1e-12, abs_tol=1e-12)


# ------------------------------------------------------------ containment


def winding_number(p, verts) -> int:
    """Exact winding number with Fractions; p must not lie on the boundary."""
    px, py = Fraction(p[0]), Fraction(p[1])
    wn = 0
    n = len(verts)
    for i in range(n):
        ax, ay = map(Fraction, verts[i])
        bx, by = map(Fraction, verts[(i + 1) % n])
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        if ay <= py < by and cross > 0:
            wn += 1
        elif by <= py < ay and cross < 0:
            wn -= 1
    return wn


def on_boundary_exact(p, verts) -> bool:
    px, py = Fraction(p[0]), Fraction(p[1])
    n = len(verts)
    for i in range(n):
        ax, ay = map(Fraction, verts[i])
        bx, by = map(Fraction, verts[(i + 1) % n])
        if (bx - ax) * (py - ay) - (by - ay) * (px - ax) != 0:
            continue
        if min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by):
            return True
    return False


def location_oracle(p, verts) -> str:
    if on_boundary_exact(p, verts):
        return "on_boundary"
    return "inside" if winding_number(p, verts) != 0 else "outside"


def _winding_many(pts: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Vectorized float winding numbers (oracle for dense sampling)."""
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    a = verts[None, :, :]
    b = np.roll(verts, -1, axis=0)[None, :, :]
    ax, ay, bx, by = a[..., 0], a[..., 1], b[..., 0], b[..., 1]
    cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
    up = (ay <= y) & (y < by) & (cross > 0)
    down = (by <= y) & (y < ay) & (cross < 0)
    return up.sum(axis=1) - down.sum(axis=1)


def _dist_to_edges(pts: np.ndarray, verts: np.ndarray) -> np.ndarray:
    a = verts
    b = np.roll(verts, -1, axis=0)
    ab = b - a
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip((ap * ab).sum(-1) / np.maximum((ab * ab).sum(-1), 1e-300), 0, 1)
    proj = a[None] + t[..., None] * ab[None]
    return np.hypot(*(pts[:, None, :] - proj).transpose(2, 0, 1)).min(axis=1)


def segment_in_region_dense(a, b, verts, samples: int = 10_000, tol: float = 1e-9) -> bool:
    """Every one of ``samples`` evenly spaced points on ab is inside or within tol of an edge."""
    verts = np.asarray(verts, dtype=float)
    t = np.linspace(0.0, 1.0, samples)[:, None]
    pts = np.asarray(a, dtype=float) + t * (np.asarray(b, dtype=float) - np.asarray(a, dtype=float))
    inside = _winding_many(pts, verts) != 0
    if inside.all():
        return True
    near = _dist_to_edges(pts[~inside], verts) <= tol
    return bool(near.all())


# ------------------------------------------------------------- generators


def random_points(rng: np.random.Generator, n: int, lo: int = 0, hi: int = 20) -> list[tuple[int, int]]:
    return [tuple(int(v) for v in rng.integers(lo, hi + 1, size=2)) for _ in range(n)]


def random_simple_polygon(rng: np.random.Generator, n_max: int = 20, scale: int = 20):
    """Star-shaped integer polygon with 3..n_max vertices, no repeated or collinear-consecutive vertices."""
    while True:
        n = int(rng.integers(3, n_max + 1))
        ang = np.sort(rng.uniform(0, 2 * np.pi, size=n))
        rad = rng.uniform(0.2, 1.0, size=n) * scale / 2
        c = scale / 2
        verts = [(int(round(c + r * math.cos(t))), int(round(c + r * math.sin(t)))) for r, t in zip(rad, ang)]
        clean = []
        for v in verts:
            if not clean or clean[-1] != v:
                clean.append(v)
        if len(clean) > 1 and clean[0] == clean[-1]:
            clean.pop()
        if len(clean) < 3 or len(set(clean)) != len(clean):
            continue
        m = len(clean)
        if any(_orient(clean[i - 1], clean[i], clean[(i + 1) % m]) == 0 for i in range(m)):
            continue
        sp = ShPolygon(clean)
        if not sp.is_valid or sp.area <= 0:
            continue
        if sp.exterior.is_ccw is False:
            clean.reverse()
        return clean


def random_convex_polygon(rng: np.random.Generator, n_points: int = 12, scale: float = 10.0):
    """Shapely hull of random points, CCW."""
    while True:
        pts = rng.uniform(0, scale, size=(n_points, 2))
        hull = shapely.convex_hull(shapely.MultiPoint(pts))
        if hull.geom_type != "Polygon" or hull.area < 0.05 * scale * scale:
            continue
        hull = shapely.normalize(hull)
        coords = list(hull.exterior.coords)[:-1]
        if not ShPolygon(coords).exterior.is_ccw:
            coords.reverse()
        return coords


def random_concave_polygon(rng: np.random.Generator, n_max: int = 10, scale: float = 10.0):
    """Star-shaped float polygon with at least one reflex vertex."""
    while True:
        n = int(rng.integers(5, n_max + 1))
        ang = np.sort(rng.uniform(0, 2 * np.pi, size=n))
        rad = rng.uniform(0.25, 1.0, size=n) * scale / 2
        verts = [(scale / 2 + r * math.cos(t), scale / 2 + r * math.sin(t)) for r, t in zip(rad, ang)]
        sp = ShPolygon(verts)
        if not sp.is_valid or convex_by_area(verts):
            continue
        if min(math.dist(verts[i], verts[(i + 1) % n]) for i in range(n)) < 0.05 * scale:
            continue
        return verts


# -------------------------------------------------------------- plans


def fan_grid(a, b, alpha: float, eps: float = 1e-6):
    """Points from a toward b every alpha, plus b itself."""
    L = math.dist(a, b)
    out = [tuple(map(float, a))]
    k = 1
    while k * alpha < L - eps:
        out.append((a[0] + (b[0] - a[0]) * k * alpha / L, a[1] + (b[1] - a[1]) * k * alpha / L))
        k += 1
    out.append(tuple(map(float, b)))
    return out


def overlaps_boundary(p, q, verts, tol: float = 1e-9) -> bool:
    line = LineString([p, q])
    return line.intersection(ShPolygon(verts).exterior).length > tol


def enumerate_plan_dense(verts, alpha: float) -> set:
    """Unordered segments of the fan plan, with region checks by dense sampling."""
    n = len(verts)
    out = set()
    for i in range(n):
        p = tuple(map(float, verts[i]))
        for off in range(1, n - 1):
            j = (i + off) % n
            a, b = verts[j], verts[(j + 1) % n]
            for q in fan_grid(a, b, alpha):
                if math.dist(p, q) <= 1e-9 or overlaps_boundary(p, q, verts):
                    continue
                if not segment_in_region_dense(p, q, verts):
                    continue
                key = tuple(sorted([tuple(round(c, 6) for c in p), tuple(round(c, 6) for c in q)]))
                out.add(key)
    return out


def circle_plan_oracle(alpha: float, radius: float = 1.0) -> int:
    """Distinct diameters when stepping points alpha apart by arc length round a full circle."""
    step = alpha / radius
    angles = []
    k = 0
    while k * step < 2 * math.pi - 1e-9:
        angles.append((k * step) % math.pi)
        k += 1
    uniq = []
    for a in angles:
        if not any(min(abs(a - b), math.pi - abs(a - b)) < 1e-9 for b in uniq):
            uniq.append(a)
    return len(uniq)


# ---------------------------------------------------------- simulation


def inward_offset(region: ShPolygon, d: float) -> np.ndarray:
    """Ring of the region shrunk by d (the robot's ideal wall-following track)."""
    inner = region.buffer(-d, quad_segs=64, join_style="mitre")
    if inner.geom_type != "Polygon":
        inner = max(inner.geoms, key=lambda g: g.area)
    return np.asarray(inner.exterior.coords)[:-1]


def outward_offset(shape, d: float) -> np.ndarray:
    """Ring of an obstacle grown by d with round corners (the ideal circling track)."""
    return np.asarray(shape.buffer(d, quad_segs=64).exterior.coords)[:-1]


def seek_first_contact(world, step: float = 0.002) -> str:
    """Which obstacle stops a straight seek along the start heading.

    Steps a point along the heading and, at each position, casts the four
    cardinal beams of length d with shapely; the first beam that touches an
    obstacle names it.
    """
    from pathmap.world import to_shapely

    d = 0.2
    h = world.start.heading
    outer = to_shapely(world.outer).exterior
    objs = [to_shapely(o) for o in world.extrinsic]
    x, y = world.start.position
    for k in range(int(30 / step)):
        px, py = x + k * step * math.cos(h), y + k * step * math.sin(h)
        hits = []
        for bearing in (0.0, math.pi / 2, math.pi, -math.pi / 2):
            beam = LineString([(px, py), (px + d * math.cos(h + bearing), py + d * math.sin(h + bearing))])
            if beam.intersects(outer):
                hits.append("boundary")
            hits += ["extrinsic" for o in objs if beam.intersects(o)]
        if hits:
            return "extrinsic" if "extrinsic" in hits else "boundary"
    raise AssertionError("seek never touched anything")


def largest_gap(plan_segments, region_ring: np.ndarray, lo: float, hi: float, n: int = 481):
    """Grid point farthest from every plan segment and the region ring, with that clearance."""
    xs = np.linspace(lo, hi, n)
    grid = np.array([(x, y) for x in xs for y in xs])
    best = _dist_to_edges(grid, region_ring)
    for p, q in plan_segments:
        seg = np.array([p, q], dtype=float)
        ab = seg[1] - seg[0]
        ap = grid - seg[0]
        t = np.clip(ap @ ab / max(ab @ ab, 1e-300), 0, 1)
        best = np.minimum(best, np.hypot(*(grid - (seg[0] + t[:, None] * ab)).T))
    k = int(np.argmax(best))
    return tuple(grid[k]), float(best[k])


def r_squared(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())


def point_in_shapely(p, region) -> bool:
    return region.covers(Point(p))
