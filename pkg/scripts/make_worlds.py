"""Regenerate the JSON world fixtures under worlds/.

Run from the repository root: ``python3 scripts/make_worlds.py``. The output
is deterministic, so rerunning it leaves the committed files unchanged.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import shapely

from pathmap.geometry import Circle, Polygon
from pathmap.world import Pose, WorldSpec, dump_world, to_shapely, validate_world

ROOT = Path(__file__).resolve().parents[1] / "worlds"
D = 0.2

SQUARE = Polygon.from_points([(0, 0), (10, 0), (10, 10), (0, 10)])
L_ROOM = Polygon.from_points([(0, 0), (10, 0), (10, 5), (5, 5), (5, 10), (0, 10)])


def stadium(half: float = 2.0, r: float = 2.0, cy: float = 2.0, n: int = 181) -> Polygon:
    right = [(half + r * math.cos(a), cy + r * math.sin(a)) for a in np.linspace(-math.pi / 2, math.pi / 2, n)]
    left = [(-half + r * math.cos(a), cy + r * math.sin(a)) for a in np.linspace(math.pi / 2, 3 * math.pi / 2, n)]
    return Polygon.from_points(right + left)


def square_at(cx: float, cy: float, side: float) -> Polygon:
    h = side / 2
    return Polygon.from_points([(cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)])


def main_worlds() -> dict[str, WorldSpec]:
    return {
        "square": WorldSpec(SQUARE, start=Pose(3, 5, math.pi)),
        "circle": WorldSpec(Circle((5, 5), 5), start=Pose(5.5, 5.3, 0)),
        "l_shape": WorldSpec(L_ROOM, start=Pose(2, 2, 0)),
        "stadium": WorldSpec(stadium(), start=Pose(0, 2, 0)),
        "square_object": WorldSpec(SQUARE, extrinsic=(square_at(6.5, 5, 1.0),), start=Pose(3, 5, math.pi)),
        "disk_object": WorldSpec(SQUARE, extrinsic=(Circle((6.5, 5), 0.3),), start=Pose(3, 5, math.pi)),
        # tangent to one line of the square room's alpha = 2 plan and about 0.1 m clear of every other line
        "grazing_disk": WorldSpec(SQUARE, extrinsic=(Circle((8.075291, 6.064155), 0.3),), start=Pose(3, 5, math.pi)),
        "intrinsic_and_extrinsic": WorldSpec(
            SQUARE,
            intrinsic=(Polygon.from_points([(4, -0.5), (6, -0.5), (6, 2), (4, 2)]),),
            extrinsic=(square_at(6.5, 6.5, 1.0),),
            start=Pose(2, 5, math.pi),
        ),
    }


def invalid_worlds() -> dict[str, WorldSpec]:
    # 0.3 m from the left wall, below the 2d = 0.4 m clearance
    return {"bad_clearance": WorldSpec(SQUARE, extrinsic=(square_at(0.8, 5, 1.0),), start=Pose(5, 5, 0))}


def boundaries() -> dict[str, dict]:
    return {
        "unit_square": {"polygon": [[0, 0], [1, 0], [1, 1], [0, 1]]},
        "unit_circle": {"circle": {"center": [0, 0], "radius": 1}},
        "l_boundary": {"polygon": [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]},
    }


def classification_suite(n: int = 20, seed: int = 7) -> dict[str, WorldSpec]:
    """Rooms with scattered objects; half aim the start heading at an object."""
    rng = np.random.default_rng(seed)
    rooms = [SQUARE, L_ROOM, Circle((5, 5), 5)]
    out: dict[str, WorldSpec] = {}
    while len(out) < n:
        k = len(out)
        room = rooms[k % len(rooms)]
        region = to_shapely(room)
        objs = []
        for _ in range(int(rng.integers(1, 3))):
            cx, cy = rng.uniform(1.5, 8.5, size=2)
            size = float(rng.uniform(0.4, 1.2))
            obj = Circle((float(cx), float(cy)), size / 2) if rng.random() < 0.5 else square_at(float(cx), float(cy), size)
            objs.append(obj)
        sx, sy = rng.uniform(1.0, 9.0, size=2)
        start_xy = (round(float(sx), 3), round(float(sy), 3))
        if k % 2 == 0:
            c = to_shapely(objs[0]).centroid
            heading = math.atan2(c.y - start_xy[1], c.x - start_xy[0])
        else:
            heading = float(rng.uniform(-math.pi, math.pi))
        w = WorldSpec(room, extrinsic=tuple(objs), start=Pose(*start_xy, heading))
        if validate_world(w, D) or not region.contains(shapely.Point(start_xy)):
            continue
        out[f"classify_{k:02d}"] = w
    return out


def write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text if text.endswith("\n") else text + "\n")


def main():
    for name, w in {**main_worlds(), **invalid_worlds()}.items():
        write(ROOT / f"{name}.json", dump_world(w))
    for name, doc in boundaries().items():
        write(ROOT / "boundaries" / f"{name}.json", json.dumps(doc, indent=2))
    for name, w in classification_suite().items():
        write(ROOT / "classify" / f"{name}.json", dump_world(w))
    print(f"wrote worlds to {ROOT}")


if __name__ == "__main__":
    main()
