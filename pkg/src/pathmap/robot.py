"""Point robot with binary IR proximity sensors, wheel odometry and a gyroscope.

The host talks to the robot only through immutable messages: it sends a
:class:`Forward`, :class:`Turn` or :class:`Stop` command and receives an
:class:`OdometryDelta` plus a :class:`SensorFrame`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .errors import CollisionError, SimulationTimeout
from .geometry import Circle
from .world import Pose, WorldSpec, normalize_heading

BEARINGS = {
    "front": 0.0,
    "left": math.pi / 2,
    "rear": math.pi,
    "right": -math.pi / 2,
    "diag-fl": math.pi / 4,
    "diag-fr": -math.pi / 4,
    "diag-rl": 3 * math.pi / 4,
    "diag-rr": -3 * math.pi / 4,
}
CARDINAL = ("front", "left", "rear", "right")


@dataclass(frozen=True)
class SensorRig:
    trigger_distance: float = 0.2
    labels: tuple[str, ...] = CARDINAL

    def __post_init__(self):
        if not self.trigger_distance > 0:
            raise ValueError("trigger distance must be positive")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("sensor labels must be distinct")
        missing = set(CARDINAL) - set(self.labels)
        if missing:
            raise ValueError(f"cardinal sensors missing: {sorted(missing)}")
        unknown = set(self.labels) - set(BEARINGS)
        if unknown:
            raise ValueError(f"unknown sensor labels: {sorted(unknown)}")

    @property
    def bearings(self) -> np.ndarray:
        return np.array([BEARINGS[s] for s in self.labels])

    @classmethod
    def with_diagonals(cls, d: float = 0.2) -> "SensorRig":
        return cls(d, CARDINAL + ("diag-fl", "diag-fr", "diag-rl", "diag-rr"))


@dataclass(frozen=True)
class SensorFrame:
    labels: tuple[str, ...]
    readings: tuple[bool, ...]
    tick: int

    def __getitem__(self, label: str) -> bool:
        try:
            return self.readings[self.labels.index(label)]
        except ValueError:
            return False

    def any(self) -> bool:
        return any(self.readings)

    def bitmask(self) -> str:
        return "".join("1" if r else "0" for r in self.readings)


@dataclass(frozen=True)
class Forward:
    step: float


@dataclass(frozen=True)
class Turn:
    angle: float


@dataclass(frozen=True)
class Stop:
    pass


Command = Union[Forward, Turn, Stop]


@dataclass(frozen=True)
class OdometryDelta:
    distance: float
    heading_change: float
    tick: int


@dataclass(frozen=True)
class Limits:
    step_max: float = 0.02
    turn_max: float = math.radians(5.0)
    contact_margin: float = 0.02


@dataclass(frozen=True)
class NoiseConfig:
    """Zero-mean Gaussian noise; distance sigma is per meter, angular sigmas per radian."""

    sigma_dist: float = 0.0
    sigma_head: float = 0.0
    sigma_gyro: float = 0.0

    @property
    def enabled(self) -> bool:
        return self.sigma_dist > 0 or self.sigma_head > 0 or self.sigma_gyro > 0

    @classmethod
    def default_on(cls) -> "NoiseConfig":
        return cls(0.005, math.radians(0.2), math.radians(0.05))


NOISE_OFF = NoiseConfig()


class Obstacles:
    """Ray-castable view of a world: polygon edges plus analytic circles.

    Edges are bucketed in a uniform grid so that short-range queries (sensor
    beams, single steps) only visit nearby edges.
    """

    def __init__(self, world: WorldSpec, cell: float = 0.5):
        segs = []
        polys = []
        circles = []  # (cx, cy, r, robot_inside)
        for shape, inside in [(world.outer, True)] + [(p, False) for p in world.intrinsic] + [
            (s, False) for s in world.extrinsic
        ]:
            if isinstance(shape, Circle):
                circles.append((shape.center[0], shape.center[1], shape.radius, inside))
            else:
                v = shape.array
                w = np.roll(v, -1, axis=0)
                segs.append(np.column_stack([v, w]))
                polys.append((v[:, 0], v[:, 1], w[:, 0], w[:, 1], inside))
        self.segments = np.vstack(segs) if segs else np.zeros((0, 4))
        self.polygons = polys
        self.circles = circles
        self.cell = cell
        self._segs = [tuple(r) for r in self.segments.tolist()]
        self._grid: dict[tuple[int, int], list[int]] = {}
        self._blocks: dict[tuple[int, int], list[tuple]] = {}
        for k, (x0, y0, x1, y1) in enumerate(self._segs):
            for key in self._cells(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1)):
                self._grid.setdefault(key, []).append(k)

    def _cells(self, x0, y0, x1, y1):
        c = self.cell
        for i in range(math.floor(x0 / c), math.floor(x1 / c) + 1):
            for j in range(math.floor(y0 / c), math.floor(y1 / c) + 1):
                yield (i, j)

    def _block(self, x, y) -> list[tuple]:
        """Edges in the 3x3 block of cells around (x, y); covers any query of range <= cell."""
        i = math.floor(x / self.cell)
        j = math.floor(y / self.cell)
        hit = self._blocks.get((i, j))
        if hit is None:
            found = set()
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    found.update(self._grid.get((i + di, j + dj), ()))
            hit = self._blocks[(i, j)] = [self._segs[k] for k in sorted(found)]
        return hit

    def _near(self, x0, y0, x1, y1) -> list[tuple]:
        """Edges whose grid cells overlap the box."""
        if (x1 - x0) * (y1 - y0) > 400 * self.cell * self.cell:
            return self._segs
        found = set()
        for key in self._cells(x0, y0, x1, y1):
            found.update(self._grid.get(key, ()))
        return [self._segs[k] for k in sorted(found)]

    def ray_distances(self, origin, angles, max_range: float = math.inf) -> np.ndarray:
        """Distance along each ray to the nearest obstacle; inf when none lies within ``max_range``."""
        ox, oy = float(origin[0]), float(origin[1])
        if isinstance(angles, np.ndarray):
            angles = angles.ravel().tolist()
        elif not isinstance(angles, (list, tuple)):
            angles = [float(angles)]
        if max_range <= self.cell:
            segs = self._block(ox, oy)
        elif math.isfinite(max_range):
            segs = self._near(ox - max_range, oy - max_range, ox + max_range, oy + max_range)
        else:
            segs = self._segs
        out = np.empty(len(angles))
        for n, ang in enumerate(angles):
            ux = math.cos(ang)
            uy = math.sin(ang)
            best = math.inf
            for ax, ay, bx, by in segs:
                ex = bx - ax
                ey = by - ay
                den = ux * ey - uy * ex
                if den == 0.0:
                    continue
                dx = ax - ox
                dy = ay - oy
                t = (dx * ey - dy * ex) / den
                if t < 0.0 or t >= best:
                    continue
                s = (dx * uy - dy * ux) / den
                if -1e-12 <= s <= 1 + 1e-12:
                    best = t
            for cx, cy, r, inside in self.circles:
                dx = ox - cx
                dy = oy - cy
                b = ux * dx + uy * dy
                disc = b * b - (dx * dx + dy * dy - r * r)
                if disc < 0:
                    continue
                sq = math.sqrt(disc)
                if inside:
                    t = -b + sq
                else:
                    t = -b - sq if -b - sq >= 0 else -b + sq
                if 0 <= t < best:
                    best = t
            out[n] = best if best <= max_range else math.inf
        return out

    def crosses(self, p, q) -> bool:
        """Whether the straight move p->q passes through any obstacle edge."""
        x0, y0 = float(p[0]), float(p[1])
        x1, y1 = float(q[0]), float(q[1])
        mx, my = x1 - x0, y1 - y0
        if abs(mx) + abs(my) <= self.cell:
            segs = self._block(x0, y0)
        else:
            segs = self._near(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))
        for ax, ay, bx, by in segs:
            ex, ey = bx - ax, by - ay
            den = mx * ey - my * ex
            if den == 0.0:
                continue
            dx, dy = ax - x0, ay - y0
            t = (dx * ey - dy * ex) / den
            s = (dx * my - dy * mx) / den
            if 0.0 <= t <= 1.0 and 0.0 <= s <= 1.0:
                return True
        for cx, cy, r, _ in self.circles:
            if (math.hypot(x0 - cx, y0 - cy) < r) != (math.hypot(x1 - cx, y1 - cy) < r):
                return True
        return False

    def is_free(self, p) -> bool:
        x, y = float(p[0]), float(p[1])
        for cx, cy, r, inside in self.circles:
            dist = math.hypot(x - cx, y - cy)
            if inside and dist >= r:
                return False
            if not inside and dist <= r:
                return False
        for x0, y0, x1, y1, inside in self.polygons:
            # even-odd rule on a horizontal ray
            straddle = (y0 > y) != (y1 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xs = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            hit = bool(np.count_nonzero(straddle & (x < xs)) % 2)
            if hit != inside:
                return False
        return True


def sense(obstacles: Obstacles, pose: Pose, rig: SensorRig, tick: int = 0) -> SensorFrame:
    """Binary reading per sensor: obstacle within the trigger distance (closed)."""
    dist = obstacles.ray_distances(pose.position, pose.heading + rig.bearings, rig.trigger_distance)
    return SensorFrame(rig.labels, tuple(bool(r <= rig.trigger_distance) for r in dist), tick)


@dataclass(frozen=True)
class StepResult:
    pose: Pose
    delta: OdometryDelta
    frame: SensorFrame
    contact: bool


def step(
    obstacles: Obstacles,
    pose: Pose,
    cmd: Command,
    rig: SensorRig,
    limits: Limits = Limits(),
    noise: NoiseConfig = NOISE_OFF,
    rng: np.random.Generator | None = None,
    tick: int = 0,
) -> StepResult:
    """Execute one command against the ground truth."""
    dist = 0.0
    dtheta = 0.0
    reported_turn = 0.0
    contact = False
    heading = pose.heading
    x, y = pose.x, pose.y
    if isinstance(cmd, Turn):
        if abs(cmd.angle) > limits.turn_max + 1e-12:
            raise ValueError(f"turn {cmd.angle} exceeds turn_max")
        dtheta = cmd.angle
        if noise.sigma_head > 0 and dtheta != 0:
            dtheta += rng.normal(0.0, noise.sigma_head * abs(dtheta))
        reported_turn = dtheta
        if noise.sigma_gyro > 0 and dtheta != 0:
            reported_turn += rng.normal(0.0, noise.sigma_gyro * abs(dtheta))
        heading = heading + dtheta
    elif isinstance(cmd, Forward):
        if abs(cmd.step) > limits.step_max + 1e-12:
            raise ValueError(f"step {cmd.step} exceeds step_max")
        s = cmd.step
        if noise.sigma_dist > 0 and s != 0:
            s += rng.normal(0.0, noise.sigma_dist * abs(s))
        direction = heading if s >= 0 else heading + math.pi
        reach = abs(s) + limits.contact_margin
        free = float(obstacles.ray_distances((x, y), [direction], reach)[0])
        allowed = max(0.0, free - limits.contact_margin)
        if abs(s) > allowed:
            contact = True
            s = math.copysign(allowed, s)
        nx = x + s * math.cos(heading)
        ny = y + s * math.sin(heading)
        # a free start plus an edge-free move keeps the robot free
        if obstacles.crosses((x, y), (nx, ny)):
            raise CollisionError(f"robot moved into an obstacle at ({nx:.4f}, {ny:.4f})")
        x, y = nx, ny
        dist = s
    new_pose = Pose(x, y, heading)
    frame = sense(obstacles, new_pose, rig, tick)
    return StepResult(new_pose, OdometryDelta(dist, reported_turn, tick), frame, contact)


def apply_delta(pose: Pose, delta: OdometryDelta) -> Pose:
    """Dead-reckon one delta: rotate, then translate along the new heading."""
    h = pose.heading + delta.heading_change
    return Pose(pose.x + delta.distance * math.cos(h), pose.y + delta.distance * math.sin(h), h)


def integrate_odometry(deltas: Iterable[OdometryDelta], start: Pose) -> Pose:
    pose = start
    for d in deltas:
        pose = apply_delta(pose, d)
    return pose


def _fmt_cmd(cmd: Command) -> str:
    if isinstance(cmd, Forward):
        return f"F{cmd.step:.6f}"
    if isinstance(cmd, Turn):
        return f"T{cmd.angle:.9f}"
    return "S"


@dataclass
class Simulator:
    """One robot in one world.

    ``pose`` is ground truth and never read by host-side algorithms; they use
    ``estimate``, the dead-reckoned pose built from odometry deltas.
    """

    world: WorldSpec
    rig: SensorRig = field(default_factory=SensorRig)
    limits: Limits = field(default_factory=Limits)
    noise: NoiseConfig = NOISE_OFF
    seed: int = 0
    log: list[str] | None = None
    max_ticks: int | None = None

    def __post_init__(self):
        self.obstacles = Obstacles(self.world)
        self.pose = self.world.start
        self.estimate = self.world.start
        self.rng = np.random.default_rng(self.seed)
        self.tick = 0
        self.distance = 0.0
        self.frame = sense(self.obstacles, self.pose, self.rig, 0)
        if self.log is not None:
            s = self.world.start
            self.log.append(f"#start {s.x!r} {s.y!r} {s.heading!r} {','.join(self.rig.labels)}")

    @property
    def d(self) -> float:
        return self.rig.trigger_distance

    def execute(self, cmd: Command) -> tuple[OdometryDelta, SensorFrame, bool]:
        if self.max_ticks is not None and self.tick >= self.max_ticks:
            raise SimulationTimeout(f"tick budget of {self.max_ticks} exhausted")
        self.tick += 1
        res = step(self.obstacles, self.pose, cmd, self.rig, self.limits, self.noise, self.rng, self.tick)
        self.pose = res.pose
        self.estimate = apply_delta(self.estimate, res.delta)
        self.frame = res.frame
        self.distance += abs(res.delta.distance)
        if self.log is not None:
            self.log.append(
                f"{self.tick},{_fmt_cmd(cmd)},{res.delta.distance:.9f},{res.delta.heading_change:.9f},{res.frame.bitmask()}"
            )
        return res.delta, res.frame, res.contact

    def event(self, name: str, **info):
        if self.log is not None:
            extra = " ".join(f"{k}={v}" for k, v in info.items())
            self.log.append(f"#event {self.tick} {name} {extra}".rstrip())

    # convenience motions; each tick respects the per-tick limits

    def turn_to(self, heading: float) -> int:
        """Rotate in place toward an absolute (estimated) heading."""
        n = 0
        while True:
            err = normalize_heading(heading - self.estimate.heading)
            if abs(err) <= 1e-9:
                return n
            self.execute(Turn(max(-self.limits.turn_max, min(self.limits.turn_max, err))))
            n += 1
