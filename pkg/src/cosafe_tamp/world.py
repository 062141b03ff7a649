"""Static scene description and the dynamic environment state."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .decomposition import Rect, Workspace, rect_contains, rect_overlap
from .ltl import PropTable

FACES = ("+x", "-x", "+y", "-y")
FACE_INDEX = {f: i for i, f in enumerate(FACES)}


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class RobotSpec:
    start: tuple[float, float]
    radius: float = 0.2
    mass: float = 1.0
    f_max: float = 10.0
    v_max: float = 2.0
    orientation: float = 0.0


@dataclass(frozen=True)
class BodySpec:
    id: str
    kind: str  # "fixed" | "movable"
    center: tuple[float, float]
    half: tuple[float, float]
    mass: float = 1.0
    mu: float = 0.5
    # faces with an mRegion; None means all four
    mregions: tuple[str, ...] | None = None

    @property
    def rect(self) -> Rect:
        (cx, cy), (hx, hy) = self.center, self.half
        return (cx - hx, cy - hy, cx + hx, cy + hy)


@dataclass(frozen=True)
class RegionSpec:
    name: str
    rect: Rect


@dataclass(frozen=True)
class Scene:
    bounds: Rect
    robot: RobotSpec
    bodies: tuple[BodySpec, ...] = ()
    regions: tuple[RegionSpec, ...] = ()
    defaults: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        ids = [b.id for b in self.bodies]
        if len(set(ids)) != len(ids):
            raise SceneError("duplicate body id")
        for b in self.bodies:
            if b.kind not in ("fixed", "movable"):
                raise SceneError(f"body {b.id}: kind must be fixed or movable")
            if min(b.half) <= 0 or b.mass <= 0 or b.mu < 0:
                raise SceneError(f"body {b.id}: sizes and mass must be positive")
            if b.kind == "fixed" and b.mregions:
                raise SceneError(f"fixed body {b.id} cannot declare mRegions")
            if b.mregions and any(f not in FACE_INDEX for f in b.mregions):
                raise SceneError(f"body {b.id}: unknown face in mRegions")
        r = self.robot
        if min(r.radius, r.mass, r.f_max, r.v_max) <= 0:
            raise SceneError("robot radius, mass, force and speed bounds must be positive")
        x, y = r.start
        robot_box = (x - r.radius, y - r.radius, x + r.radius, y + r.radius)
        if not rect_contains(self.bounds, robot_box):
            raise SceneError("robot start leaves the workspace")
        for b in self.bodies:
            if b.kind == "movable" and not rect_contains(self.bounds, b.rect):
                raise SceneError(f"movable body {b.id} leaves the workspace")
        self.workspace()  # region checks
        self.props()

    @property
    def fixed(self) -> tuple[BodySpec, ...]:
        return tuple(b for b in self.bodies if b.kind == "fixed")

    @property
    def movable(self) -> tuple[BodySpec, ...]:
        return tuple(b for b in self.bodies if b.kind == "movable")

    def workspace(self) -> Workspace:
        try:
            return Workspace(self.bounds, tuple(r.rect for r in self.regions),
                             tuple(b.rect for b in self.fixed))
        except ValueError as exc:
            raise SceneError(str(exc)) from None

    def props(self) -> PropTable:
        try:
            return PropTable(r.name for r in self.regions)
        except ValueError as exc:
            raise SceneError(str(exc)) from None

    def default(self, key: str, fallback=None):
        return dict(self.defaults).get(key, fallback)

    def initial_state(self) -> "EnvState":
        mov = self.movable
        centers = np.array([b.center for b in mov], dtype=float).reshape(len(mov), 2)
        return EnvState.make(self.robot.start, (0.0, 0.0), centers, np.zeros_like(centers),
                             orientation=self.robot.orientation)

    def overlapping_pairs(self) -> list[tuple[str, str]]:
        out = []
        for i, a in enumerate(self.bodies):
            for b in self.bodies[i + 1:]:
                if (a.kind, b.kind) != ("fixed", "fixed") and rect_overlap(a.rect, b.rect) > 1e-9:
                    out.append((a.id, b.id))
        return out


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False, slots=True)
class EnvState:
    """Robot state plus poses and velocities of the movable bodies."""

    robot_p: np.ndarray
    robot_v: np.ndarray
    body_c: np.ndarray  # (M, 2), movable bodies in scene order
    body_v: np.ndarray
    robot_o: float = 0.0
    robot_w: float = 0.0
    step: int = 0
    _digest: list = field(default_factory=list, repr=False, compare=False)

    @classmethod
    def make(cls, robot_p, robot_v, body_c, body_v, orientation=0.0, step=0) -> "EnvState":
        return cls(_frozen(robot_p), _frozen(robot_v), _frozen(body_c).reshape(-1, 2),
                   _frozen(body_v).reshape(-1, 2), float(orientation), 0.0, step)

    def __eq__(self, other):
        if not isinstance(other, EnvState):
            return NotImplemented
        return self.digest() == other.digest() and self.step == other.step

    def __hash__(self):
        return hash(self.digest())

    def digest(self) -> str:
        """sha256 over the exact float bits of the dynamic state."""
        if not self._digest:
            h = hashlib.sha256()
            for arr in (self.robot_p, self.robot_v, self.body_c, self.body_v):
                h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
            h.update(np.array([self.robot_o, self.robot_w], dtype="<f8").tobytes())
            self._digest.append(h.hexdigest())
        return self._digest[0]

    def with_step(self, step: int) -> "EnvState":
        return replace(self, step=step, _digest=[])
