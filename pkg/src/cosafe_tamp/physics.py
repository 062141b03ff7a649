"""2D push physics: propagator, validity checker and control sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .knowledge import AbstractKnowledge, InstKnowledge, ManipClass
from .world import FACES, EnvState, Scene

G = 9.81
EPS_PEN = 1e-3


@dataclass(frozen=True)
class Contact:
    body: str
    face: str
    inside_mregion: bool


@dataclass(frozen=True)
class ContactReport:
    contacts: tuple[Contact, ...] = ()
    hit_fixed: bool = False
    displaced: tuple[str, ...] = ()


class World:
    """Static arrays of a scene, prepared for the kernels."""

    def __init__(self, scene: Scene, knowledge: AbstractKnowledge | None = None, *,
                 n_substeps: int = 10, g: float = G, v_body_max: float = 2.0,
                 n_min: int = 1, n_max: int = 20, backend: str | None = None):
        self.scene = scene
        self.knowledge = knowledge or AbstractKnowledge.from_scene(scene)
        self.n_substeps = int(n_substeps)
        self.g = float(g)
        self.v_body_max = float(v_body_max)
        self.n_min, self.n_max = int(n_min), int(n_max)
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError("need 1 <= n_min <= n_max")
        self.backend = backend or kernels.backend_name()
        self._substeps, _ = kernels.get_kernels(self.backend)

        r = scene.robot
        self.radius, self.robot_mass = float(r.radius), float(r.mass)
        self.f_max, self.v_max = float(r.f_max), float(r.v_max)
        mov = scene.movable
        self.body_ids = tuple(b.id for b in mov)
        self.half = np.array([b.half for b in mov], dtype=float).reshape(-1, 2)
        self.mass = np.array([b.mass for b in mov], dtype=float)
        self.mu = np.array([b.mu for b in mov], dtype=float)
        self.mdepth = self.knowledge.mregion_depths()
        self.fixed = np.array([b.rect for b in scene.fixed], dtype=float).reshape(-1, 4)
        self.bounds = np.array(scene.bounds, dtype=float)

    def initial_state(self) -> EnvState:
        return self.scene.initial_state()

    def propagate(self, state: EnvState, u, dt: float) -> tuple[EnvState, ContactReport]:
        u = np.asarray(u, dtype=float)
        if u.shape != (2,) or not np.all(np.isfinite(u)):
            raise ValueError(f"control must be a finite 2-vector, got {u!r}")
        if not dt > 0:
            raise ValueError("dt must be positive")
        rp = np.array(state.robot_p)
        rv = np.array(state.robot_v)
        bc = np.array(state.body_c)
        bv = np.array(state.body_v)
        m = len(self.body_ids)
        face_mask = np.zeros(m, dtype=np.int64)
        onset_bad = np.zeros(m, dtype=np.int64)
        h = dt / self.n_substeps
        hit = self._substeps(rp, rv, bc, bv, self.half, self.mass, self.mu, self.mdepth,
                             self.fixed, self.bounds, u, self.radius, self.robot_mass,
                             self.v_max, self.v_body_max, self.g, h, self.n_substeps,
                             face_mask, onset_bad)
        contacts = []
        for b in np.nonzero(face_mask)[0]:
            for f in range(4):
                if face_mask[b] >> f & 1:
                    contacts.append(Contact(self.body_ids[b], FACES[f], not (onset_bad[b] >> f & 1)))
        moved = np.nonzero(np.any(bc != state.body_c, axis=1))[0]
        report = ContactReport(tuple(contacts), bool(hit), tuple(self.body_ids[b] for b in moved))
        new = EnvState.make(rp, rv, bc, bv, state.robot_o, state.step + 1)
        if not len(moved) and not np.any(bv) and not np.any(state.body_v):
            # bodies at rest and untouched: share the parent's arrays (tree memory)
            new = replace(new, body_c=state.body_c, body_v=state.body_v)
        return new, report

    def validity_check(self, state: EnvState, kappa: InstKnowledge, report: ContactReport) -> bool:
        """True iff the propagated state respects every constraint in ``kappa``."""
        if report.hit_fixed:
            return False
        for c in report.contacts:
            status = kappa.status(c.body)
            if c.face not in status.allowed or not c.inside_mregion:
                return False
        for bid in report.displaced:
            if kappa.status(bid).cls is ManipClass.TEMPORARILY_FIXED:
                return False
        if math.hypot(*state.robot_v) > self.v_max * (1 + 1e-9):
            return False
        if len(state.body_v) and np.max(np.hypot(state.body_v[:, 0], state.body_v[:, 1])) > self.v_body_max * (1 + 1e-9):
            return False
        x0, y0, x1, y1 = self.bounds
        px, py = state.robot_p
        r = self.radius
        return bool(x0 + r - 1e-9 <= px <= x1 - r + 1e-9 and y0 + r - 1e-9 <= py <= y1 - r + 1e-9)

    def sample_control(self, rng: np.random.Generator) -> tuple[np.ndarray, int]:
        u = rng.uniform(-self.f_max, self.f_max, size=2)
        n = int(rng.integers(self.n_min, self.n_max + 1))
        return u, n

    def max_penetration(self, state: EnvState) -> float:
        """Deepest overlap between any two bodies (robot, movable, fixed)."""
        worst = 0.0
        rects = np.concatenate([state.body_c - self.half, state.body_c + self.half], axis=1)
        others = np.concatenate([rects, self.fixed])
        p = state.robot_p
        for k, rc in enumerate(others):
            q = np.clip(p, rc[:2], rc[2:])
            d = float(np.hypot(*(p - q)))
            if d == 0.0:
                d = -min(p[0] - rc[0], rc[2] - p[0], p[1] - rc[1], rc[3] - p[1])
            worst = max(worst, self.radius - d)
        for i, a in enumerate(rects):
            for b in others[i + 1:]:
                ox = min(a[2], b[2]) - max(a[0], b[0])
                oy = min(a[3], b[3]) - max(a[1], b[1])
                if ox > 0 and oy > 0:
                    worst = max(worst, min(ox, oy))
            for ax in range(2):
                worst = max(worst, self.bounds[ax] - a[ax], a[ax + 2] - self.bounds[ax + 2])
        for ax in range(2):
            worst = max(worst, self.bounds[ax] + self.radius - p[ax], p[ax] + self.radius - self.bounds[ax + 2])
        return worst
