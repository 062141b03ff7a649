"""Abstract and instantiated knowledge, feasibility and formula simplification."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .decomposition import Decomposition
from .ltl import (FALSE, TRUE, Atom, Formula, ListNode, Not, Or, build_list_view, propositions_of,
                  replace_at, simplify_constants)
from .world import FACE_INDEX, FACES, EnvState, Scene

OCCUPANCY_TOL = 1e-6  # m^2
MREGION_MARGIN = 0.01  # m beyond the robot diameter

LTL_OPERATORS = ("!", "&", "|", "F", "X", "U")


class ManipClass(enum.Enum):
    FREELY_MOVABLE = "FreelyMovable"
    CONSTRAINT_ORIENTED = "ConstraintOriented"
    TEMPORARILY_FIXED = "TemporarilyFixed"


@dataclass(frozen=True)
class BodyKnowledge:
    id: str
    kind: str
    mass: float
    mu: float
    half: tuple[float, float]
    mregions: tuple[tuple[str, float], ...]  # (face, depth)


@dataclass(frozen=True)
class RobotKnowledge:
    radius: float
    mass: float
    f_max: float
    v_max: float


@dataclass(frozen=True)
class AbstractKnowledge:
    """Static facts about bodies and robot; never changes while planning."""

    bodies: tuple[BodyKnowledge, ...]
    robot: RobotKnowledge
    fixed_rects: tuple[tuple[float, float, float, float], ...]
    bounds: tuple[float, float, float, float]
    operators: tuple[str, ...] = LTL_OPERATORS

    @classmethod
    def from_scene(cls, scene: Scene) -> "AbstractKnowledge":
        r = scene.robot
        depth = 2 * r.radius + MREGION_MARGIN
        bodies = []
        for b in scene.bodies:
            if b.kind == "fixed":
                mreg = ()
            else:
                faces = FACES if b.mregions is None else b.mregions
                mreg = tuple((f, depth) for f in faces)
            bodies.append(BodyKnowledge(b.id, b.kind, b.mass, b.mu, tuple(b.half), mreg))
        return cls(tuple(bodies), RobotKnowledge(r.radius, r.mass, r.f_max, r.v_max),
                   tuple(b.rect for b in scene.fixed), tuple(scene.bounds))

    @property
    def movable(self) -> tuple[BodyKnowledge, ...]:
        return tuple(b for b in self.bodies if b.kind == "movable")

    def mregion_depths(self) -> np.ndarray:
        mov = self.movable
        out = np.zeros((len(mov), 4))
        for i, b in enumerate(mov):
            for face, depth in b.mregions:
                out[i, FACE_INDEX[face]] = depth
        return out


@dataclass(frozen=True)
class ManipStatus:
    cls: ManipClass
    allowed: frozenset[str]  # faces the robot may push from (their mRegion is free)

    @property
    def free(self) -> frozenset[str]:
        return self.allowed


@dataclass(frozen=True, slots=True)
class InstKnowledge:
    statuses: tuple[tuple[str, ManipStatus], ...]
    step: int = field(default=0, compare=False)
    poses: np.ndarray | None = field(default=None, compare=False, repr=False)
    knowledge: AbstractKnowledge | None = field(default=None, compare=False, repr=False)

    def status(self, body_id: str) -> ManipStatus:
        for bid, st in self.statuses:
            if bid == body_id:
                return st
        raise KeyError(body_id)

    def as_dict(self) -> dict[str, ManipStatus]:
        return dict(self.statuses)


def mregion_rects(centers: np.ndarray, halves: np.ndarray, depths: np.ndarray) -> np.ndarray:
    """(M, 4, 4) rectangles extruded outward from each face."""
    c, h, d = centers, halves, depths
    x0, y0 = c[:, 0] - h[:, 0], c[:, 1] - h[:, 1]
    x1, y1 = c[:, 0] + h[:, 0], c[:, 1] + h[:, 1]
    out = np.empty((len(c), 4, 4))
    out[:, 0] = np.column_stack([x1, y0, x1 + d[:, 0], y1])
    out[:, 1] = np.column_stack([x0 - d[:, 1], y0, x0, y1])
    out[:, 2] = np.column_stack([x0, y1, x1, y1 + d[:, 2]])
    out[:, 3] = np.column_stack([x0, y0 - d[:, 3], x1, y0])
    return out


def _classify(free_row, declared_row) -> ManipStatus:
    allowed = frozenset(FACES[f] for f in range(4) if free_row[f])
    n_decl = int(np.count_nonzero(declared_row))
    if n_decl and len(allowed) == n_decl:
        cls = ManipClass.FREELY_MOVABLE
    elif not allowed:
        cls = ManipClass.TEMPORARILY_FIXED
    else:
        cls = ManipClass.CONSTRAINT_ORIENTED
    return ManipStatus(cls, allowed)


def _infer(K: AbstractKnowledge, E: EnvState, step: int, backend: str | None = None) -> InstKnowledge:
    mov = K.movable
    if len(mov) != len(E.body_c):
        raise ValueError(f"state has {len(E.body_c)} movable bodies, knowledge has {len(mov)}")
    halves = np.array([b.half for b in mov], dtype=float).reshape(-1, 2)
    depths = K.mregion_depths()
    declared = depths > 0
    centers = np.asarray(E.body_c, dtype=float)
    rects = np.concatenate([centers - halves, centers + halves], axis=1)
    fixed = np.array(K.fixed_rects, dtype=float).reshape(-1, 4)
    _, free_fn = kernels.get_kernels(backend)
    free = free_fn(mregion_rects(centers, halves, depths), declared, rects, fixed,
                   np.array(K.bounds, dtype=float), OCCUPANCY_TOL)
    statuses = tuple((b.id, _classify(free[i], declared[i])) for i, b in enumerate(mov))
    return InstKnowledge(statuses, step, E.body_c, K)


def infer_initial(K: AbstractKnowledge, E: EnvState) -> InstKnowledge:
    """Manipulation status of every movable body in the initial state."""
    return _infer(K, E, 0)


def inference(E_new: EnvState, kappa: InstKnowledge) -> InstKnowledge:
    """Recompute manipulation constraints for a newly propagated state."""
    K = kappa.knowledge
    if K is None:
        raise ValueError("instantiated knowledge carries no abstract knowledge")
    if kappa.poses is not None and np.array_equal(kappa.poses, E_new.body_c):
        return kappa  # nothing moved; step stays at the last real inference
    return _infer(K, E_new, kappa.step + 1)


# ---------------------------------------------------------------------------
# feasibility and simplification


@dataclass(frozen=True)
class NonvalidSet:
    props: frozenset[int]
    reasons: tuple[tuple[int, str], ...] = ()

    def __contains__(self, pid: int) -> bool:
        return pid in self.props

    def __bool__(self) -> bool:
        return bool(self.props)

    def __iter__(self):
        return iter(sorted(self.props))


def feasibility(K: AbstractKnowledge, n_props: int, D: Decomposition, start) -> NonvalidSet:
    """Propositions whose regions cannot be reached through the fixed bodies.

    Movable bodies are ignored: they can be pushed out of the way.
    """
    start_cell, _ = D.locate(start)  # raises inside a fixed body
    reach = D.reachable(start_cell)
    reachable_labels = set(np.unique(D.labels[reach]).tolist())
    present = set(np.unique(D.labels).tolist())
    bad, reasons = set(), []
    for pid in range(1, n_props):
        if pid not in reachable_labels:
            bad.add(pid)
            reasons.append((pid, "enclosed-by-fixed" if pid in present else "no-accessible-cell"))
    return NonvalidSet(frozenset(bad), tuple(reasons))


def _delete(phi: Formula, node: ListNode) -> Formula:
    """phi without the list ``node``, whose parent is a disjunction."""
    parent = node.parent
    sibling = parent.children[1 - (node.order - 1)].formula
    return replace_at(phi, parent.path, sibling)


def simplify(L: ListNode, phi: Formula) -> Formula | None:
    """Drop the nearest enclosing disjunct of ``L``; None if there is none."""
    if "|" in L.op and L.parent is not None and isinstance(L.parent.formula, Or):
        return _delete(phi, L)
    if L.parent is None or L.parent.parent is None:
        return None
    return simplify(L.parent, phi)


def _drop_negated(phi: Formula, bad: NonvalidSet) -> Formula:
    if isinstance(phi, Not) and isinstance(phi.child, Atom) and phi.child.prop.id in bad:
        return TRUE
    kids = phi.children()
    if not kids:
        return phi
    new = [_drop_negated(c, bad) for c in kids]
    if all(a is b for a, b in zip(new, kids)):
        return phi
    return type(phi)(*new)


def evaluate_with(phi: Formula, bad: NonvalidSet) -> Formula | None:
    if not bad:
        return phi
    pre = _drop_negated(phi, bad)
    if pre is not phi:
        phi = simplify_constants(pre)
        if phi == FALSE:
            return None
    while True:
        view = build_list_view(phi)
        hits = [n for n in view.nodes if isinstance(n.formula, Atom) and n.formula.prop.id in bad]
        if not hits:
            return phi
        phi = simplify(hits[0], phi)
        if phi is None:
            return None


def evaluate(phi: Formula, n_props: int, K: AbstractKnowledge, D: Decomposition, start
             ) -> tuple[Formula | None, NonvalidSet]:
    """Feasibility check plus simplification; returns (psi or None, nonvalid set)."""
    bad = feasibility(K, n_props, D, start)
    return evaluate_with(phi, bad), bad


def mentions(phi: Formula, bad: NonvalidSet) -> bool:
    return bool(propositions_of(phi) & bad.props)
