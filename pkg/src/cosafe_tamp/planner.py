"""Lead-guided physics-based planning for co-safe LTL goals."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, fields
from heapq import heapify, heappop, heappush

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .decomposition import Decomposition, LocateError, decompose
from .knowledge import InstKnowledge, NonvalidSet, evaluate_with, feasibility, infer_initial, inference
from .ltl import Formula, Nfa, build_nfa, check_cosafe, nfa_step, to_pnf, trace_satisfies
from .physics import World
from .world import EnvState, Scene

log = logging.getLogger(__name__)


@dataclass
class PlannerConfig:
    t_max_s: float = 60.0
    dt_s: float = 0.05
    n_substeps: int = 10
    n_min: int = 1
    n_max: int = 20
    resolution_m: float | None = None
    seed: int = 0
    k_lead: int = 10
    max_fails: int = 5
    use_knowledge: bool = True
    g: float = 9.81
    v_body_max: float = 2.0
    max_iterations: int | None = None
    backend: str | None = None
    lead_from: str = "frontier"
    lead_revisit_cost: float = 1.0

    @classmethod
    def from_mapping(cls, data) -> "PlannerConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, value in dict(data).items():
            if key not in known:
                raise ValueError(f"unknown planner config key {key!r}")
            kw[key] = _coerce(key, value)
        return cls(**kw)

    def to_mapping(self) -> dict:
        return asdict(self)


def _coerce(key, value):
    if not isinstance(value, str):
        return value
    if value in ("None", "none", ""):
        return None
    if key in ("use_knowledge",):
        return value.lower() in ("1", "true", "yes", "on")
    if key in ("backend", "lead_from"):
        return value
    if key in ("n_substeps", "n_min", "n_max", "seed", "k_lead", "max_fails", "max_iterations"):
        return int(value)
    return float(value)


# ---------------------------------------------------------------------------
# data


@dataclass(slots=True)
class TreeNode:
    state: EnvState
    kappa: InstKnowledge
    parent: int
    control: tuple[float, float] | None
    dt: float
    cell: int
    label: int
    zset: frozenset


@dataclass
class ProductState:
    cell: int
    zset: frozenset
    nsel: int = 0
    fails: int = 0
    nodes: list[int] = field(default_factory=list)

    @property
    def key(self):
        return (self.cell, self.zset)


@dataclass
class Trajectory:
    controls: list[tuple[float, float, float]]  # (ux, uy, dt)
    states: list[EnvState]
    trace: tuple[int, ...]

    @property
    def path(self) -> np.ndarray:
        return np.array([s.robot_p for s in self.states])

    @property
    def duration(self) -> float:
        return float(sum(c[2] for c in self.controls))


@dataclass
class PlanResult:
    outcome: str  # solved | infeasible | timeout
    psi: Formula | None
    phi: Formula
    trajectory: Trajectory | None = None
    nonvalid: NonvalidSet = NonvalidSet(frozenset())
    wall_time: float = 0.0
    tree_size: int = 0
    iterations: int = 0
    seed: int = 0

    @property
    def solved(self) -> bool:
        return self.outcome == "solved"


# ---------------------------------------------------------------------------
# product graph and lead computation


class ProductGraph:
    """Decomposition cells x automaton state-sets, grown on demand."""

    def __init__(self, nfa: Nfa, D: Decomposition):
        self.nfa = nfa
        self.D = D
        self.index: dict[tuple, int] = {}
        self.keys: list[tuple] = []
        self.edges: list[tuple[int, int, float]] = []
        self._step_cache: dict[tuple, frozenset] = {}
        self._built = False

    def step(self, zset: frozenset, label: int) -> frozenset:
        k = (zset, label)
        if k not in self._step_cache:
            self._step_cache[k] = nfa_step(self.nfa, zset, label)
        return self._step_cache[k]

    def accepting(self, zset: frozenset) -> bool:
        return bool(zset & self.nfa.accepting)

    def ensure(self, key: tuple) -> int:
        """Add ``key`` and everything reachable from it."""
        if key in self.index:
            return self.index[key]
        D = self.D
        todo = [key]
        self.index[key] = len(self.keys)
        self.keys.append(key)
        while todo:
            cell, zset = todo.pop()
            src = self.index[(cell, zset)]
            if self.accepting(zset):
                continue  # goal: no need to expand further
            lab = int(D.labels[cell])
            for nb in D.adjacency[cell]:
                nlab = int(D.labels[nb])
                nz = zset if nlab == lab else self.step(zset, nlab)
                if not nz:
                    continue
                nk = (nb, nz)
                if nk not in self.index:
                    self.index[nk] = len(self.keys)
                    self.keys.append(nk)
                    todo.append(nk)
                w = float(np.hypot(*(D.centers[cell] - D.centers[nb])))
                self.edges.append((src, self.index[nk], w))
        self._built = False
        return self.index[key]

    def _build(self):
        n = len(self.keys)
        e = np.array(self.edges, dtype=float).reshape(-1, 3)
        self._rows = e[:, 0].astype(np.int64)
        self._cols = e[:, 1].astype(np.int64)
        self._base = e[:, 2]
        self._n = n
        self._goal = np.array([self.accepting(k[1]) for k in self.keys], dtype=bool)
        self._built = True

    def lead(self, frontier: list[tuple], nsel: dict[tuple, int], start_cost: dict | None = None) -> list[tuple]:
        """Cheapest product path from any frontier state to an accepting one.

        ``start_cost`` charges each frontier state an entry price before its path begins.
        """
        if not frontier:
            return []
        src = [self.ensure(k) for k in frontier]
        if not self._built:
            self._build()
        n = self._n
        pen = np.ones(n)
        for k, c in nsel.items():
            i = self.index.get(k)
            if i is not None:
                pen[i] += c
        # zero-cost edges would vanish from the sparse matrix
        w = np.maximum(self._base * pen[self._cols], 1e-12)
        rows, cols = self._rows, self._cols
        if start_cost:
            # one extra node feeding every frontier state at its entry price
            entry = np.maximum([start_cost.get(k, 0.0) for k in frontier], 1e-12)
            rows = np.concatenate([rows, np.full(len(src), n)])
            cols = np.concatenate([cols, src])
            w = np.concatenate([w, entry])
            mat = csr_matrix((w, (rows, cols)), shape=(n + 1, n + 1))
            dist, pred = dijkstra(mat, indices=n, return_predecessors=True)
        else:
            mat = csr_matrix((w, (rows, cols)), shape=(n, n))
            dist, pred, _ = dijkstra(mat, indices=src, min_only=True, return_predecessors=True)
        dist = dist[:n]
        goal = np.where(self._goal & np.isfinite(dist))[0]
        if len(goal) == 0:
            return []
        g = int(goal[np.argmin(dist[goal])])
        path = [g]
        while 0 <= pred[path[-1]] < n:
            path.append(int(pred[path[-1]]))
        return [self.keys[i] for i in reversed(path)]


def discrete_planning(nfa: Nfa, D: Decomposition, frontier: list[tuple],
                      nsel: dict | None = None) -> list[tuple]:
    """Lead over the product graph; empty when no accepting state is reachable."""
    return ProductGraph(nfa, D).lead(frontier, nsel or {})


def dijkstra_reference(nfa: Nfa, D: Decomposition, frontier, nsel=None, start_cost=None) -> list[tuple]:
    """Plain heap Dijkstra on the implicit product graph (test oracle)."""
    nsel = nsel or {}
    start_cost = start_cost or {}
    dist = {k: start_cost.get(k, 0.0) for k in frontier}
    prev: dict = {}
    heap = [(dist[k], i, k) for i, k in enumerate(frontier)]
    heapify(heap)
    counter = len(heap)
    done = set()
    while heap:
        d, _, key = heappop(heap)
        if key in done:
            continue
        done.add(key)
        cell, zset = key
        if zset & nfa.accepting:
            path = [key]
            while path[-1] in prev:
                path.append(prev[path[-1]])
            return path[::-1]
        lab = int(D.labels[cell])
        for nb in D.adjacency[cell]:
            nlab = int(D.labels[nb])
            nz = zset if nlab == lab else nfa_step(nfa, zset, nlab)
            if not nz:
                continue
            nk = (nb, nz)
            w = float(np.hypot(*(D.centers[cell] - D.centers[nb]))) * (1 + nsel.get(nk, 0))
            if d + w < dist.get(nk, np.inf):
                dist[nk] = d + w
                prev[nk] = key
                counter += 1
                heappush(heap, (d + w, counter, nk))
    return []


def select_high_level_state(lead: list[ProductState], rng: np.random.Generator) -> ProductState:
    """Sample a lead state holding tree nodes, weight 1 / (1 + nsel)^2."""
    cands = [v for v in lead if v.nodes]
    if not cands:
        raise ValueError("no lead state holds tree nodes")
    w = np.array([1.0 / (1 + v.nsel) ** 2 for v in cands])
    v = cands[int(rng.choice(len(cands), p=w / w.sum()))]
    v.nsel += 1
    return v


def update_high_level_state(label_prev: int, zset: frozenset, pos, graph: ProductGraph
                            ) -> tuple[int, int, frozenset]:
    cell, lab = graph.D.locate(pos)
    if lab != label_prev:
        zset = graph.step(zset, lab)
    return cell, lab, zset


# ---------------------------------------------------------------------------
# planner


class Planner:
    def __init__(self, scene: Scene, phi: Formula, config: PlannerConfig | None = None):
        self.scene = scene
        self.phi = phi
        self.config = cfg = config or PlannerConfig()
        self.props = scene.props()
        self.world = make_world(scene, cfg)
        self.D = decompose(scene.workspace(), cfg.resolution_m)

    def evaluate(self) -> tuple[Formula | None, NonvalidSet]:
        if not self.config.use_knowledge:
            return self.phi, NonvalidSet(frozenset())
        bad = feasibility(self.world.knowledge, len(self.props), self.D, self.scene.robot.start)
        return evaluate_with(self.phi, bad), bad

    def plan(self) -> PlanResult:
        cfg = self.config
        t0 = time.perf_counter()
        if not check_cosafe(self.phi):
            raise ValueError("formula is not syntactically co-safe")
        phi = to_pnf(self.phi)
        world = self.world
        E0 = world.initial_state()
        kappa0 = infer_initial(world.knowledge, E0)
        psi, bad = self.evaluate()
        self.psi = psi
        if psi is None:
            return PlanResult("infeasible", None, phi, nonvalid=bad,
                              wall_time=time.perf_counter() - t0, seed=cfg.seed)
        nfa = build_nfa(psi, self.props.ids)
        graph = ProductGraph(nfa, self.D)
        rng = np.random.default_rng(cfg.seed)

        cell, lab = self.D.locate(E0.robot_p)
        zset = graph.step(nfa.initial, lab)
        nodes = [TreeNode(E0, kappa0, -1, None, 0.0, cell, lab, zset)]
        pstates: dict[tuple, ProductState] = {}
        self.nodes, self.pstates = nodes, pstates

        def register(i: int):
            n = nodes[i]
            if not n.zset:
                return  # dead: kept for diagnostics, never selected
            key = (n.cell, n.zset)
            if key not in pstates:
                pstates[key] = ProductState(n.cell, n.zset)
            pstates[key].nodes.append(i)

        def result(outcome, traj=None, it=0):
            return PlanResult(outcome, psi, phi, traj, bad, time.perf_counter() - t0,
                              len(nodes), it, cfg.seed)

        register(0)
        root = (cell, zset)
        if graph.accepting(zset):
            return result("solved", self._retrieve(0, psi))

        lead: list[ProductState] = []
        replan = True
        it = 0
        while time.perf_counter() - t0 < cfg.t_max_s:
            if cfg.max_iterations is not None and it >= cfg.max_iterations:
                break
            if replan or it % cfg.k_lead == 0:
                keys = self._lead(graph, root, pstates)
                lead = [pstates[k] for k in keys if k in pstates]
                replan = False
            if not any(v.nodes for v in lead):
                lead = [pstates[k] for k in sorted(pstates, key=_key_order)]
            v = select_high_level_state(lead, rng)
            idx = v.nodes[int(rng.integers(len(v.nodes)))]
            u, n = world.sample_control(rng)
            it += 1
            parent = idx
            added = False
            for _ in range(n):
                cur = nodes[parent]
                E_new, report = world.propagate(cur.state, u, cfg.dt_s)
                if not world.validity_check(E_new, cur.kappa, report):
                    break
                kappa = inference(E_new, cur.kappa) if cfg.use_knowledge else cur.kappa
                try:
                    c, lab, z = update_high_level_state(cur.label, cur.zset, E_new.robot_p, graph)
                except LocateError:
                    break
                nodes.append(TreeNode(E_new, kappa, parent, (float(u[0]), float(u[1])), cfg.dt_s, c, lab, z))
                parent = len(nodes) - 1
                register(parent)
                added = True
                if graph.accepting(z):
                    return result("solved", self._retrieve(parent, psi), it)
                if not z:
                    break
            if added:
                v.fails = 0
            else:
                v.fails += 1
                if v.fails >= cfg.max_fails:
                    v.fails = 0
                    replan = True
        return result("timeout", None, it)

    def _lead(self, graph: ProductGraph, root: tuple, pstates: dict) -> list[tuple]:
        nsel = {k: v.nsel for k, v in pstates.items()}
        if self.config.lead_from == "root":
            return graph.lead([root], nsel)
        # any populated state may start the lead; each earlier pick costs one cell length
        step = float(np.median(np.sqrt(self.D.areas))) * self.config.lead_revisit_cost
        frontier = [k for k, v in pstates.items() if v.nodes]
        return graph.lead(frontier, nsel, {k: step * nsel[k] for k in frontier})

    def _retrieve(self, leaf: int, psi: Formula) -> Trajectory:
        chain = []
        i = leaf
        while i >= 0:
            chain.append(self.nodes[i])
            i = self.nodes[i].parent
        chain.reverse()
        controls = [(n.control[0], n.control[1], n.dt) for n in chain[1:]]
        states = [n.state for n in chain]
        trace = self.D.extract_trace([s.robot_p for s in states])
        if not trace_satisfies(psi, trace):
            raise AssertionError(f"retrieved trace {trace} does not satisfy {psi}")
        return Trajectory(controls, states, trace)


def _key_order(key):
    cell, zset = key
    return (cell, tuple(sorted(zset)))


def make_world(scene: Scene, cfg: PlannerConfig) -> World:
    return World(scene, n_substeps=cfg.n_substeps, g=cfg.g, v_body_max=cfg.v_body_max,
                 n_min=cfg.n_min, n_max=cfg.n_max, backend=cfg.backend)


def plan(scene: Scene, phi: Formula, config: PlannerConfig | None = None) -> PlanResult:
    return Planner(scene, phi, config).plan()


def replay(world: World, controls, kappa0: InstKnowledge | None = None, use_knowledge: bool = True):
    """Re-propagate a control list from the scene's initial state.

    Returns (states, valid_flags); validity uses the same knowledge updates
    as planning.
    """
    E = world.initial_state()
    kappa = kappa0 or infer_initial(world.knowledge, E)
    states, valid = [E], []
    for ux, uy, dt in controls:
        E_new, report = world.propagate(E, (ux, uy), dt)
        valid.append(world.validity_check(E_new, kappa, report))
        if use_knowledge:
            kappa = inference(E_new, kappa)
        states.append(E_new)
        E = E_new
    return states, valid
