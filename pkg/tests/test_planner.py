import math
import time
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import product_dijkstra_brute
from cosafe_tamp.decomposition import Workspace, decompose
from cosafe_tamp.knowledge import infer_initial
from cosafe_tamp.ltl import build_nfa, collapse, nfa_step, parse_formula, trace_satisfies
from cosafe_tamp.physics import World
from cosafe_tamp.planner import (Planner, PlannerConfig, ProductGraph, ProductState, discrete_planning,
                                 dijkstra_reference, make_world, plan, replay, select_high_level_state,
                                 update_high_level_state)
from cosafe_tamp.sceneio import loads_scene
from cosafe_tamp.world import BodySpec, RegionSpec, RobotSpec, Scene


def bundled(name):
    return loads_scene(resources.files("cosafe_tamp").joinpath(f"scenes/{name}").read_text())


def open_scene(regions, start=(0.5, 0.5), bodies=()):
    return Scene((0.0, 0.0, 4.0, 4.0), RobotSpec(start),
                 tuple(bodies), tuple(RegionSpec(f"p{i}", r) for i, r in enumerate(regions, 1)))


def lead_cost(D, lead, nsel):
    return sum(math.dist(D.centers[a[0]], D.centers[b[0]]) * (1 + nsel.get(b, 0))
               for a, b in zip(lead, lead[1:]))


def root_key(nfa, D, pos):
    cell, lab = D.locate(pos)
    return (cell, nfa_step(nfa, nfa.initial, lab))


# -- discrete planning ---------------------------------------------------------


def test_adjacent_goal_gives_two_state_lead():
    w = Workspace((0, 0, 4, 1), ((1, 0, 2, 1),))
    D = decompose(w, 1.0)
    P = open_scene([(1, 0, 2, 1)]).props()
    nfa = build_nfa(parse_formula("F p1", P), P.ids)
    lead = discrete_planning(nfa, D, [root_key(nfa, D, (0.5, 0.5))])
    assert len(lead) == 2
    assert D.labels[lead[1][0]] == 1 and lead[1][1] & nfa.accepting


def test_four_rooms_lead_visits_regions_in_order():
    scene = bundled("four_rooms.scene")
    P = scene.props()
    D = decompose(scene.workspace(), 0.5)
    nfa = build_nfa(parse_formula("F(p1 & F(p2 & F p4))", P), P.ids)
    lead = discrete_planning(nfa, D, [root_key(nfa, D, scene.robot.start)])
    labels = collapse([int(D.labels[c]) for c, _ in lead])
    assert [x for x in labels if x] == [1, 2, 4]


def test_unreachable_goal_gives_empty_lead():
    walls = [BodySpec("a", "fixed", (2.95, 3.4), (0.05, 0.6)), BodySpec("b", "fixed", (3.5, 2.85), (0.5, 0.05))]
    scene = open_scene([(3.2, 3.2, 3.8, 3.8)], bodies=walls)
    D = decompose(scene.workspace())
    P = scene.props()
    nfa = build_nfa(parse_formula("F p1", P), P.ids)
    assert discrete_planning(nfa, D, [root_key(nfa, D, scene.robot.start)]) == []
    assert dijkstra_reference(nfa, D, [root_key(nfa, D, scene.robot.start)]) == []


FORMULAS = ["F p1", "F(p1 & F p2)", "!p2 U p1", "F p1 | F p2", "F(p2 & X p1)", "(p1 | p2) U p1"]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FORMULAS), st.integers(0, 2**32 - 1))
def test_lead_is_a_cheapest_path(text, seed):
    rng = np.random.default_rng(seed)
    regions = [(0.5, 2.5, 1.5, 3.5), (2.5, 0.5, 3.5, 1.5)]
    fixed = [] if rng.random() < 0.3 else [BodySpec("w", "fixed", (2.0, 2.0), (0.1, float(rng.uniform(0.3, 1.5))))]
    scene = open_scene(regions, bodies=fixed)
    D = decompose(scene.workspace(), 0.5)
    P = scene.props()
    nfa = build_nfa(parse_formula(text, P), P.ids)
    start = root_key(nfa, D, scene.robot.start)
    nsel = {}
    for cell in rng.choice(D.n_cells, size=10):
        for z in (start[1], nfa_step(nfa, start[1], 1), nfa_step(nfa, start[1], 2)):
            if z:
                nsel[(int(cell), z)] = int(rng.integers(0, 5))
    lead = ProductGraph(nfa, D).lead([start], nsel)
    ref = dijkstra_reference(nfa, D, [start], nsel)
    brute, _ = product_dijkstra_brute(nfa, D, start, nsel)
    if not lead:
        assert not ref and brute == math.inf
        return
    assert lead[0] == start and lead[-1][1] & nfa.accepting
    # consecutive elements are product-graph neighbours
    for (c, z), (c2, z2) in zip(lead, lead[1:]):
        assert c2 in D.adjacency[c]
        expect = z if D.labels[c2] == D.labels[c] else nfa_step(nfa, z, int(D.labels[c2]))
        assert z2 == expect
    assert lead_cost(D, lead, nsel) == pytest.approx(brute, abs=1e-9)
    assert lead_cost(D, ref, nsel) == pytest.approx(brute, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(FORMULAS), st.integers(0, 2**32 - 1))
def test_multi_source_lead_pays_entry_cost(text, seed):
    rng = np.random.default_rng(seed)
    scene = open_scene([(0.5, 2.5, 1.5, 3.5), (2.5, 0.5, 3.5, 1.5)])
    D = decompose(scene.workspace(), 0.5)
    P = scene.props()
    nfa = build_nfa(parse_formula(text, P), P.ids)
    start = root_key(nfa, D, scene.robot.start)
    graph = ProductGraph(nfa, D)
    graph.ensure(start)
    picks = rng.choice(len(graph.keys), size=min(6, len(graph.keys)), replace=False)
    frontier = [graph.keys[i] for i in picks if not graph.accepting(graph.keys[i][1])] or [start]
    entry = {k: float(rng.uniform(0, 3)) for k in frontier}
    lead = graph.lead(frontier, {}, entry)
    # oracle: best single-source brute-force cost plus that source's entry price
    best = min(entry[k] + product_dijkstra_brute(nfa, D, k, {})[0] for k in frontier)
    if not lead:
        assert best == math.inf
        return
    assert lead[0] in frontier and lead[-1][1] & nfa.accepting
    assert entry[lead[0]] + lead_cost(D, lead, {}) == pytest.approx(best, abs=1e-9)
    ref = dijkstra_reference(nfa, D, frontier, {}, entry)
    assert entry[ref[0]] + lead_cost(D, ref, {}) == pytest.approx(best, abs=1e-9)


# -- high-level state selection ----------------------------------------------------


def test_single_state_lead_always_selected():
    v = ProductState(0, frozenset({0}), nodes=[0])
    rng = np.random.default_rng(0)
    assert all(select_high_level_state([v], rng) is v for _ in range(20))
    assert v.nsel == 20


def test_selection_ratio_sixteen_to_one():
    a = ProductState(0, frozenset({0}), nsel=0, nodes=[0])
    b = ProductState(1, frozenset({0}), nsel=3, nodes=[1])
    rng = np.random.default_rng(3)
    n = 34_000
    hits_b = 0
    for _ in range(n):
        a.nsel, b.nsel = 0, 3
        hits_b += select_high_level_state([a, b], rng) is b
    p = 1 / 17
    sd = math.sqrt(n * p * (1 - p))
    assert abs(hits_b - n * p) < 4 * sd
    assert (n - hits_b) / hits_b == pytest.approx(16, rel=0.1)


def test_states_without_nodes_are_never_selected():
    empty = ProductState(0, frozenset({0}))
    full = ProductState(1, frozenset({0}), nsel=50, nodes=[3])
    rng = np.random.default_rng(1)
    assert all(select_high_level_state([empty, full], rng) is full for _ in range(200))
    with pytest.raises(ValueError):
        select_high_level_state([empty], rng)


def test_update_high_level_state():
    scene = open_scene([(1, 0, 2, 1), (3, 3, 4, 4)])
    D = decompose(scene.workspace(), 0.5)
    P = scene.props()
    g = ProductGraph(build_nfa(parse_formula("F p1", P), P.ids), D)
    z0 = nfa_step(g.nfa, g.nfa.initial, 0)
    # same region: state-set untouched
    assert update_high_level_state(0, z0, (0.6, 0.6), g)[2] == z0
    cell, lab, z = update_high_level_state(0, z0, (1.5, 0.5), g)
    assert lab == 1 and z & g.nfa.accepting
    trap = ProductGraph(build_nfa(parse_formula("!p2 U p1", P), P.ids), D)
    zt = nfa_step(trap.nfa, trap.nfa.initial, 0)
    assert update_high_level_state(0, zt, (3.5, 3.5), trap)[2] == frozenset()


# -- planning ------------------------------------------------------------------------


def quick_cfg(**kw):
    base = dict(t_max_s=60.0, seed=0)
    base.update(kw)
    return PlannerConfig(**base)


def test_start_inside_goal_is_accepted_immediately():
    scene = open_scene([(0.0, 0.0, 1.0, 1.0)])
    r = plan(scene, parse_formula("F p1", scene.props()), quick_cfg())
    assert r.solved and r.trajectory.controls == [] and r.tree_size == 1
    assert r.trajectory.trace == (1,)


def test_infeasible_formula_returns_without_propagating(monkeypatch):
    walls = [BodySpec("a", "fixed", (2.95, 3.4), (0.05, 0.6)), BodySpec("b", "fixed", (3.5, 2.85), (0.5, 0.05))]
    scene = open_scene([(0.2, 3.2, 0.8, 3.8), (3.2, 3.2, 3.8, 3.8)], bodies=walls)

    def boom(*a, **k):
        raise AssertionError("propagated")

    monkeypatch.setattr(World, "propagate", boom)
    r = plan(scene, parse_formula("F p1 & F p2", scene.props()), quick_cfg())
    assert r.outcome == "infeasible" and r.psi is None and r.trajectory is None
    assert 2 in r.nonvalid


TWO_REGIONS = [(3.0, 3.0, 3.8, 3.8), (0.2, 3.0, 1.0, 3.8)]


@pytest.fixture(scope="module")
def solved_two_regions():
    scene = open_scene(TWO_REGIONS)
    phi = parse_formula("F(p1 & F p2)", scene.props())
    p = Planner(scene, phi, quick_cfg(seed=5))
    return scene, phi, p, p.plan()


def test_open_scene_is_solved_and_trace_satisfies(solved_two_regions):
    scene, phi, _, r = solved_two_regions
    assert r.solved
    assert trace_satisfies(r.psi, r.trajectory.trace) and trace_satisfies(phi, r.trajectory.trace)
    assert r.trajectory.trace[0] == 0 and r.trajectory.trace[-1] == 2


def test_every_tree_node_was_validated(solved_two_regions):
    _, _, p, _ = solved_two_regions
    w = p.world
    for node in p.nodes[1:]:
        parent = p.nodes[node.parent]
        E, rep = w.propagate(parent.state, node.control, node.dt)
        assert E.digest() == node.state.digest()
        assert w.validity_check(E, parent.kappa, rep)


def test_replay_reproduces_trajectory(solved_two_regions):
    scene, _, p, r = solved_two_regions
    states, valid = replay(make_world(scene, p.config), r.trajectory.controls)
    assert all(valid)
    assert [s.digest() for s in states] == [s.digest() for s in r.trajectory.states]


def test_seeded_runs_are_identical(solved_two_regions):
    scene, phi, p, r = solved_two_regions
    again = plan(scene, phi, quick_cfg(seed=5))
    assert again.trajectory.controls == r.trajectory.controls
    assert again.trajectory.states[-1].digest() == r.trajectory.states[-1].digest()
    assert again.tree_size == r.tree_size


def test_knowledge_off_keeps_formula_and_initial_knowledge():
    scene = bundled("four_rooms.scene")
    phi = parse_formula(scene.default("formula"), scene.props())
    p = Planner(scene, phi, quick_cfg(use_knowledge=False, max_iterations=200))
    r = p.plan()
    assert r.psi == phi
    k0 = p.nodes[0].kappa
    assert all(n.kappa is k0 for n in p.nodes)


def test_anytime_bound():
    scene = bundled("four_rooms.scene")
    phi = parse_formula(scene.default("formula"), scene.props())
    # without inference the entrance blocks never move, so this cannot solve
    plan(scene, phi, quick_cfg(t_max_s=0.01, use_knowledge=False))  # warm caches
    t0 = time.perf_counter()
    r = plan(scene, phi, quick_cfg(t_max_s=1.0, use_knowledge=False))
    elapsed = time.perf_counter() - t0
    assert r.outcome == "timeout"
    # one batch is at most n_max propagations; allow generous slack for it
    assert elapsed < 1.0 + 0.5


def test_config_round_trip():
    cfg = PlannerConfig(t_max_s=12.5, seed=9, k_lead=3, use_knowledge=False, resolution_m=0.25)
    assert PlannerConfig.from_mapping(cfg.to_mapping()) == cfg
    as_text = {k: str(v) for k, v in cfg.to_mapping().items()}
    assert PlannerConfig.from_mapping(as_text) == cfg
    with pytest.raises((KeyError, ValueError, TypeError)):
        PlannerConfig.from_mapping({"bogus": 1})


def test_rejects_non_cosafe_formula():
    scene = open_scene(TWO_REGIONS)
    phi = parse_formula("!F p1", scene.props())
    with pytest.raises(ValueError):
        plan(scene, phi, quick_cfg())


def test_initial_knowledge_is_used_for_the_root(solved_two_regions):
    scene, _, p, _ = solved_two_regions
    assert p.nodes[0].kappa == infer_initial(p.world.knowledge, scene.initial_state())
