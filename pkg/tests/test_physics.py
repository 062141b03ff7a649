import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _scenes import EPS_PEN, random_scene, rollout, step_violations
from cosafe_tamp.knowledge import infer_initial
from cosafe_tamp.physics import Contact, ContactReport, World
from cosafe_tamp.sceneio import loads_scene
from cosafe_tamp.world import BodySpec, EnvState, RobotSpec, Scene


def _scene(name):
    return loads_scene(resources.files("cosafe_tamp").joinpath(f"scenes/{name}.scene").read_text())


def one_box(robot_x=1.0, box=(2.0, 1.0), half=(0.25, 0.25), walls=(), mass=1.0, mu=0.5):
    bodies = [BodySpec("box", "movable", box, half, mass=mass, mu=mu)]
    bodies += [BodySpec(f"w{i}", "fixed", c, h) for i, (c, h) in enumerate(walls)]
    return Scene((0.0, 0.0, 6.0, 2.0), RobotSpec((robot_x, 1.0), radius=0.2), tuple(bodies))


def with_velocity(state, robot_v=(0.0, 0.0), body_v=None):
    bv = state.body_v if body_v is None else np.array(body_v, dtype=float)
    return EnvState.make(state.robot_p, robot_v, state.body_c, bv, state.robot_o, state.step)


# -- hand examples ------------------------------------------------------------


def test_rest_stays_at_rest():
    w = World(one_box())
    E = w.initial_state()
    new, rep = w.propagate(E, (0.0, 0.0), 0.05)
    assert new.step == E.step + 1
    assert np.array_equal(new.robot_p, E.robot_p) and np.array_equal(new.body_c, E.body_c)
    assert not np.any(new.robot_v) and not np.any(new.body_v)
    assert rep == ContactReport()


def test_single_substep_push_on_minus_x_face():
    # robot 1 mm short of the box face, moving +x at 1 m/s; one 5 ms substep
    w = World(one_box(robot_x=1.75 - 0.2 - 0.001), n_substeps=1)
    E = with_velocity(w.initial_state(), robot_v=(1.0, 0.0))
    new, rep = w.propagate(E, (0.0, 0.0), 0.005)
    # robot advances 5 mm, overlaps 4 mm; equal masses share the normal speed
    assert new.robot_p[0] == pytest.approx(1.554, abs=1e-12)
    assert new.robot_v[0] == pytest.approx(0.5, abs=1e-12)
    assert new.body_v[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert new.body_c[0, 0] == pytest.approx(2.004, abs=1e-12)
    assert new.body_c[0, 1] == 1.0 and new.body_v[0, 1] == 0.0
    assert rep.contacts == (Contact("box", "-x", True),)
    assert rep.displaced == ("box",) and not rep.hit_fixed


def test_push_from_outside_mregion_is_flagged():
    # the robot meets the -x face but its centre is above the box top edge band
    sc = one_box(robot_x=1.54, box=(2.0, 0.8), half=(0.25, 0.15))
    w = World(sc, n_substeps=1)
    E = with_velocity(w.initial_state(), robot_v=(1.0, 0.0))
    _, rep = w.propagate(E, (0.0, 0.0), 0.02)
    assert rep.contacts and not rep.contacts[0].inside_mregion


def test_box_pushed_into_wall_stops_at_wall():
    wall = ((3.05, 1.0), (0.05, 1.0))  # x in [3.0, 3.1]
    w = World(one_box(robot_x=1.5, walls=(wall,)))
    E = w.initial_state()
    for _ in range(200):
        E, _ = w.propagate(E, (10.0, 0.0), 0.05)
        assert w.max_penetration(E) <= EPS_PEN
    x1 = E.body_c[0, 0] + 0.25
    assert 3.0 - 1e-6 <= x1 <= 3.0 + EPS_PEN
    assert E.body_v[0, 0] == 0.0
    assert E.robot_p[0] == pytest.approx(3.0 - 0.5 - 0.2, abs=EPS_PEN)


def test_robot_stops_at_wall():
    wall = ((3.05, 1.0), (0.05, 1.0))
    sc = Scene((0.0, 0.0, 6.0, 2.0), RobotSpec((2.0, 1.0)), (BodySpec("w", "fixed", *wall),))
    w = World(sc)
    E = w.initial_state()
    hits = False
    for _ in range(40):
        E, rep = w.propagate(E, (10.0, 0.0), 0.05)
        hits |= rep.hit_fixed
        assert E.robot_p[0] <= 3.0 - 0.2 + 1e-9
    assert hits


# -- friction --------------------------------------------------------------


@pytest.mark.parametrize("v0, mu", [(1.5, 0.5), (0.3, 0.1), (2.0, 0.8)])
def test_isolated_box_slows_to_rest(v0, mu):
    w = World(one_box(robot_x=0.5, box=(3.0, 1.0), mu=mu))
    E = with_velocity(w.initial_state(), body_v=[(v0 * 0.6, v0 * 0.0)])
    dec = mu * 9.81 * 0.05 / w.n_substeps  # speed lost per substep
    bound = math.ceil(v0 * 0.6 / dec / w.n_substeps) + 1
    speeds = [v0 * 0.6]
    for _ in range(bound):
        E, _ = w.propagate(E, (0.0, 0.0), 0.05)
        speeds.append(float(np.hypot(*E.body_v[0])))
    assert all(b <= a for a, b in zip(speeds, speeds[1:]))
    assert speeds[-1] == 0.0


# -- validity ---------------------------------------------------------------


def test_free_motion_is_valid():
    w = World(one_box(robot_x=0.5))
    kappa = infer_initial(w.knowledge, w.initial_state())
    E, rep = w.propagate(w.initial_state(), (5.0, 5.0), 0.05)
    assert w.validity_check(E, kappa, rep)


def test_entrance_door_pushed_along_x_is_invalid():
    sc = _scene("four_rooms")
    w = World(sc)
    E = w.initial_state()
    kappa = infer_initial(w.knowledge, E)
    assert "+x" not in kappa.status("door1").allowed
    assert not w.validity_check(E, kappa, ContactReport((Contact("door1", "+x", True),)))
    assert w.validity_check(E, kappa, ContactReport((Contact("door1", "-y", True),)))
    assert not w.validity_check(E, kappa, ContactReport((Contact("door1", "-y", False),)))


def test_touching_a_wall_is_invalid():
    sc = _scene("four_rooms")
    w = World(sc)
    E = w.initial_state()
    kappa = infer_initial(w.knowledge, E)
    rep = None
    for _ in range(30):  # drive north from the start into the wall band
        E, rep = w.propagate(E, (0.0, 10.0), 0.05)
        if rep.hit_fixed:
            break
    assert rep.hit_fixed
    assert not w.validity_check(E, kappa, rep)


def test_speed_bound_and_bounds_violations_are_invalid():
    w = World(one_box(robot_x=0.5))
    E0 = w.initial_state()
    kappa = infer_initial(w.knowledge, E0)
    fast = with_velocity(E0, robot_v=(5.0, 0.0))
    assert not w.validity_check(fast, kappa, ContactReport())
    fast_box = with_velocity(E0, body_v=[(3.0, 0.0)])
    assert not w.validity_check(fast_box, kappa, ContactReport())
    out = EnvState.make((-1.0, 1.0), (0, 0), E0.body_c, E0.body_v)
    assert not w.validity_check(out, kappa, ContactReport())


def test_displacing_a_temporarily_fixed_body_is_invalid():
    from cosafe_tamp.knowledge import ManipClass
    walls = [BodySpec("n", "fixed", (2, 2.5), (0.5, 0.2)), BodySpec("s", "fixed", (2, 1.5), (0.5, 0.2)),
             BodySpec("e", "fixed", (2.5, 2), (0.2, 0.3)), BodySpec("w", "fixed", (1.5, 2), (0.2, 0.3))]
    sc = Scene((0.0, 0.0, 4.0, 4.0), RobotSpec((0.5, 0.5)),
               (BodySpec("b", "movable", (2, 2), (0.3, 0.3)), *walls))
    w = World(sc)
    E = w.initial_state()
    kappa = infer_initial(w.knowledge, E)
    assert kappa.status("b").cls is ManipClass.TEMPORARILY_FIXED
    assert not w.validity_check(E, kappa, ContactReport(displaced=("b",)))
    assert w.validity_check(E, kappa, ContactReport())


# -- control sampling -------------------------------------------------------


def test_sample_control_bounds_and_steps():
    w = World(one_box(), n_min=1, n_max=20)
    rng = np.random.default_rng(0)
    us, ns = zip(*(w.sample_control(rng) for _ in range(10_000)))
    us = np.array(us)
    assert np.all(np.abs(us) <= 10.0)
    assert min(ns) == 1 and max(ns) == 20


def test_sample_control_reproducible():
    w = World(one_box())
    a = [w.sample_control(np.random.default_rng(42)) for _ in range(3)]
    r1, r2 = np.random.default_rng(42), np.random.default_rng(42)
    for _ in range(50):
        (u1, n1), (u2, n2) = w.sample_control(r1), w.sample_control(r2)
        assert np.array_equal(u1, u2) and n1 == n2
    assert all(np.array_equal(a[0][0], x[0]) for x in a)


# -- errors -------------------------------------------------------------------


@pytest.mark.parametrize("u, dt", [((math.nan, 0.0), 0.05), ((0.0, math.inf), 0.05),
                                   ((1.0, 2.0, 3.0), 0.05), ((0.0, 0.0), 0.0), ((0.0, 0.0), -1.0)])
def test_propagate_rejects_bad_input(u, dt):
    w = World(one_box())
    with pytest.raises(ValueError):
        w.propagate(w.initial_state(), u, dt)


def test_bad_step_range():
    with pytest.raises(ValueError):
        World(one_box(), n_min=5, n_max=2)


# -- properties ----------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_rollouts_keep_physics_invariants(seed):
    rng = np.random.default_rng(seed)
    w = World(random_scene(rng))
    for before, u, after, rep in rollout(w, w.initial_state(), rng, 120):
        assert step_violations(w, before, u, after, rep) == []


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bitwise_replay(seed):
    rng = np.random.default_rng(seed)
    w = World(random_scene(rng))
    E0 = w.initial_state()
    controls = []
    E = E0
    for _, u, after, _ in rollout(w, E0, rng, 150):
        controls.append(u)
        E = after
    R = E0
    for u in controls:
        R, _ = w.propagate(R, u, 0.05)
    assert R.digest() == E.digest()


def test_backends_agree_step_by_step():
    # summation order differs between the two, so agreement is to rounding
    rng = np.random.default_rng(7)
    sc = random_scene(rng)
    fast, slow = World(sc, backend="numba"), World(sc, backend="numpy")
    E = fast.initial_state()
    for _ in range(60):
        u, n = fast.sample_control(rng)
        for _ in range(n):
            a, ra = fast.propagate(E, u, 0.05)
            b, rb = slow.propagate(E, u, 0.05)
            assert ra == rb
            for x, y in ((a.robot_p, b.robot_p), (a.robot_v, b.robot_v),
                         (a.body_c, b.body_c), (a.body_v, b.body_v)):
                np.testing.assert_allclose(y, x, rtol=0, atol=1e-12)
            E = a
