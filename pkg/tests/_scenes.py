"""Random push scenes and the per-step physics property checks."""
from __future__ import annotations

import math

import numpy as np

from cosafe_tamp.decomposition import rect_overlap
from cosafe_tamp.world import BodySpec, RobotSpec, Scene

EPS_PEN = 1e-3


def _gap(a, b):
    dx = max(a[0] - b[2], b[0] - a[2], 0.0)
    dy = max(a[1] - b[3], b[1] - a[3], 0.0)
    return math.hypot(dx, dy)


def random_scene(rng: np.random.Generator, n_fixed=3, n_movable=4, size=6.0) -> Scene:
    """A square room with a few walls, loose boxes and a robot, nothing overlapping."""
    bodies = []
    rects = []

    def place(kind, lo, hi, tries=200):
        for _ in range(tries):
            hx, hy = rng.uniform(lo, hi, size=2)
            cx = rng.uniform(hx, size - hx)
            cy = rng.uniform(hy, size - hy)
            r = (cx - hx, cy - hy, cx + hx, cy + hy)
            if all(_gap(r, o) > 0.05 for o in rects):
                rects.append(r)
                return (float(cx), float(cy)), (float(hx), float(hy))
        return None

    for i in range(n_fixed):
        got = place("fixed", 0.1, 0.8)
        if got:
            bodies.append(BodySpec(f"wall{i}", "fixed", *got))
    for i in range(n_movable):
        got = place("movable", 0.15, 0.5)
        if got:
            bodies.append(BodySpec(f"box{i}", "movable", *got, mass=float(rng.uniform(0.5, 3.0)),
                                   mu=float(rng.uniform(0.1, 0.8))))
    r = 0.2
    for _ in range(1000):
        x, y = rng.uniform(r, size - r, size=2)
        robot = (x - r, y - r, x + r, y + r)
        if all(_gap(robot, o) > 0.05 for o in rects):
            break
    return Scene((0.0, 0.0, size, size), RobotSpec((float(x), float(y)), radius=r), tuple(bodies))


def rollout(world, state, rng, steps, dt=0.05):
    """Yield (before, control, after, report) for random held controls."""
    done = 0
    while done < steps:
        u, n = world.sample_control(rng)
        for _ in range(min(n, steps - done)):
            new, rep = world.propagate(state, u, dt)
            yield state, u, new, rep
            state = new
            done += 1


def step_violations(world, before, u, after, report, dt=0.05):
    """Return a list of property violations for one propagation step."""
    out = []
    again, rep2 = world.propagate(before, u, dt)
    if again.digest() != after.digest() or rep2 != report:
        out.append("nondeterministic")
    pen = world.max_penetration(after)
    if pen > EPS_PEN:
        out.append(f"penetration {pen:.2e}")
    x0, y0, x1, y1 = world.bounds
    half = world.half
    lo = after.body_c - half
    hi = after.body_c + half
    if len(lo) and (lo[:, 0].min() < x0 - EPS_PEN or lo[:, 1].min() < y0 - EPS_PEN
                    or hi[:, 0].max() > x1 + EPS_PEN or hi[:, 1].max() > y1 + EPS_PEN):
        out.append("body left workspace")

    # passivity: every displaced body is linked to a cause by a chain of nearby bodies
    m = len(world.body_ids)
    moved = {b for b in range(m) if np.any(after.body_c[b] != before.body_c[b])}
    touched = {world.body_ids.index(c.body) for c in report.contacts}
    sources = touched | {b for b in range(m) if np.any(before.body_v[b] != 0.0)}
    reach = (world.v_max + world.v_body_max) * dt + 1e-6
    rect0 = np.concatenate([before.body_c - half, before.body_c + half], axis=1)
    linked = set(sources)
    frontier = list(sources)
    while frontier:
        a = frontier.pop()
        for b in range(m):
            if b not in linked and _gap(rect0[a], rect0[b]) <= reach:
                linked.add(b)
                frontier.append(b)
    if moved - linked:
        out.append(f"ghost motion {sorted(moved - linked)}")

    # friction: a box nothing touched and nothing is near only slows down
    for b in range(m):
        if b in touched:
            continue
        if any(_gap(rect0[b], rect0[o]) <= reach for o in range(m) if o != b):
            continue
        if any(rect_overlap(tuple(rect0[b]), tuple(f)) > 0 or _gap(rect0[b], f) <= reach for f in world.fixed):
            continue
        if np.hypot(*after.body_v[b]) > np.hypot(*before.body_v[b]) + 1e-12:
            out.append(f"box {b} sped up on its own")
    return out
