"""Compare the numba and numpy physics kernels on the four-room scene.

    python3 benchmarks/bench_kernels.py [--steps 2000]

Both backends run the same random control sequence.  Afterwards every step
is replayed from a shared state through both; results must agree to 1e-12,
otherwise the script exits non-zero.  They are not bitwise equal because the
two sum contact corrections in a different order.
"""
import argparse
import sys
import time
from importlib import resources

import numpy as np

from cosafe_tamp import kernels
from cosafe_tamp.physics import World
from cosafe_tamp.sceneio import loads_scene


def run(world, controls):
    E = world.initial_state()
    for u in controls:
        E, _ = world.propagate(E, u, 0.05)
    return E


def max_step_difference(scene, controls):
    fast, slow = World(scene, backend="numba"), World(scene, backend="numpy")
    E = fast.initial_state()
    worst = 0.0
    for u in controls:
        a, _ = fast.propagate(E, u, 0.05)
        b, _ = slow.propagate(E, u, 0.05)
        for x, y in ((a.robot_p, b.robot_p), (a.robot_v, b.robot_v), (a.body_c, b.body_c), (a.body_v, b.body_v)):
            if len(x):
                worst = max(worst, float(np.max(np.abs(x - y))))
        E = a if fast.max_penetration(a) <= 1e-2 else fast.initial_state()
    return worst


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    text = resources.files("cosafe_tamp").joinpath("scenes/four_rooms.scene").read_text()
    scene = loads_scene(text)
    rng = np.random.default_rng(7)
    controls = rng.uniform(-10, 10, size=(args.steps, 2))

    backends = ["numpy"]
    if kernels.numba is not None:
        backends.insert(0, "numba")
    best = {}
    for name in backends:
        world = World(scene, backend=name)
        t0 = time.perf_counter()
        world.propagate(world.initial_state(), (1.0, 0.0), 0.05)  # includes jit compile / cache load
        warm = time.perf_counter() - t0
        times = []
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            E = run(world, controls)
            times.append(time.perf_counter() - t0)
        best[name] = min(times)
        print(f"{name:6s} warmup {warm:7.3f}s  best of {args.repeat}: {best[name]:.3f}s "
              f"({1e6 * best[name] / args.steps:.1f} us/step)")

    if "numba" in best:
        print(f"speedup numba/numpy: {best['numpy'] / best['numba']:.1f}x")
    if len(backends) == 2:
        worst = max_step_difference(scene, controls)
        print(f"largest per-step difference: {worst:.1e}")
        if worst > 1e-12:
            print("backends disagree", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
