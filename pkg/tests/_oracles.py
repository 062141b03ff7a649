"""Independent reference implementations used by the tests."""
from __future__ import annotations

import itertools
import math

from cosafe_tamp.ltl import FALSE, TRUE, And, Atom, Eventually, FalseF, Next, Not, Or, TrueF, Until


def holds(f, t, i=0) -> bool:
    """Suffix-recursive finite-trace semantics, written straight from the definitions."""
    if isinstance(f, Atom):
        return t[i] == f.prop.id
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Not):
        return not holds(f.child, t, i)
    if isinstance(f, And):
        return holds(f.left, t, i) and holds(f.right, t, i)
    if isinstance(f, Or):
        return holds(f.left, t, i) or holds(f.right, t, i)
    if isinstance(f, Next):
        return i + 1 < len(t) and holds(f.child, t, i + 1)
    if isinstance(f, Eventually):
        return any(holds(f.child, t, j) for j in range(i, len(t)))
    if isinstance(f, Until):
        for j in range(i, len(t)):
            if holds(f.right, t, j):
                return True
            if not holds(f.left, t, j):
                return False
        return False
    raise TypeError(f)


def collapsed_traces(symbols, max_len):
    """Every trace up to ``max_len`` with no two equal neighbours."""
    out = []

    def grow(prefix):
        if prefix:
            out.append(tuple(prefix))
        if len(prefix) == max_len:
            return
        for s in symbols:
            if not prefix or prefix[-1] != s:
                grow(prefix + [s])

    grow([])
    return out


def all_traces(symbols, max_len):
    out = []
    for n in range(1, max_len + 1):
        out.extend(itertools.product(symbols, repeat=n))
    return out


def cosafe_formulas(props, depth, negated_literals=True):
    """Every PNF co-safe formula with at most ``depth`` levels.

    Literals are level 1; And/Or are generated once per unordered pair.
    """
    lits = [Atom(p) for p in props]
    if negated_literals:
        lits += [Not(Atom(p)) for p in props]
    levels = [lits]
    seen = list(lits)
    for _ in range(depth - 1):
        prev = levels[-1]
        prev_set = set(prev)
        new = []
        for f in prev:
            new.append(Eventually(f))
            new.append(Next(f))
        for a, b in itertools.product(seen, repeat=2):
            if a not in prev_set and b not in prev_set:
                continue
            new.append(Until(a, b))
        for i, a in enumerate(seen):
            for b in seen[i:]:
                if a not in prev_set and b not in prev_set:
                    continue
                new.append(And(a, b))
                new.append(Or(a, b))
        levels.append(new)
        seen = seen + new
    return seen


def product_dijkstra_brute(nfa, D, start_key, nsel=None):
    """Bellman-Ford over the whole product graph; returns (cost, goal key)."""
    from cosafe_tamp.ltl import nfa_step

    nsel = nsel or {}
    dist = {start_key: 0.0}
    changed = True
    while changed:
        changed = False
        for (cell, z), d in list(dist.items()):
            if z & nfa.accepting:
                continue
            lab = int(D.labels[cell])
            for nb in D.adjacency[cell]:
                nlab = int(D.labels[nb])
                nz = z if nlab == lab else nfa_step(nfa, z, nlab)
                if not nz:
                    continue
                w = math.dist(D.centers[cell], D.centers[nb]) * (1 + nsel.get((nb, nz), 0))
                if d + w < dist.get((nb, nz), math.inf) - 1e-12:
                    dist[(nb, nz)] = d + w
                    changed = True
    goals = [(d, k) for k, d in dist.items() if k[1] & nfa.accepting]
    return min(goals, key=lambda x: x[0]) if goals else (math.inf, None)


def has_negated(f, ids) -> bool:
    """True if some proposition in ``ids`` occurs under a negation."""
    if isinstance(f, Not) and isinstance(f.child, Atom):
        return f.child.prop.id in ids
    return any(has_negated(c, ids) for c in f.children())


def soundness_counterexamples(phi, nv, max_len, symbols=(0, 1, 2, 3, 4)):
    """Traces where the simplified formula holds but ``phi`` does not.

    With only positive occurrences every trace counts; once a negated nonvalid
    proposition was rewritten to true, only traces that avoid the nonvalid
    regions are realizable and only those are checked.
    """
    from cosafe_tamp.knowledge import evaluate_with
    from cosafe_tamp.ltl import TraceBatch

    psi = evaluate_with(phi, nv)
    if psi is None:
        return psi, []
    if has_negated(phi, nv.props):
        symbols = [s for s in symbols if s not in nv.props]
    traces = collapsed_traces(symbols, max_len)
    batch = TraceBatch(traces)
    return psi, [t for t, a, b in zip(traces, batch.satisfied(psi), batch.satisfied(phi)) if a and not b]


def random_cosafe_formula(rng, atoms, depth):
    """A random PNF co-safe formula over ``atoms`` (and their negations)."""
    if depth <= 1 or rng.random() < 0.25:
        a = atoms[int(rng.integers(len(atoms)))]
        return Not(a) if rng.random() < 0.25 else a
    k = int(rng.integers(5))
    if k == 0:
        return Eventually(random_cosafe_formula(rng, atoms, depth - 1))
    if k == 1:
        return Next(random_cosafe_formula(rng, atoms, depth - 1))
    left = random_cosafe_formula(rng, atoms, depth - 1)
    right = random_cosafe_formula(rng, atoms, depth - 1)
    return (And, Or, Until)[k - 2](left, right)


__all__ = ["holds", "collapsed_traces", "all_traces", "cosafe_formulas", "product_dijkstra_brute",
           "has_negated", "soundness_counterexamples", "random_cosafe_formula",
           "TRUE", "FALSE"]
