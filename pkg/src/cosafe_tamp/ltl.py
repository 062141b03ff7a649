"""Syntactically co-safe LTL over finite traces.

Formulas are immutable trees.  A trace is a sequence of proposition ids in
which exactly one proposition holds per element (regions are disjoint), so
the automaton alphabet is the proposition ids themselves.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "Proposition", "PropTable", "Formula", "Atom", "TrueF", "FalseF", "Not", "And", "Or",
    "Next", "Until", "Eventually", "TRUE", "FALSE", "FormulaSyntaxError", "NotCoSafe",
    "NfaTooLarge", "parse_formula", "to_text", "to_pnf", "check_cosafe", "trace_satisfies",
    "ListNode", "ListView", "build_list_view", "Nfa", "build_nfa", "nfa_step", "nfa_accepts",
    "collapse", "propositions_of", "simplify_constants", "TraceBatch",
]


@dataclass(frozen=True, order=True)
class Proposition:
    id: int
    name: str


class PropTable:
    """Name <-> id table.  Id 0 is the reserved complement proposition."""

    RESERVED = "p0"

    def __init__(self, names: Iterable[str] = ()):
        self._by_name: dict[str, Proposition] = {}
        self._by_id: list[Proposition] = [Proposition(0, self.RESERVED)]
        for name in names:
            self.declare(name)

    def declare(self, name: str) -> Proposition:
        if name == self.RESERVED:
            raise ValueError("p0 is reserved for the complement region")
        if name in self._by_name:
            raise ValueError(f"proposition {name!r} declared twice")
        if not _IDENT.fullmatch(name) or name in _KEYWORDS:
            raise ValueError(f"invalid proposition name {name!r}")
        prop = Proposition(len(self._by_id), name)
        self._by_id.append(prop)
        self._by_name[name] = prop
        return prop

    def __getitem__(self, key: str | int) -> Proposition:
        if isinstance(key, int):
            return self._by_id[key]
        return self._by_name[key]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self):
        return iter(self._by_id)

    @property
    def ids(self) -> range:
        return range(len(self._by_id))

    @property
    def names(self) -> list[str]:
        return [p.name for p in self._by_id[1:]]


# ---------------------------------------------------------------------------
# AST


class Formula:
    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    prop: Proposition

    def __repr__(self):
        return f"Atom({self.prop.name})"


@dataclass(frozen=True, repr=False)
class TrueF(Formula):
    def __repr__(self):
        return "True"


@dataclass(frozen=True, repr=False)
class FalseF(Formula):
    def __repr__(self):
        return "False"


TRUE = TrueF()
FALSE = FalseF()


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class Next(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class Eventually(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


UNARY = (Not, Next, Eventually)
BINARY = (And, Or, Until)

_SYMBOL = {Not: "!", Next: "X", Eventually: "F", And: "&", Or: "|", Until: "U"}


def _rebuild(f: Formula, kids: Sequence[Formula]) -> Formula:
    if isinstance(f, UNARY):
        return type(f)(kids[0])
    if isinstance(f, BINARY):
        return type(f)(kids[0], kids[1])
    return f


def propositions_of(f: Formula) -> set[int]:
    if isinstance(f, Atom):
        return {f.prop.id}
    out: set[int] = set()
    for c in f.children():
        out |= propositions_of(c)
    return out


# ---------------------------------------------------------------------------
# Parsing and printing


class FormulaSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        caret = f"\n  {text}\n  {' ' * pos}^" if text else ""
        super().__init__(f"{msg} at position {pos}{caret}")


class NotCoSafe(ValueError):
    pass


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_KEYWORDS = {"F", "X", "U", "true", "false"}
_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[!&|()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start("ident") if m.group("ident") else m.start("op")
        if m.group("ident"):
            word = m.group("ident")
            kind = "kw" if word in _KEYWORDS else "ident"
            toks.append((kind, word, start))
        else:
            toks.append(("op", m.group("op"), start))
        pos = m.end()
    toks.append(("eof", "", n))
    return toks


class _Parser:
    # precedence (loosest first): |  &  U  then prefix ! F X
    def __init__(self, text: str, props: PropTable):
        self.text = text
        self.props = props
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return FormulaSyntaxError(msg, tok[2], self.text)

    def parse(self) -> Formula:
        if self.peek()[0] == "eof":
            raise self.error("empty formula")
        f = self.disj()
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return f

    def disj(self):
        f = self.conj()
        while self.peek()[1] == "|":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.until()
        while self.peek()[1] == "&":
            self.take()
            f = And(f, self.until())
        return f

    def until(self):
        f = self.unary()
        if self.peek()[:2] == ("kw", "U"):
            self.take()
            return Until(f, self.until())
        return f

    def unary(self):
        kind, word, _ = tok = self.peek()
        if word == "!" and kind == "op":
            self.take()
            return Not(self.unary())
        if kind == "kw" and word == "F":
            self.take()
            return Eventually(self.unary())
        if kind == "kw" and word == "X":
            self.take()
            return Next(self.unary())
        return self.primary()

    def primary(self):
        kind, word, pos = tok = self.take()
        if kind == "op" and word == "(":
            f = self.disj()
            if self.peek()[1] != ")":
                raise self.error("expected ')'")
            self.take()
            return f
        if kind == "kw" and word in ("true", "false"):
            return TRUE if word == "true" else FALSE
        if kind == "ident":
            if word not in self.props:
                raise FormulaSyntaxError(f"undeclared proposition {word!r}", pos, self.text)
            return Atom(self.props[word])
        if kind == "eof":
            raise FormulaSyntaxError("unexpected end of formula", pos, self.text)
        raise FormulaSyntaxError(f"unexpected token {word!r}", pos, self.text)


def parse_formula(text: str, props: PropTable) -> Formula:
    """Parse ``text`` using the ASCII grammar ``! F X U & |``."""
    return _Parser(text, props).parse()


_PREC = {Or: 1, And: 2, Until: 3}


def to_text(f: Formula) -> str:
    """Print with the minimum parentheses the grammar needs."""
    if isinstance(f, Atom):
        return f.prop.name
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, UNARY):
        inner = to_text(f.child)
        if isinstance(f.child, BINARY):
            inner = f"({inner})"
        sep = "" if isinstance(f, Not) else " "
        if sep and inner.startswith("("):
            sep = ""
        return f"{_SYMBOL[type(f)]}{sep}{inner}"
    prec = _PREC[type(f)]
    left, right = to_text(f.left), to_text(f.right)
    if isinstance(f.left, BINARY) and (_PREC[type(f.left)] < prec or
                                       (isinstance(f, Until) and isinstance(f.left, Until))):
        left = f"({left})"
    if isinstance(f.right, BINARY) and (_PREC[type(f.right)] < prec or
                                        (not isinstance(f, Until) and type(f.right) is type(f))):
        right = f"({right})"
    return f"{left} {_SYMBOL[type(f)]} {right}"


# ---------------------------------------------------------------------------
# Normal form


def to_pnf(f: Formula) -> Formula:
    """Push negations down to atoms.

    Raises NotCoSafe when the dual operator (always, release, weak next) would
    be needed.
    """
    if isinstance(f, Not):
        return _negate(f.child)
    if isinstance(f, (Atom, TrueF, FalseF)):
        return f
    return _rebuild(f, [to_pnf(c) for c in f.children()])


def _negate(f: Formula) -> Formula:
    if isinstance(f, Atom):
        return Not(f)
    if isinstance(f, TrueF):
        return FALSE
    if isinstance(f, FalseF):
        return TRUE
    if isinstance(f, Not):
        return to_pnf(f.child)
    if isinstance(f, And):
        return Or(_negate(f.left), _negate(f.right))
    if isinstance(f, Or):
        return And(_negate(f.left), _negate(f.right))
    name = {Eventually: "eventually", Until: "until", Next: "next"}[type(f)]
    raise NotCoSafe(f"negated {name} has no co-safe dual: {to_text(Not(f))}")


def check_cosafe(f: Formula) -> bool:
    try:
        g = to_pnf(f)
    except NotCoSafe:
        return False
    return _is_pnf(g)


def _is_pnf(f: Formula) -> bool:
    if isinstance(f, Not):
        return isinstance(f.child, Atom)
    return all(_is_pnf(c) for c in f.children())


def simplify_constants(f: Formula) -> Formula:
    """Fold True/False through the boolean connectives and eventually."""
    if isinstance(f, (Atom, TrueF, FalseF)):
        return f
    kids = [simplify_constants(c) for c in f.children()]
    if isinstance(f, And):
        a, b = kids
        if FALSE in (a, b):
            return FALSE
        if a == TRUE:
            return b
        if b == TRUE:
            return a
    elif isinstance(f, Or):
        a, b = kids
        if TRUE in (a, b):
            return TRUE
        if a == FALSE:
            return b
        if b == FALSE:
            return a
    elif isinstance(f, Eventually):
        if kids[0] in (TRUE, FALSE):
            return kids[0]
    elif isinstance(f, Until):
        a, b = kids
        if b in (TRUE, FALSE):
            return b
        if a == FALSE:
            return b
    elif isinstance(f, Not):
        if kids[0] == TRUE:
            return FALSE
        if kids[0] == FALSE:
            return TRUE
    elif isinstance(f, Next):
        if kids[0] == FALSE:
            return FALSE
    return _rebuild(f, kids)


# ---------------------------------------------------------------------------
# Finite-trace semantics


def collapse(seq: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for p in seq:
        if not out or out[-1] != p:
            out.append(p)
    return tuple(out)


def trace_satisfies(f: Formula, trace: Sequence[int]) -> bool:
    """Evaluate ``f`` at position 0 of a finite trace.

    Next is strong (false at the last position); until and eventually need a
    witness inside the trace.
    """
    if not trace:
        raise ValueError("empty trace")
    return TraceBatch([trace]).satisfied(f)[0]


class TraceBatch:
    """Many traces packed side by side into one integer, one bit per position.

    Trace k owns bits [k*w, k*w + len); the bits between traces stay clear so
    shifts never leak from one trace into the next.  Every operator is then a
    handful of big-integer operations for the whole batch.
    """

    def __init__(self, traces: Iterable[Sequence[int]]):
        self.traces = [tuple(t) for t in traces]
        if any(not t for t in self.traces):
            raise ValueError("empty trace")
        self.max_len = max((len(t) for t in self.traces), default=0)
        self.width = w = self.max_len + 1
        full = starts = 0
        atoms: dict[int, int] = {}
        for k, t in enumerate(self.traces):
            base = k * w
            full |= ((1 << len(t)) - 1) << base
            starts |= 1 << base
            for i, x in enumerate(t):
                atoms[x] = atoms.get(x, 0) | (1 << (base + i))
        self.full, self.starts, self._atoms = full, starts, atoms

    def positions(self, f: Formula) -> int:
        """Bit mask of every (trace, position) where ``f`` holds."""
        full = self.full
        if isinstance(f, Atom):
            return self._atoms.get(f.prop.id, 0)
        if isinstance(f, TrueF):
            return full
        if isinstance(f, FalseF):
            return 0
        if isinstance(f, Not):
            return full & ~self.positions(f.child)
        if isinstance(f, And):
            return self.positions(f.left) & self.positions(f.right)
        if isinstance(f, Or):
            return self.positions(f.left) | self.positions(f.right)
        if isinstance(f, Next):
            return (self.positions(f.child) >> 1) & full
        if isinstance(f, Eventually):
            m = self.positions(f.child)
            for _ in range(self.max_len - 1):
                m |= (m >> 1) & full
            return m
        if isinstance(f, Until):
            a, m = self.positions(f.left), self.positions(f.right)
            for _ in range(self.max_len - 1):
                m |= a & (m >> 1) & full
            return m
        raise TypeError(f"not a formula: {f!r}")

    def satisfied_mask(self, f: Formula) -> int:
        """Bits k*w set for the traces that satisfy ``f``."""
        return self.positions(f) & self.starts

    def satisfied(self, f: Formula) -> list[bool]:
        m = self.satisfied_mask(f)
        w = self.width
        return [bool(m >> (k * w) & 1) for k in range(len(self.traces))]


# ---------------------------------------------------------------------------
# List view used by formula simplification


@dataclass(eq=False)
class ListNode:
    formula: Formula
    parent: "ListNode | None"
    op: frozenset[str]
    depth: int
    order: int
    path: tuple[int, ...]
    children: list["ListNode"] = field(default_factory=list)

    @property
    def label(self) -> tuple[int, int]:
        return (self.depth, self.order)

    def __repr__(self):
        return f"L{self.label}[{to_text(self.formula)}]"


@dataclass
class ListView:
    root: ListNode
    nodes: list[ListNode]

    def lists_of(self, prop_id: int) -> list[ListNode]:
        """Innermost lists holding ``prop_id`` occurrences, leftmost first."""
        return [n for n in self.nodes
                if isinstance(n.formula, Atom) and n.formula.prop.id == prop_id]

    def render(self) -> str:
        return to_text(self.root.formula)


def build_list_view(f: Formula) -> ListView:
    """Annotate every subformula as a list.

    A list's ``op`` holds the operator joining it to its parent plus its own
    prefix operator, if it has one.
    """
    nodes: list[ListNode] = []

    def visit(g, parent, parent_sym, depth, order, path):
        ops = set()
        if parent_sym:
            ops.add(parent_sym)
        if isinstance(g, UNARY):
            ops.add(_SYMBOL[type(g)])
        node = ListNode(g, parent, frozenset(ops), depth, order, path)
        nodes.append(node)
        sym = _SYMBOL.get(type(g))
        for k, c in enumerate(g.children()):
            node.children.append(visit(c, node, sym, depth + 1, k + 1, path + (k,)))
        return node

    root = visit(f, None, None, 0, 1, ())
    return ListView(root, nodes)


def replace_at(f: Formula, path: tuple[int, ...], new: Formula) -> Formula:
    if not path:
        return new
    kids = list(f.children())
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return _rebuild(f, kids)


def subformula_at(f: Formula, path: tuple[int, ...]) -> Formula:
    for k in path:
        f = f.children()[k]
    return f


# ---------------------------------------------------------------------------
# Automaton


class NfaTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class Nfa:
    states: frozenset[int]
    alphabet: tuple[int, ...]
    transitions: dict  # (state, symbol) -> frozenset[int]
    initial: frozenset[int]
    accepting: frozenset[int]
    labels: tuple = ()  # obligations per state, for debugging

    def __hash__(self):
        return id(self)


_EMPTY: frozenset = frozenset()


def _expand(f: Formula, a: int) -> set[frozenset]:
    """Ways to satisfy ``f`` at a position labelled ``a``.

    Each alternative is the set of obligations left for the next position.
    """
    if isinstance(f, TrueF):
        return {_EMPTY}
    if isinstance(f, FalseF):
        return set()
    if isinstance(f, Atom):
        return {_EMPTY} if f.prop.id == a else set()
    if isinstance(f, Not):
        if not isinstance(f.child, Atom):
            raise NotCoSafe("formula not in positive normal form")
        return {_EMPTY} if f.child.prop.id != a else set()
    if isinstance(f, And):
        left = _expand(f.left, a)
        if not left:
            return set()
        return {x | y for x in left for y in _expand(f.right, a)}
    if isinstance(f, Or):
        return _expand(f.left, a) | _expand(f.right, a)
    if isinstance(f, Next):
        return {frozenset([f.child])}
    if isinstance(f, Eventually):
        return _expand(f.child, a) | {frozenset([f])}
    if isinstance(f, Until):
        return _expand(f.right, a) | {x | {f} for x in _expand(f.left, a)}
    raise TypeError(f"not a formula: {f!r}")


def _minimal(alts: set[frozenset]) -> set[frozenset]:
    # a superset of another alternative is redundant
    ordered = sorted(alts, key=len)
    keep: list[frozenset] = []
    for s in ordered:
        if not any(k <= s for k in keep):
            keep.append(s)
    return set(keep)


def build_nfa(f: Formula, alphabet: Iterable[int], max_states: int = 10_000) -> Nfa:
    """Automaton over single-proposition symbols accepting the traces of ``f``.

    States are conjunctions of obligations on the next position; the empty
    obligation set is the (absorbing) accepting state.
    """
    f = to_pnf(f)
    alphabet = tuple(sorted(set(alphabet)))
    index: dict[frozenset, int] = {}
    labels: list[frozenset] = []

    def intern(s: frozenset) -> int:
        if s not in index:
            if len(index) >= max_states:
                raise NfaTooLarge(f"automaton exceeds {max_states} states")
            index[s] = len(labels)
            labels.append(s)
        return index[s]

    start = intern(frozenset([f]))
    trans: dict[tuple[int, int], frozenset[int]] = {}
    todo = [start]
    seen = {start}
    while todo:
        q = todo.pop()
        obligations = labels[q]
        for a in alphabet:
            alts = {_EMPTY}
            for g in sorted(obligations, key=repr):
                step = _expand(g, a)
                alts = {x | y for x in alts for y in step}
                if not alts:
                    break
            targets = frozenset(intern(s) for s in _minimal(alts))
            if targets:
                trans[(q, a)] = targets
            for t in targets:
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
    accepting = frozenset(i for i, s in enumerate(labels) if not s)
    return Nfa(frozenset(range(len(labels))), alphabet, trans,
               frozenset([start]), accepting, tuple(labels))


def nfa_step(nfa: Nfa, states: Iterable[int], symbol: int) -> frozenset[int]:
    if symbol not in nfa.alphabet:
        raise KeyError(f"unknown proposition id {symbol}")
    out: set[int] = set()
    for q in states:
        out |= nfa.transitions.get((q, symbol), _EMPTY)
    return frozenset(out)


def nfa_accepts(nfa: Nfa, trace: Sequence[int]) -> bool:
    current = nfa.initial
    for a in trace:
        current = nfa_step(nfa, current, a)
        if not current:
            return False
    return bool(current & nfa.accepting)
