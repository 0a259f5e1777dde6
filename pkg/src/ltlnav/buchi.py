"""Nondeterministic Buchi automata compiled from LTL by tableau expansion.

Transitions carry symbolic conjunctive guards over the atoms instead of
explicit 2^AP letters, which keeps the alphabet implicit. Compilation is
the classic closure/tableau node expansion followed by degeneralization
and a duplicate-state merge; its output is validation-tested against the
brute-force lasso semantics in :mod:`ltlnav.ltl`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CapacityExceededError, EmptyAutomatonError
from .ltl import (
    And,
    Atom,
    FalseF,
    Ltl,
    Not,
    Or,
    Release,
    TrueF,
    Until,
    normalize,
)

DEFAULT_STATE_BOUND = 4096


@dataclass(frozen=True)
class Guard:
    """Conjunction of literals: every atom in ``pos`` holds, none in ``neg``."""

    pos: frozenset[str] = frozenset()
    neg: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.pos & self.neg:
            raise ValueError(f"unsatisfiable guard: {sorted(self.pos & self.neg)}")

    def satisfied(self, sigma: frozenset[str] | set[str]) -> bool:
        return self.pos <= sigma and not (self.neg & sigma)

    def is_true(self) -> bool:
        return not self.pos and not self.neg

    def __str__(self) -> str:
        if self.is_true():
            return "true"
        lits = sorted(self.pos) + [f"!{a}" for a in sorted(self.neg)]
        return " && ".join(lits)

    @staticmethod
    def parse(text: str) -> "Guard":
        text = text.strip()
        if text == "true":
            return Guard()
        pos, neg = set(), set()
        for lit in text.split("&&"):
            lit = lit.strip()
            if lit.startswith("!"):
                neg.add(lit[1:])
            else:
                pos.add(lit)
        return Guard(frozenset(pos), frozenset(neg))


class Nba:
    """Buchi automaton with dense integer state ids and guarded transitions."""

    def __init__(
        self,
        n_states: int,
        initial: set[int],
        accepting: set[int],
        transitions: list[tuple[int, Guard, int]],
        atoms: frozenset[str] = frozenset(),
    ):
        for q, _, q2 in transitions:
            if not (0 <= q < n_states and 0 <= q2 < n_states):
                raise ValueError(f"transition endpoint out of range: {(q, q2)}")
        self.n_states = n_states
        self.initial = frozenset(initial)
        self.accepting = frozenset(accepting)
        self.transitions = list(transitions)
        self.atoms = frozenset(atoms)
        self._adj: list[list[tuple[Guard, int]]] = [[] for _ in range(n_states)]
        for q, g, q2 in transitions:
            self._adj[q].append((g, q2))

    def outgoing(self, q: int) -> list[tuple[Guard, int]]:
        return self._adj[q]

    def has_true_self_loop(self, q: int) -> bool:
        return any(g.is_true() and q2 == q for g, q2 in self._adj[q])

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "n_states": self.n_states,
            "initial": sorted(self.initial),
            "accepting": sorted(self.accepting),
            "atoms": sorted(self.atoms),
            "transitions": [
                {"from": q, "guard": str(g), "to": q2} for q, g, q2 in self.transitions
            ],
        }

    @staticmethod
    def from_dict(d: dict) -> "Nba":
        return Nba(
            d["n_states"],
            set(d["initial"]),
            set(d["accepting"]),
            [(t["from"], Guard.parse(t["guard"]), t["to"]) for t in d["transitions"]],
            frozenset(d.get("atoms", [])),
        )


def nba_step(nba: Nba, q: int, sigma: frozenset[str] | set[str]) -> frozenset[int]:
    """All successors of ``q`` reading the label set ``sigma``."""
    return frozenset(q2 for g, q2 in nba.outgoing(q) if g.satisfied(sigma))


# --- tableau construction ---------------------------------------------------

@dataclass
class _Node:
    name: int
    incoming: set[int] = field(default_factory=set)
    new: set[Ltl] = field(default_factory=set)
    old: frozenset[Ltl] = frozenset()
    nxt: frozenset[Ltl] = frozenset()


_INIT = -1


def _is_literal(f: Ltl) -> bool:
    return isinstance(f, (TrueF, FalseF, Atom)) or (
        isinstance(f, Not) and isinstance(f.operand, Atom)
    )


def _contradicts(f: Ltl, old: frozenset[Ltl]) -> bool:
    if isinstance(f, FalseF):
        return True
    if isinstance(f, Atom):
        return Not(f) in old
    if isinstance(f, Not):
        return f.operand in old
    return False


def compile_nba(ast: Ltl, state_bound: int = DEFAULT_STATE_BOUND) -> Nba:
    """Translate a formula into an equivalent NBA.

    The input is normalized first (idempotent for NNF input). Nodes of
    the tableau carry current/next obligation sets; transitions into a
    node are guarded by the literals it committed to. Generalized
    acceptance (one set per Until) is degeneralized with a counter.
    """
    f = normalize(ast)
    untils = sorted(_collect_untils(f), key=lambda u: str(u))

    nodes: dict[int, _Node] = {}
    counter = [0]

    def fresh_name() -> int:
        counter[0] += 1
        if counter[0] > state_bound:
            raise CapacityExceededError(
                f"tableau exceeded {state_bound} nodes for formula {f!r}"
            )
        return counter[0]

    def expand(node: _Node) -> None:
        if not node.new:
            for other in nodes.values():
                if other.old == node.old and other.nxt == node.nxt:
                    other.incoming |= node.incoming
                    return
            nodes[node.name] = node
            succ = _Node(fresh_name(), incoming={node.name}, new=set(node.nxt))
            expand(succ)
            return
        g = node.new.pop()
        if _is_literal(g):
            if _contradicts(g, node.old):
                return
            if not isinstance(g, TrueF):
                node.old = node.old | {g}
            expand(node)
        elif isinstance(g, And):
            node.new |= {g.left, g.right} - node.old
            node.old = node.old | {g}
            expand(node)
        elif isinstance(g, Or):
            n2 = _Node(
                fresh_name(),
                incoming=set(node.incoming),
                new=set(node.new) | ({g.right} - node.old),
                old=node.old | {g},
                nxt=node.nxt,
            )
            node.new |= {g.left} - node.old
            node.old = node.old | {g}
            expand(node)
            expand(n2)
        elif isinstance(g, Until):
            n2 = _Node(
                fresh_name(),
                incoming=set(node.incoming),
                new=set(node.new) | ({g.right} - node.old),
                old=node.old | {g},
                nxt=node.nxt,
            )
            node.new |= {g.left} - node.old
            node.old = node.old | {g}
            node.nxt = node.nxt | {g}
            expand(node)
            expand(n2)
        elif isinstance(g, Release):
            n2 = _Node(
                fresh_name(),
                incoming=set(node.incoming),
                new=set(node.new) | ({g.right} - node.old),
                old=node.old | {g},
                nxt=node.nxt | {g},
            )
            node.new |= {g.left, g.right} - node.old
            node.old = node.old | {g}
            expand(node)
            expand(n2)
        else:
            raise TypeError(f"unexpected formula in tableau: {g!r}")

    expand(_Node(fresh_name(), incoming={_INIT}, new={f}))

    # Generalized automaton: states are tableau nodes plus a virtual
    # initial state; the guard into a node conjoins its literals.
    names = [_INIT] + sorted(nodes)
    index = {name: i for i, name in enumerate(names)}

    def guard_of(node: _Node) -> Guard | None:
        pos = {g.name for g in node.old if isinstance(g, Atom)}
        neg = {g.operand.name for g in node.old if isinstance(g, Not)}
        if pos & neg:
            return None
        return Guard(frozenset(pos), frozenset(neg))

    gba_trans: list[tuple[int, Guard, int]] = []
    for node in nodes.values():
        g = guard_of(node)
        if g is None:
            continue
        for src in node.incoming:
            gba_trans.append((index[src], g, index[node.name]))

    acc_sets: list[frozenset[int]] = []
    for u in untils:
        acc_sets.append(
            frozenset([index[_INIT]])
            | frozenset(
                index[n.name] for n in nodes.values() if u not in n.old or u.right in n.old
            )
        )

    nba = _degeneralize(len(names), {index[_INIT]}, gba_trans, acc_sets)
    nba = _merge_duplicates(nba)
    return Nba(
        nba.n_states, set(nba.initial), set(nba.accepting), nba.transitions,
        atoms=_atoms_of_transitions(nba),
    )


def _atoms_of_transitions(nba: Nba) -> frozenset[str]:
    atoms: set[str] = set()
    for _, g, _ in nba.transitions:
        atoms |= g.pos | g.neg
    return frozenset(atoms)


def _collect_untils(f: Ltl) -> set[Until]:
    out: set[Until] = set()

    def walk(g: Ltl) -> None:
        if isinstance(g, Until):
            out.add(g)
        for child in getattr(g, "__dict__", {}).values():
            if isinstance(child, Ltl):
                walk(child)

    walk(f)
    return out


def _degeneralize(
    n: int,
    initial: set[int],
    transitions: list[tuple[int, Guard, int]],
    acc_sets: list[frozenset[int]],
) -> Nba:
    k = len(acc_sets)
    if k == 0:
        return Nba(n, initial, set(range(n)), transitions)

    def advance(j: int, q: int) -> int:
        if j == k:
            j = 0
        while j < k and q in acc_sets[j]:
            j += 1
        return j

    # states (q, j) reachable from (q0, 0); accepting when j == k
    start = [(q, 0) for q in sorted(initial)]
    idx: dict[tuple[int, int], int] = {}
    order: list[tuple[int, int]] = []

    def get(s: tuple[int, int]) -> int:
        if s not in idx:
            idx[s] = len(order)
            order.append(s)
        return idx[s]

    for s in start:
        get(s)
    out: list[tuple[int, Guard, int]] = []
    i = 0
    while i < len(order):
        q, j = order[i]
        for src, g, dst in transitions:
            if src != q:
                continue
            out.append((i, g, get((dst, advance(j, dst)))))
        i += 1
    accepting = {i for i, (q, j) in enumerate(order) if j == k}
    return Nba(len(order), {idx[s] for s in start}, accepting, out)


def _merge_duplicates(nba: Nba) -> Nba:
    """Merge states whose outgoing transition sets and acceptance agree."""
    n = nba.n_states
    rep = list(range(n))
    while True:
        sig: dict[tuple, int] = {}
        new_rep = list(rep)
        for q in range(n):
            if rep[q] != q:
                continue
            key = (
                q in nba.accepting,
                frozenset((str(g), rep[dst]) for src, g, dst in nba.transitions if rep[src] == q),
            )
            if key in sig:
                new_rep[q] = sig[key]
            else:
                sig[key] = q
        # resolve chains
        for q in range(n):
            r = q
            while new_rep[r] != r:
                r = new_rep[r]
            new_rep[q] = r
        if new_rep == rep:
            break
        rep = new_rep

    keep = sorted({rep[q] for q in range(n)})
    remap = {old: i for i, old in enumerate(keep)}
    trans = sorted(
        {(remap[rep[src]], g, remap[rep[dst]]) for src, g, dst in nba.transitions},
        key=lambda t: (t[0], str(t[1]), t[2]),
    )
    return Nba(
        len(keep),
        {remap[rep[q]] for q in nba.initial},
        {remap[rep[q]] for q in nba.accepting},
        list(trans),
        nba.atoms,
    )


# --- pruning ----------------------------------------------------------------

def prune_nba(nba: Nba, mutex_groups: list[set[str]]) -> Nba:
    """Drop transitions whose guard needs two mutually exclusive atoms,
    then trim states that cannot sit on an initial-to-accepting path."""
    def feasible(g: Guard) -> bool:
        return all(len(g.pos & set(group)) <= 1 for group in mutex_groups)

    trans = [(q, g, q2) for q, g, q2 in nba.transitions if feasible(g)]

    fwd: dict[int, set[int]] = {}
    bwd: dict[int, set[int]] = {}
    for q, _, q2 in trans:
        fwd.setdefault(q, set()).add(q2)
        bwd.setdefault(q2, set()).add(q)

    def reach(seeds: set[int], adj: dict[int, set[int]]) -> set[int]:
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            for nxt in adj.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    from_init = reach(set(nba.initial), fwd)
    to_accept = reach(set(nba.accepting), bwd)
    keep = sorted(from_init & to_accept)
    if not keep or not (set(nba.accepting) & set(keep)):
        raise EmptyAutomatonError("pruning disconnected the initial states from acceptance")

    remap = {q: i for i, q in enumerate(keep)}
    kept_trans = [
        (remap[q], g, remap[q2]) for q, g, q2 in trans if q in remap and q2 in remap
    ]
    return Nba(
        len(keep),
        {remap[q] for q in nba.initial if q in remap},
        {remap[q] for q in nba.accepting if q in remap},
        kept_trans,
        nba.atoms,
    )


# --- lasso acceptance -------------------------------------------------------

def accepts_lasso(nba: Nba, stem: list, loop: list) -> bool:
    """True iff some run over stem . loop^omega hits acceptance infinitely often."""
    if not loop:
        raise ValueError("loop must be nonempty")
    stem = [frozenset(s) for s in stem]
    loop = [frozenset(s) for s in loop]

    states = set(nba.initial)
    for sigma in stem:
        states = {q2 for q in states for q2 in nba_step(nba, q, sigma)}
        if not states:
            return False

    m = len(loop)
    # reachable (state, loop position) nodes
    seen: set[tuple[int, int]] = {(q, 0) for q in states}
    stack = list(seen)
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    while stack:
        q, i = stack.pop()
        succs = [(q2, (i + 1) % m) for q2 in nba_step(nba, q, loop[i])]
        adj[(q, i)] = succs
        for s in succs:
            if s not in seen:
                seen.add(s)
                stack.append(s)

    targets = [s for s in seen if s[0] in nba.accepting]
    for t in targets:
        # can t reach itself?
        frontier = list(adj.get(t, ()))
        visited = set(frontier)
        while frontier:
            s = frontier.pop()
            if s == t:
                break
            for s2 in adj.get(s, ()):
                if s2 not in visited:
                    visited.add(s2)
                    frontier.append(s2)
        else:
            continue
        return True
    return False
