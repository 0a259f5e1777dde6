"""Lasso planning over the product of workspace geometry and a Buchi automaton.

Trees grow RRT*-style in X x Q: samples are geometric, candidate parents
are near-by product nodes, and automaton successors are enumerated from
the parent's location label (guards fire on the label of the move's
source point). Zero-length automaton hops are inserted alongside every
geometric extension so that guard firings land co-located with the region
that triggered them; cost ties prefer same-component parents, which keeps
component changes on those zero-length hops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .buchi import Nba, nba_step
from .errors import (
    NoAcceptingReachedError,
    NoCycleFoundError,
    NoPlanFoundError,
    UnlabeledSegmentEndError,
)
from .rrtstar import default_kappa, near_radius, steer
from .workspace import Point, Workspace, dist


def product_transition_valid(
    w: Workspace, nba: Nba, eta: float,
    a: tuple[Point, int], b: tuple[Point, int],
) -> bool:
    """Product rule: geometric hop within eta and collision-free, and the
    automaton moves on the label of the source point."""
    (x, q), (x2, q2) = a, b
    if dist(x, x2) > eta:
        return False
    if not w.segment_collision_free(x, x2):
        return False
    return q2 in nba_step(nba, q, w.label_of(x))


class ProductTree:
    """Rooted tree over (point, automaton state) pairs with geometric cost."""

    def __init__(self, w: Workspace, nba: Nba, root: tuple[Point, int],
                 eta: float, kappa: float | None = None):
        x0, q0 = root
        x0 = np.asarray(x0, dtype=float)
        self.w = w
        self.nba = nba
        self.dim = x0.shape[0]
        self.eta = float(eta)
        self.kappa = default_kappa(eta, self.dim) if kappa is None else float(kappa)
        self._pts = np.empty((16, self.dim), dtype=float)
        self._pts[0] = x0
        self.q: list[int] = [int(q0)]
        self.size = 1
        self.parent: list[int] = [-1]
        self.cost: list[float] = [0.0]
        self.children: list[list[int]] = [[]]
        self.labels: list[frozenset[str]] = [w.label_of(x0)]

    @property
    def points(self) -> np.ndarray:
        return self._pts[: self.size]

    def point(self, i: int) -> Point:
        return self._pts[i]

    def node(self, i: int) -> tuple[Point, int]:
        return self._pts[i], self.q[i]

    def add(self, x: Point, q: int, parent: int) -> int:
        if self.size == self._pts.shape[0]:
            grown = np.empty((2 * self.size, self.dim), dtype=float)
            grown[: self.size] = self._pts
            self._pts = grown
        i = self.size
        self._pts[i] = x
        self.size += 1
        self.q.append(int(q))
        self.parent.append(parent)
        self.cost.append(self.cost[parent] + dist(self._pts[parent], x))
        self.children.append([])
        self.children[parent].append(i)
        self.labels.append(self.w.label_of(x))
        return i

    def reparent(self, i: int, new_parent: int) -> None:
        old = self.parent[i]
        self.children[old].remove(i)
        self.parent[i] = new_parent
        self.children[new_parent].append(i)
        delta = (
            self.cost[new_parent]
            + dist(self._pts[new_parent], self._pts[i])
            - self.cost[i]
        )
        stack = [i]
        while stack:
            j = stack.pop()
            self.cost[j] += delta
            stack.extend(self.children[j])

    def chain(self, i: int) -> list[int]:
        out = []
        while i != -1:
            out.append(i)
            i = self.parent[i]
        out.reverse()
        return out


def _grow_product(
    tree: ProductTree,
    n_iterations: int,
    rng: np.random.Generator,
    on_insert,
) -> None:
    w, nba = tree.w, tree.nba
    for _ in range(n_iterations):
        x_rand = w.sample(rng)
        d2 = np.sum((tree.points - x_rand) ** 2, axis=1)
        v = int(np.argmin(d2))
        x_new, _ = steer(tree.point(v), x_rand, tree.eta)
        if not np.any(x_new != tree.point(v)):
            continue
        if not w.segment_collision_free(tree.point(v), x_new):
            continue
        rad = near_radius(tree)
        d2n = np.sum((tree.points - x_new) ** 2, axis=1)
        near_ids = [int(i) for i in np.nonzero(d2n <= rad * rad)[0]]
        candidates = near_ids if v in near_ids else near_ids + [v]

        # best parent per successor automaton state; ties prefer cheaper
        # cost, then a same-component parent, then the lower id
        free_cache: dict[int, bool] = {}
        best: dict[int, tuple[float, int, int]] = {}
        for p in candidates:
            dp = dist(tree.point(p), x_new)
            if dp > tree.eta or dp == 0.0:
                continue
            if p not in free_cache:
                free_cache[p] = w.segment_collision_free(tree.point(p), x_new)
            if not free_cache[p]:
                continue
            c = tree.cost[p] + dp
            for q2 in nba_step(nba, tree.q[p], tree.labels[p]):
                key = (c, 0 if tree.q[p] == q2 else 1, p)
                if q2 not in best or key < best[q2]:
                    best[q2] = key
        if not best:
            continue

        inserted: dict[int, int] = {}
        for q2 in sorted(best):
            _, _, p = best[q2]
            inserted[q2] = tree.add(x_new, q2, p)
        # zero-length automaton hops from each inserted node
        frontier = sorted(inserted)
        while frontier:
            q2 = frontier.pop(0)
            i = inserted[q2]
            for q3 in nba_step(nba, q2, tree.labels[i]):
                if q3 not in inserted:
                    inserted[q3] = tree.add(x_new, q3, i)
                    frontier.append(q3)

        # rewire near nodes through the inserted nodes
        for q2, i in sorted(inserted.items()):
            lab = tree.labels[i]
            succs = nba_step(nba, q2, lab)
            for p in near_ids:
                if tree.q[p] not in succs:
                    continue
                dp = dist(x_new, tree.point(p))
                if dp > tree.eta:
                    continue
                c = tree.cost[i] + dp
                if c < tree.cost[p] and w.segment_collision_free(x_new, tree.point(p)):
                    tree.reparent(p, i)

        for q2, i in sorted(inserted.items()):
            on_insert(i)


def grow_prefix_tree(
    w: Workspace,
    nba: Nba,
    root: tuple[Point, int],
    n_iterations: int,
    rng: np.random.Generator,
    eta: float,
    kappa: float | None = None,
) -> tuple[ProductTree, list[int]]:
    """Grow from the initial product state; goals are nodes whose automaton
    component is accepting."""
    tree = ProductTree(w, nba, root, eta, kappa)
    goals: list[int] = [0] if tree.q[0] in nba.accepting else []
    _grow_product(
        tree, n_iterations, rng,
        on_insert=lambda i: goals.append(i) if tree.q[i] in nba.accepting else None,
    )
    if not goals:
        raise NoAcceptingReachedError(
            f"no accepting product state reached in {n_iterations} iterations"
        )
    return tree, goals


def grow_suffix_tree(
    w: Workspace,
    nba: Nba,
    root: tuple[Point, int],
    n_iterations: int,
    rng: np.random.Generator,
    eta: float,
    kappa: float | None = None,
) -> tuple[ProductTree, list[int]]:
    """Grow from an accepting product state; goals are nodes that can close
    the cycle back to the root in one product transition."""
    x_root, q_root = np.asarray(root[0], dtype=float), int(root[1])
    tree = ProductTree(w, nba, (x_root, q_root), eta, kappa)

    def closes(i: int) -> bool:
        x, q = tree.node(i)
        if dist(x, x_root) > eta:
            return False
        if q_root not in nba_step(nba, q, tree.labels[i]):
            return False
        return w.segment_collision_free(x, x_root)

    goals: list[int] = [0] if closes(0) else []
    _grow_product(
        tree, n_iterations, rng,
        on_insert=lambda i: goals.append(i) if closes(i) else None,
    )
    if not goals:
        raise NoCycleFoundError(
            f"no cycle back to the accepting state in {n_iterations} iterations"
        )
    return tree, goals


@dataclass
class LassoPlan:
    """Optimal accepting prefix-suffix plan over the product space."""

    prefix_points: np.ndarray       # (K + 1, d)
    prefix_q: list[int]
    suffix_points: np.ndarray       # (M + 1, d), first == last location; empty for finite tasks
    suffix_q: list[int]
    prefix_cost: float
    suffix_cost: float
    eta: float

    @property
    def total_cost(self) -> float:
        return self.prefix_cost + self.suffix_cost

    @property
    def is_finite(self) -> bool:
        return len(self.suffix_q) == 0

    def nodes(self) -> list[tuple[np.ndarray, int]]:
        """Prefix nodes followed by suffix nodes past the shared boundary."""
        out = [(self.prefix_points[i], self.prefix_q[i]) for i in range(len(self.prefix_q))]
        out += [(self.suffix_points[i], self.suffix_q[i]) for i in range(1, len(self.suffix_q))]
        return out

    def label_word(self, w: Workspace) -> tuple[list[frozenset[str]], list[frozenset[str]]]:
        """Stem and loop of the infinite label word this plan generates."""
        stem = [w.label_of(self.prefix_points[i]) for i in range(len(self.prefix_q) - 1)]
        if self.is_finite:
            loop = [w.label_of(self.prefix_points[-1])]
        else:
            loop = [w.label_of(self.suffix_points[i]) for i in range(len(self.suffix_q) - 1)]
        return stem, loop

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "eta": self.eta,
            "prefix_cost": self.prefix_cost,
            "suffix_cost": self.suffix_cost,
            "prefix": [
                {"x": [float(v) for v in self.prefix_points[i]], "q": self.prefix_q[i]}
                for i in range(len(self.prefix_q))
            ],
            "suffix": [
                {"x": [float(v) for v in self.suffix_points[i]], "q": self.suffix_q[i]}
                for i in range(len(self.suffix_q))
            ],
        }

    @staticmethod
    def from_dict(d: dict) -> "LassoPlan":
        pre = d["prefix"]
        suf = d["suffix"]
        dim = len(pre[0]["x"])
        return LassoPlan(
            prefix_points=np.array([n["x"] for n in pre], dtype=float),
            prefix_q=[n["q"] for n in pre],
            suffix_points=(
                np.array([n["x"] for n in suf], dtype=float)
                if suf else np.empty((0, dim))
            ),
            suffix_q=[n["q"] for n in suf],
            prefix_cost=d["prefix_cost"],
            suffix_cost=d["suffix_cost"],
            eta=d["eta"],
        )


def extract_lasso(
    w: Workspace,
    nba: Nba,
    prefix_tree: ProductTree,
    prefix_goals: list[int],
    suffix_iterations: int,
    rng: np.random.Generator,
    candidate_cap: int = 5,
) -> LassoPlan:
    """Pick the cheapest prefix+suffix combination over the best prefix
    candidates. Accepting states with a guard-true self-loop make the task
    finite-horizon: empty suffix."""
    ranked = sorted(prefix_goals, key=lambda i: (prefix_tree.cost[i], i))
    best_plan: LassoPlan | None = None
    for cand in ranked[:candidate_cap]:
        chain = prefix_tree.chain(cand)
        prefix_pts = np.array([prefix_tree.point(i) for i in chain])
        prefix_q = [prefix_tree.q[i] for i in chain]
        prefix_cost = prefix_tree.cost[cand]
        x_acc, q_acc = prefix_tree.node(cand)

        if nba.has_true_self_loop(q_acc):
            plan = LassoPlan(
                prefix_pts, prefix_q,
                np.empty((0, prefix_tree.dim)), [],
                prefix_cost, 0.0, prefix_tree.eta,
            )
        else:
            try:
                suf_tree, suf_goals = grow_suffix_tree(
                    w, nba, (x_acc, q_acc), suffix_iterations, rng, prefix_tree.eta,
                    prefix_tree.kappa,
                )
            except NoCycleFoundError:
                continue
            gbest = min(
                suf_goals,
                key=lambda i: (suf_tree.cost[i] + dist(suf_tree.point(i), x_acc), i),
            )
            suf_chain = suf_tree.chain(gbest)
            suf_pts = [suf_tree.point(i) for i in suf_chain] + [x_acc.copy()]
            suf_q = [suf_tree.q[i] for i in suf_chain] + [int(q_acc)]
            suffix_cost = suf_tree.cost[gbest] + dist(suf_tree.point(gbest), x_acc)
            plan = LassoPlan(
                prefix_pts, prefix_q,
                np.array(suf_pts), suf_q,
                prefix_cost, suffix_cost, prefix_tree.eta,
            )
        if best_plan is None or plan.total_cost < best_plan.total_cost:
            best_plan = plan
    if best_plan is None:
        raise NoPlanFoundError("no accepting lasso could be closed")
    return best_plan


def project_to_workspace(plan: LassoPlan) -> list[np.ndarray]:
    """All plan points in order, automaton components dropped."""
    pts = [plan.prefix_points[i] for i in range(len(plan.prefix_q))]
    pts += [plan.suffix_points[i] for i in range(len(plan.suffix_q))]
    return pts


@dataclass
class SubTaskSegment:
    """One goal-reaching slice of the lasso, constant automaton component."""

    index: int
    is_suffix: bool
    q_component: int
    goal_atom: str
    points: np.ndarray
    remaining: np.ndarray   # distance-to-segment-end per point

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "is_suffix": self.is_suffix,
            "q_component": self.q_component,
            "goal_atom": self.goal_atom,
            "points": [[float(v) for v in p] for p in self.points],
            "remaining": [float(r) for r in self.remaining],
        }

    @staticmethod
    def from_dict(d: dict) -> "SubTaskSegment":
        return SubTaskSegment(
            index=d["index"],
            is_suffix=d["is_suffix"],
            q_component=d["q_component"],
            goal_atom=d["goal_atom"],
            points=np.array(d["points"], dtype=float),
            remaining=np.array(d["remaining"], dtype=float),
        )


@dataclass
class DecomposedPlan:
    prefix_segments: list[SubTaskSegment] = field(default_factory=list)
    suffix_segments: list[SubTaskSegment] = field(default_factory=list)

    @property
    def segments(self) -> list[SubTaskSegment]:
        return self.prefix_segments + self.suffix_segments

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "prefix_segments": [s.to_dict() for s in self.prefix_segments],
            "suffix_segments": [s.to_dict() for s in self.suffix_segments],
        }

    @staticmethod
    def from_dict(d: dict) -> "DecomposedPlan":
        return DecomposedPlan(
            [SubTaskSegment.from_dict(s) for s in d["prefix_segments"]],
            [SubTaskSegment.from_dict(s) for s in d["suffix_segments"]],
        )


def _cumulative(points: np.ndarray) -> np.ndarray:
    if len(points) == 1:
        return np.zeros(1)
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def decompose(plan: LassoPlan, w: Workspace) -> DecomposedPlan:
    """Split the lasso at automaton-component changes into goal-reaching
    segments. Zero-length stub runs (guard firings co-located with the
    previous point) are absorbed as the closing node of the segment that
    produced them."""
    nodes = plan.nodes()
    boundary = len(plan.prefix_q) - 1

    runs: list[list[int]] = []
    for i, (_, q) in enumerate(nodes):
        if runs and nodes[runs[-1][-1]][1] == q:
            runs[-1].append(i)
        else:
            runs.append([i])

    # absorb runs that never move away from the previous segment's end
    merged: list[list[int]] = []
    for run in runs:
        if merged:
            prev_pt = nodes[merged[-1][-1]][0]
            if all(np.array_equal(nodes[i][0], prev_pt) for i in run):
                merged[-1].extend(run)
                continue
        merged.append(run)

    out = DecomposedPlan()
    for run in merged:
        pts = np.array([nodes[i][0] for i in run])
        q_comp = nodes[run[0]][1]
        final = pts[-1]
        labels = sorted(w.label_of(final) - {w.obstacle_atom})
        if not labels:
            raise UnlabeledSegmentEndError(
                f"segment ending at {final.tolist()} lies in no labeled region"
            )
        cum = _cumulative(pts)
        seg_is_suffix = run[-1] > boundary
        seg = SubTaskSegment(
            index=0,
            is_suffix=seg_is_suffix,
            q_component=q_comp,
            goal_atom=labels[0],
            points=pts,
            remaining=cum[-1] - cum,
        )
        (out.suffix_segments if seg_is_suffix else out.prefix_segments).append(seg)
    for i, seg in enumerate(out.segments):
        seg.index = i
    return out
