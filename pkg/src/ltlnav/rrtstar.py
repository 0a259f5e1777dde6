"""Geometric RRT*: incremental tree growth and optimal path extraction.

Near-neighbour queries use the shrinking radius kappa (log n / n)^(1/d),
capped at the steering bound eta so every rewired edge stays steerable.
Ties are broken by lowest vertex id everywhere, which makes runs with a
fixed seed reproducible bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoPathFoundError
from .workspace import Point, Shape, Workspace, dist


def default_kappa(eta: float, d: int = 2) -> float:
    """Constant making the near radius approximately 2 eta at n = 100."""
    return 2.0 * eta / (math.log(100.0) / 100.0) ** (1.0 / d)


class GeoTree:
    """Rooted tree over workspace points with cost-to-root bookkeeping."""

    def __init__(self, root: Point, eta: float, kappa: float | None = None):
        root = np.asarray(root, dtype=float)
        self.dim = root.shape[0]
        self.eta = float(eta)
        self.kappa = default_kappa(eta, self.dim) if kappa is None else float(kappa)
        self._pts = np.empty((16, self.dim), dtype=float)
        self._pts[0] = root
        self.size = 1
        self.parent: list[int] = [-1]
        self.cost: list[float] = [0.0]
        self.children: list[list[int]] = [[]]

    @property
    def points(self) -> np.ndarray:
        return self._pts[: self.size]

    def point(self, i: int) -> Point:
        return self._pts[i]

    def add(self, x: Point, parent: int) -> int:
        if self.size == self._pts.shape[0]:
            grown = np.empty((2 * self.size, self.dim), dtype=float)
            grown[: self.size] = self._pts
            self._pts = grown
        i = self.size
        self._pts[i] = x
        self.size += 1
        self.parent.append(parent)
        self.cost.append(self.cost[parent] + dist(self._pts[parent], x))
        self.children.append([])
        self.children[parent].append(i)
        return i

    def reparent(self, i: int, new_parent: int) -> None:
        old = self.parent[i]
        self.children[old].remove(i)
        self.parent[i] = new_parent
        self.children[new_parent].append(i)
        delta = self.cost[new_parent] + dist(self._pts[new_parent], self._pts[i]) - self.cost[i]
        stack = [i]
        while stack:
            j = stack.pop()
            self.cost[j] += delta
            stack.extend(self.children[j])


def nearest(tree: GeoTree, x: Point) -> int:
    """Closest vertex to x; equidistant candidates resolve to the lowest id."""
    d2 = np.sum((tree.points - np.asarray(x)) ** 2, axis=1)
    return int(np.argmin(d2))


def steer(x: Point, x2: Point, eta: float) -> tuple[Point, tuple[Point, Point]]:
    """Move from x toward x2 by at most eta along the connecting line."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    d = dist(x, x2)
    if d == 0.0:
        return x.copy(), (x, x)
    if d <= eta:
        return x2.copy(), (x, x2)
    x_new = x + (eta / d) * (x2 - x)
    return x_new, (x, x_new)


def near_radius(tree: GeoTree, n: int | None = None) -> float:
    n = tree.size if n is None else n
    if n <= 1:
        return tree.eta
    return min(tree.kappa * (math.log(n) / n) ** (1.0 / tree.dim), tree.eta)


def near(tree: GeoTree, x: Point) -> list[int]:
    """Vertex ids within the shrinking near radius of x, ascending."""
    rad = near_radius(tree)
    d2 = np.sum((tree.points - np.asarray(x)) ** 2, axis=1)
    return [int(i) for i in np.nonzero(d2 <= rad * rad)[0]]


def rewire(tree: GeoTree, near_ids: list[int], new_id: int, w: Workspace) -> None:
    """Re-parent near vertices through the new vertex when strictly cheaper."""
    x_new = tree.point(new_id)
    for i in near_ids:
        if i == new_id or i == tree.parent[new_id]:
            continue
        c = tree.cost[new_id] + dist(x_new, tree.point(i))
        if c < tree.cost[i] and w.segment_collision_free(x_new, tree.point(i)):
            tree.reparent(i, new_id)


def grow(tree: GeoTree, w: Workspace, n_iterations: int, rng: np.random.Generator) -> GeoTree:
    """Run sample/nearest/steer/choose-parent/rewire for n_iterations.

    Iterations whose extension collides or degenerates are consumed
    without adding a vertex.
    """
    for _ in range(n_iterations):
        x_rand = w.sample(rng)
        v = nearest(tree, x_rand)
        x_new, _ = steer(tree.point(v), x_rand, tree.eta)
        if not np.any(x_new != tree.point(v)):
            continue
        if not w.segment_collision_free(tree.point(v), x_new):
            continue
        near_ids = near(tree, x_new)
        best, best_cost = v, tree.cost[v] + dist(tree.point(v), x_new)
        for i in near_ids:
            c = tree.cost[i] + dist(tree.point(i), x_new)
            if (c, i) < (best_cost, best) and w.segment_collision_free(tree.point(i), x_new):
                best, best_cost = i, c
        new_id = tree.add(x_new, best)
        rewire(tree, near_ids, new_id, w)
    return tree


@dataclass
class GeoPath:
    """Root-to-goal waypoints with cost-to-root and remaining distance."""

    points: np.ndarray          # (Np + 1, d)
    cost: np.ndarray            # cost-to-root per point
    remaining: np.ndarray       # total cost minus cost-to-root, ends at 0
    eta: float

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_dict(self) -> dict:
        return {
            "points": [[float(v) for v in p] for p in self.points],
            "cost": [float(c) for c in self.cost],
            "remaining": [float(r) for r in self.remaining],
            "eta": self.eta,
        }


def extract_path(tree: GeoTree, goal: Shape) -> GeoPath:
    """Cheapest root-to-goal path among vertices inside the goal shape."""
    in_goal = [i for i in range(tree.size) if goal.contains(tree.point(i))]
    if not in_goal:
        raise NoPathFoundError("no tree vertex lies inside the goal shape")
    best = min(in_goal, key=lambda i: (tree.cost[i], i))
    chain = []
    i = best
    while i != -1:
        chain.append(i)
        i = tree.parent[i]
    chain.reverse()
    pts = np.array([tree.point(i) for i in chain], dtype=float)
    cost = np.array([tree.cost[i] for i in chain], dtype=float)
    return GeoPath(points=pts, cost=cost, remaining=cost[-1] - cost, eta=tree.eta)
