"""Labeled geometric environments: shapes, labeling, sampling, collision.

Obstacle interiors are open sets, so a segment grazing a boundary counts
as free; this keeps the exact segment tests deterministic. Labeled
regions use closed containment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigError, OutOfBoundsError

Point = np.ndarray

OBSTACLE_ATOM = "o"


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ConfigError("box lo/hi dimension mismatch")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ConfigError(f"box with lo > hi: {self}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x: Point, open_set: bool = False) -> bool:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if open_set:
            return bool(np.all(x > lo) and np.all(x < hi))
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def segment_hits_interior(self, a: Point, b: Point) -> bool:
        # slab clipping of the parametric segment a + t (b - a), t in [0, 1]
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        d = b - a
        t0, t1 = 0.0, 1.0
        for k in range(self.dim):
            if d[k] == 0.0:
                if not (lo[k] < a[k] < hi[k]):
                    # outside or on the slab boundary on this axis
                    if not (lo[k] <= a[k] <= hi[k]):
                        return False
                    # riding exactly on a face: never in the open interior
                    if a[k] == lo[k] or a[k] == hi[k]:
                        return False
                continue
            ta = (lo[k] - a[k]) / d[k]
            tb = (hi[k] - a[k]) / d[k]
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
            if t0 >= t1:
                return False
        return t0 < t1

    def to_dict(self) -> dict:
        return {"kind": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ConfigError(f"sphere radius must be nonnegative: {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, x: Point, open_set: bool = False) -> bool:
        d = float(np.linalg.norm(x - np.asarray(self.center)))
        return d < self.radius if open_set else d <= self.radius

    def segment_hits_interior(self, a: Point, b: Point) -> bool:
        return _point_segment_distance(np.asarray(self.center), a, b) < self.radius

    def to_dict(self) -> dict:
        return {"kind": "sphere", "center": list(self.center), "radius": self.radius}


Shape = Box | Sphere


def shape_from_dict(d: dict) -> Shape:
    kind = d.get("kind")
    if kind == "box":
        return Box(tuple(float(v) for v in d["lo"]), tuple(float(v) for v in d["hi"]))
    if kind == "sphere":
        return Sphere(tuple(float(v) for v in d["center"]), float(d["radius"]))
    raise ConfigError(f"unknown shape kind: {kind!r}")


def shape_center(s: Shape) -> np.ndarray:
    if isinstance(s, Sphere):
        return np.asarray(s.center, dtype=float)
    return (np.asarray(s.lo) + np.asarray(s.hi)) / 2.0


def _point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float((p - a) @ ab) / denom
    t = min(1.0, max(0.0, t))
    return float(np.linalg.norm(p - (a + t * ab)))


def dist(x: Point, x2: Point) -> float:
    """Euclidean distance between two points of equal dimension."""
    x, x2 = np.asarray(x, dtype=float), np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    return float(np.linalg.norm(x - x2))


class Workspace:
    """Bounded environment with obstacle shapes and named labeled regions."""

    def __init__(
        self,
        bounds: Box,
        obstacles: list[Shape],
        regions: list[tuple[str, Shape]],
        initial: Shape | None = None,
        obstacle_atom: str = OBSTACLE_ATOM,
    ):
        self.bounds = bounds
        self.dim = bounds.dim
        self.obstacles = list(obstacles)
        self.regions = list(regions)
        self.initial = initial
        self.obstacle_atom = obstacle_atom
        self._validate()

    def _validate(self) -> None:
        if self.dim not in (2, 3):
            raise ConfigError(f"workspace dimension must be 2 or 3, got {self.dim}")
        for s in self.obstacles + [s for _, s in self.regions]:
            if s.dim != self.dim:
                raise ConfigError(f"shape dimension mismatch: {s}")
        names = [name for name, _ in self.regions]
        if len(names) != len(set(names)):
            raise ConfigError(f"duplicate region names: {names}")
        if self.obstacle_atom in names:
            raise ConfigError(f"region may not reuse the obstacle atom {self.obstacle_atom!r}")
        # goal regions must be disjoint from obstacles (feasibility prerequisite);
        # checked at the center and by sampled points on the shape
        for name, s in self.regions:
            c = shape_center(s)
            if any(ob.contains(c, open_set=True) for ob in self.obstacles):
                raise ConfigError(f"region {name!r} overlaps an obstacle")
        if self.initial is not None:
            c = shape_center(self.initial)
            if any(ob.contains(c, open_set=True) for ob in self.obstacles):
                raise ConfigError("initial region overlaps an obstacle")

    @property
    def atoms(self) -> frozenset[str]:
        return frozenset(name for name, _ in self.regions) | {self.obstacle_atom}

    def region_shape(self, name: str) -> Shape:
        for n, s in self.regions:
            if n == name:
                return s
        raise KeyError(name)

    def mutex_groups(self) -> list[set[str]]:
        """Atom sets that cannot co-occur at one point: pairwise disjoint
        regions, and each region disjoint from the obstacle set."""
        groups: list[set[str]] = []
        names = [n for n, _ in self.regions]
        shapes = {n: s for n, s in self.regions}
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                if _shapes_disjoint(shapes[a], shapes[b]):
                    groups.append({a, b})
            groups.append({a, self.obstacle_atom})
        return groups

    def label_of(self, x: Point) -> frozenset[str]:
        x = np.asarray(x, dtype=float)
        if not self.bounds.contains(x):
            raise OutOfBoundsError(f"point {x.tolist()} outside workspace bounds")
        labels = {name for name, s in self.regions if s.contains(x)}
        if any(ob.contains(x, open_set=True) for ob in self.obstacles):
            labels.add(self.obstacle_atom)
        return frozenset(labels)

    def in_obstacle(self, x: Point) -> bool:
        x = np.asarray(x, dtype=float)
        return any(ob.contains(x, open_set=True) for ob in self.obstacles)

    def sample(self, rng: np.random.Generator) -> Point:
        lo = np.asarray(self.bounds.lo, dtype=float)
        hi = np.asarray(self.bounds.hi, dtype=float)
        return lo + rng.random(self.dim) * (hi - lo)

    def segment_collision_free(self, a: Point, b: Point) -> bool:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape != b.shape:
            raise ValueError("segment endpoints differ in dimension")
        return not any(ob.segment_hits_interior(a, b) for ob in self.obstacles)

    # --- scene file ----------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "version": 1,
            "dimension": self.dim,
            "bounds": {"lo": list(self.bounds.lo), "hi": list(self.bounds.hi)},
            "obstacle_atom": self.obstacle_atom,
            "obstacles": [s.to_dict() for s in self.obstacles],
            "regions": [{"name": n, **s.to_dict()} for n, s in self.regions],
        }
        if self.initial is not None:
            d["initial"] = self.initial.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "Workspace":
        bounds = Box(
            tuple(float(v) for v in d["bounds"]["lo"]),
            tuple(float(v) for v in d["bounds"]["hi"]),
        )
        obstacles = [shape_from_dict(s) for s in d.get("obstacles", [])]
        regions = [
            (r["name"], shape_from_dict(r)) for r in d.get("regions", [])
        ]
        initial = shape_from_dict(d["initial"]) if "initial" in d else None
        return Workspace(
            bounds, obstacles, regions, initial,
            obstacle_atom=d.get("obstacle_atom", OBSTACLE_ATOM),
        )

    @staticmethod
    def load(path) -> "Workspace":
        with open(path) as fh:
            return Workspace.from_dict(yaml.safe_load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)


def _shapes_disjoint(a: Shape, b: Shape) -> bool:
    if isinstance(a, Sphere) and isinstance(b, Sphere):
        return dist(np.asarray(a.center), np.asarray(b.center)) > a.radius + b.radius
    if isinstance(a, Box) and isinstance(b, Box):
        return any(
            a.hi[k] < b.lo[k] or b.hi[k] < a.lo[k] for k in range(a.dim)
        )
    box, sph = (a, b) if isinstance(a, Box) else (b, a)
    c = np.asarray(sph.center)
    closest = np.clip(c, np.asarray(box.lo), np.asarray(box.hi))
    return float(np.linalg.norm(c - closest)) > sph.radius
