"""Progression rewards built from r-balls along a planned path.

The ball sequence carries the remaining-path-length value of each center.
The progression value of a workspace point is the remaining distance of
the best ball containing it (infinity outside all balls); the reward pays
a small bonus for strict progress, a boosted bonus at the destination
ball, and a penalty inside obstacles, with obstacle priority. Tracking
the best-visited ball index restores the Markov property.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RadiusTooLargeError
from .workspace import Point, Shape, Sphere, Workspace, dist, shape_center

INF = math.inf


@dataclass(frozen=True)
class RewardParams:
    r_plus: float = 5.0
    r_plusplus: float = 200.0
    r_minus: float = -100.0
    gamma: float = 0.99

    def validate(self, n_balls: int | None = None, n_bar: int | None = None,
                 guarantee: bool = False) -> None:
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError(f"gamma must be in (0, 1): {self.gamma}")
        if not (self.r_minus < 0.0 < self.r_plus < self.r_plusplus):
            raise ConfigError(
                "reward constants must satisfy R- < 0 < R+ < R++: "
                f"{self.r_minus}, {self.r_plus}, {self.r_plusplus}"
            )
        if guarantee:
            if n_balls is None or n_bar is None:
                raise ConfigError("guarantee mode needs the ball count and the step cap")
            thr = theorem1_threshold(self.r_plus, self.gamma, n_balls, n_bar)
            if self.r_plusplus < thr:
                raise ConfigError(
                    f"R++ = {self.r_plusplus} below the guarantee threshold {thr:.6g}"
                )

    def to_dict(self) -> dict:
        return {
            "r_plus": self.r_plus,
            "r_plusplus": self.r_plusplus,
            "r_minus": self.r_minus,
            "gamma": self.gamma,
        }

    @staticmethod
    def from_dict(d: dict) -> "RewardParams":
        return RewardParams(**d)


def theorem1_threshold(r_plus: float, gamma: float, n_p: int, n_bar: int) -> float:
    """Minimum destination reward making goal-reaching returns dominate the
    best goal-avoiding return: R+ (1 - gamma^Np) / gamma^n_bar."""
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must be in (0, 1)")
    if n_p < 1 or n_bar < 0:
        raise ValueError("need n_p >= 1 and n_bar >= 0")
    return r_plus * (1.0 - gamma ** n_p) / (gamma ** n_bar)


@dataclass
class BallSequence:
    """Non-overlapping adjacent r-balls along a path, remaining length per center."""

    centers: np.ndarray     # (m, d)
    radius: float
    remaining: np.ndarray   # (m,), strictly decreasing, last value 0
    segment_id: int = 0

    def __post_init__(self):
        if self.remaining[-1] != 0.0:
            raise ValueError("final ball must carry remaining distance 0")
        if np.any(np.diff(self.remaining) >= 0) and len(self.remaining) > 1:
            raise ValueError("remaining distances must be strictly decreasing")
        gaps = np.linalg.norm(np.diff(self.centers, axis=0), axis=1)
        if np.any(gaps < 2.0 * self.radius - 1e-9):
            raise ValueError("adjacent balls overlap")

    def __len__(self) -> int:
        return self.centers.shape[0]

    def contains(self, i: int, x: Point) -> bool:
        return dist(self.centers[i], x) <= self.radius

    def balls_containing(self, x: Point) -> list[int]:
        d = np.linalg.norm(self.centers - np.asarray(x), axis=1)
        return [int(i) for i in np.nonzero(d <= self.radius)[0]]

    @property
    def goal_center(self) -> np.ndarray:
        return self.centers[-1]

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "segment_id": self.segment_id,
            "radius": self.radius,
            "centers": [[float(v) for v in c] for c in self.centers],
            "remaining": [float(r) for r in self.remaining],
        }

    @staticmethod
    def from_dict(d: dict) -> "BallSequence":
        return BallSequence(
            centers=np.array(d["centers"], dtype=float),
            radius=d["radius"],
            remaining=np.array(d["remaining"], dtype=float),
            segment_id=d.get("segment_id", 0),
        )


def build_balls(path, r: float, eta: float, segment_id: int = 0) -> BallSequence:
    """Ball per path waypoint; centers closer than one diameter to the next
    kept center are dropped so adjacent balls stay disjoint. The final
    waypoint is always kept. ``path`` needs ``points`` and ``remaining``.
    """
    if r <= 0:
        raise ConfigError(f"ball radius must be positive: {r}")
    if r > eta / 2.0 + 1e-12:
        raise RadiusTooLargeError(
            f"r = {r} exceeds eta / 2 = {eta / 2.0}; adjacent balls could intersect"
        )
    pts = np.asarray(path.points, dtype=float)
    rem = np.asarray(path.remaining, dtype=float)
    keep = [len(pts) - 1]
    for i in range(len(pts) - 2, -1, -1):
        if dist(pts[i], pts[keep[-1]]) >= 2.0 * r - 1e-12:
            keep.append(i)
    keep.reverse()
    return BallSequence(
        centers=pts[keep].copy(), radius=float(r), remaining=rem[keep].copy(),
        segment_id=segment_id,
    )


def progression(x: Point, balls: BallSequence) -> float:
    """Remaining distance of the best ball containing x, infinity outside."""
    hit = balls.balls_containing(x)
    if not hit:
        return INF
    return float(min(balls.remaining[i] for i in hit))


@dataclass(frozen=True)
class ProductObservation:
    """Best-visited ball index; ``visited`` is False before any ball entry,
    in which case the historical minimum progression is infinite."""

    index: int = 0
    visited: bool = False

    def d_min(self, balls: BallSequence) -> float:
        return float(balls.remaining[self.index]) if self.visited else INF


def update_index(obs: ProductObservation, x: Point, balls: BallSequence) -> ProductObservation:
    """Advance the index when x sits in a strictly closer ball; never regress."""
    hit = balls.balls_containing(x)
    if not hit:
        return obs
    j = min(hit, key=lambda i: balls.remaining[i])
    if not obs.visited or balls.remaining[j] < balls.remaining[obs.index]:
        return ProductObservation(index=j, visited=True)
    return obs


def reward(
    obs: ProductObservation,
    next_x: Point,
    balls: BallSequence,
    params: RewardParams,
    w: Workspace | None,
) -> tuple[float, ProductObservation]:
    """One reward-machine step; obstacle penalty takes priority, then the
    destination bonus, then strict progress against the visited history."""
    next_obs = update_index(obs, next_x, balls)
    if w is not None and w.in_obstacle(next_x):
        return params.r_minus, next_obs
    d = progression(next_x, balls)
    if d == 0.0:
        return params.r_plusplus, next_obs
    if d < obs.d_min(balls):
        return params.r_plus, next_obs
    return 0.0, next_obs


# --- reward schemes for the learner ------------------------------------------

class RewardScheme:
    """Stateless per-step reward evaluator; observation threads through."""

    def initial_observation(self) -> ProductObservation:
        return ProductObservation()

    def step(self, obs: ProductObservation, x: Point):
        raise NotImplementedError


class BallReward(RewardScheme):
    """The progression scheme over one ball sequence (D-RRT* and G-RRT*)."""

    def __init__(self, balls: BallSequence, params: RewardParams, w: Workspace):
        self.balls = balls
        self.params = params
        self.w = w

    def step(self, obs, x):
        r, next_obs = reward(obs, x, self.balls, self.params, self.w)
        collision = self.w.in_obstacle(x)
        goal = (not collision) and progression(x, self.balls) == 0.0
        return r, next_obs, {"collision": collision, "goal": goal}


def _goal_ball(goal: Shape) -> BallSequence:
    """One-ball sequence at the goal center, used for observation encoding."""
    c = shape_center(goal)
    r = goal.radius if isinstance(goal, Sphere) else float(
        min(np.asarray(goal.hi) - np.asarray(goal.lo)) / 2.0)
    return BallSequence(centers=np.array([c], dtype=float), radius=max(r, 1e-6),
                        remaining=np.array([0.0]))


class SparseGoalReward(RewardScheme):
    """TL baseline: destination bonus at the goal region, obstacle penalty,
    zero elsewhere."""

    def __init__(self, goal: Shape, params: RewardParams, w: Workspace):
        self.goal = goal
        self.params = params
        self.w = w
        self.balls = _goal_ball(goal)

    def step(self, obs, x):
        collision = self.w.in_obstacle(x)
        if collision:
            return self.params.r_minus, obs, {"collision": True, "goal": False}
        if self.goal.contains(np.asarray(x)):
            return self.params.r_plusplus, obs, {"collision": False, "goal": True}
        return 0.0, obs, {"collision": False, "goal": False}


class NegativeDistanceReward(RewardScheme):
    """NED baseline: negative Euclidean distance to the goal center per step,
    with the terminal obstacle/goal constants on top."""

    def __init__(self, goal: Shape, params: RewardParams, w: Workspace):
        self.goal = goal
        self.center = shape_center(goal)
        self.params = params
        self.w = w
        self.balls = _goal_ball(goal)

    def step(self, obs, x):
        collision = self.w.in_obstacle(x)
        if collision:
            return self.params.r_minus, obs, {"collision": True, "goal": False}
        if self.goal.contains(np.asarray(x)):
            return self.params.r_plusplus, obs, {"collision": False, "goal": True}
        return -dist(x, self.center), obs, {"collision": False, "goal": False}


def baseline_reward(
    kind: str,
    obs: ProductObservation,
    x: Point,
    params: RewardParams,
    w: Workspace,
    goal: Shape | None = None,
    global_balls: BallSequence | None = None,
) -> tuple[float, ProductObservation]:
    """Single-step baseline rewards: TL (sparse), NED (negative distance),
    GRRT (progression over the undecomposed global ball sequence)."""
    kind = kind.upper()
    if kind == "TL":
        if goal is None:
            raise ConfigError("TL baseline needs the goal shape")
        r, obs2, _ = SparseGoalReward(goal, params, w).step(obs, x)
        return r, obs2
    if kind == "NED":
        if goal is None:
            raise ConfigError("NED baseline needs the goal shape")
        r, obs2, _ = NegativeDistanceReward(goal, params, w).step(obs, x)
        return r, obs2
    if kind == "GRRT":
        if global_balls is None:
            raise ConfigError("GRRT baseline needs the global ball sequence")
        return reward(obs, x, global_balls, params, w)
    raise ConfigError(f"unknown baseline kind: {kind!r}")
