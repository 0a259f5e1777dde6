"""Analytic black-box dynamics and the episode loop around them.

Three models: a velocity-controlled point mass, a kinematic car, and a 3D
double integrator. The learner only ever calls reset/step/project, so the
dynamics stay a black box to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .workspace import Point, Shape, Sphere, Workspace, shape_center

MODEL_KINDS = ("point", "car", "quad")


@dataclass
class DynModel:
    kind: str = "point"
    dt: float = 0.05
    action_low: tuple[float, ...] = (-1.0, -1.0)
    action_high: tuple[float, ...] = (1.0, 1.0)
    noise_scale: float = 0.0
    workspace_dim: int = 2

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if len(self.action_low) != len(self.action_high):
            raise ConfigError("action bound dimension mismatch")
        if self.kind == "quad":
            self.workspace_dim = 3

    @property
    def action_dim(self) -> int:
        return len(self.action_low)

    @property
    def state_dim(self) -> int:
        if self.kind == "point":
            return self.workspace_dim
        if self.kind == "car":
            return 3
        return 6  # quad: position + velocity

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dt": self.dt,
            "action_low": list(self.action_low),
            "action_high": list(self.action_high),
            "noise_scale": self.noise_scale,
            "workspace_dim": self.workspace_dim,
        }

    @staticmethod
    def from_dict(d: dict) -> "DynModel":
        return DynModel(
            kind=d.get("kind", "point"),
            dt=float(d.get("dt", 0.05)),
            action_low=tuple(d.get("action_low", (-1.0, -1.0))),
            action_high=tuple(d.get("action_high", (1.0, 1.0))),
            noise_scale=float(d.get("noise_scale", 0.0)),
            workspace_dim=int(d.get("workspace_dim", 2)),
        )


@dataclass
class SimState:
    vec: np.ndarray
    t: int = 0


def clamp_action(m: DynModel, a: np.ndarray) -> np.ndarray:
    return np.clip(
        np.asarray(a, dtype=float),
        np.asarray(m.action_low), np.asarray(m.action_high),
    )


def step(m: DynModel, s: SimState, a, rng: np.random.Generator | None = None) -> SimState:
    """Explicit Euler integration of one control period."""
    a = clamp_action(m, a)
    v = s.vec
    if m.kind == "point":
        nxt = v + a * m.dt
    elif m.kind == "car":
        speed, steer_rate = a
        x, y, theta = v
        nxt = np.array([
            x + speed * math.cos(theta) * m.dt,
            y + speed * math.sin(theta) * m.dt,
            theta + steer_rate * m.dt,
        ])
    else:  # quad double integrator
        pos, vel = v[:3], v[3:]
        nxt = np.concatenate([pos + vel * m.dt, vel + a * m.dt])
    if m.noise_scale > 0.0 and rng is not None:
        nxt = nxt + rng.normal(0.0, m.noise_scale, size=nxt.shape)
    return SimState(vec=nxt, t=s.t + 1)


def project(m: DynModel, s: SimState) -> Point:
    """Workspace coordinates of the state (positions only)."""
    if m.kind == "point":
        return s.vec.copy()
    if m.kind == "car":
        return s.vec[:2].copy()
    return s.vec[:3].copy()


def sample_in_shape(shape: Shape, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample inside a shape by rejection from its bounding box."""
    if isinstance(shape, Sphere) and shape.radius == 0.0:
        return np.asarray(shape.center, dtype=float)
    if isinstance(shape, Sphere):
        c = np.asarray(shape.center, dtype=float)
        while True:
            u = rng.uniform(-1.0, 1.0, size=c.shape[0])
            if float(u @ u) <= 1.0:
                return c + shape.radius * u
    lo, hi = np.asarray(shape.lo, dtype=float), np.asarray(shape.hi, dtype=float)
    return lo + rng.random(lo.shape[0]) * (hi - lo)


def reset(m: DynModel, w: Workspace, rng: np.random.Generator,
          start: Shape | None = None) -> SimState:
    """Initial state sampled in the start region; non-position components zero."""
    region = start if start is not None else w.initial
    if region is None:
        raise ConfigError("no initial region configured")
    pos = sample_in_shape(region, rng)
    if m.kind == "point":
        vec = pos
    elif m.kind == "car":
        vec = np.concatenate([pos[:2], [0.0]])
    else:
        vec = np.concatenate([pos[:3], np.zeros(3)])
    return SimState(vec=vec, t=0)


class Env:
    """cl-MDP episode loop: reset, step, projection, label emission."""

    def __init__(self, model: DynModel, w: Workspace, seed: int = 0,
                 start: Shape | None = None):
        self.model = model
        self.w = w
        self.start = start
        self.rng = np.random.default_rng(seed)
        self.state: SimState | None = None

    def reset(self) -> SimState:
        self.state = reset(self.model, self.w, self.rng, self.start)
        return self.state

    def step(self, a) -> SimState:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        self.state = step(self.model, self.state, a, self.rng)
        return self.state

    def project(self) -> Point:
        return project(self.model, self.state)

    def label(self) -> frozenset[str]:
        x = self.project()
        if not self.w.bounds.contains(np.asarray(x)):
            return frozenset({self.w.obstacle_atom})
        return self.w.label_of(x)
