"""Off-policy actor-critic training of per-segment policies.

One policy is trained per subtask segment against its ball-sequence reward
machine. Trained segment policies are concatenated into a global policy
that runs the prefix once and then cycles the suffix segments.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .dynamics import DynModel, SimState
from .errors import ConfigError
from .nets import Adam, Mlp, Sgd
from .rewards import (BallSequence, ProductObservation, RewardParams,
                      RewardScheme, progression, update_index)
from .workspace import Shape, Sphere, Workspace

CHECKPOINT_VERSION = "ltlnav-policy-v1"
N_LOOKAHEAD = 3


# --- observation encoding -----------------------------------------------------


def obs_dim(model: DynModel, w: Workspace) -> int:
    return model.state_dim + 1 + N_LOOKAHEAD * w.dim


def encode_obs(
    state: SimState,
    obs: ProductObservation,
    balls: BallSequence,
    model: DynModel,
    w: Workspace,
) -> np.ndarray:
    """Normalized model state, progress fraction, next ball-center offsets."""
    lo = np.asarray(w.bounds.lo)
    hi = np.asarray(w.bounds.hi)
    span = hi - lo
    vec = np.asarray(state.vec, dtype=float).copy()
    pos = vec[: w.dim].copy()
    vec[: w.dim] = (pos - lo) / span * 2.0 - 1.0
    n = len(balls.centers)
    frac = obs.index / max(n - 1, 1)
    offsets = []
    for k in range(N_LOOKAHEAD):
        j = min(obs.index + k, n - 1)
        offsets.append((np.asarray(balls.centers[j]) - pos) / span)
    return np.concatenate([vec, [frac], *offsets])


# --- replay buffer ------------------------------------------------------------


class ReplayBuffer:
    """Fixed-capacity ring buffer of (s, a, r, s', done) transitions."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.nxt = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.size = 0
        self.head = 0

    def add(self, s, a, r, s2, done) -> None:
        i = self.head
        self.obs[i] = s
        self.act[i] = a
        self.rew[i] = r
        self.nxt[i] = s2
        self.done[i] = float(done)
        self.head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=batch)
        return (self.obs[idx], self.act[idx], self.rew[idx],
                self.nxt[idx], self.done[idx])


# --- actor-critic -------------------------------------------------------------


@dataclass
class TrainConfig:
    episodes: int = 2000
    max_steps: int = 300
    batch_size: int = 64
    buffer_capacity: int = 100_000
    gamma: float = 0.99
    tau: float = 5e-3
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    hidden: tuple[int, ...] = (64, 64, 64)
    noise_sigma: float = 0.1
    noise_final: float = 0.01
    warmup_steps: int = 1000
    updates_per_step: int = 1
    optimizer: str = "adam"
    eval_every: int = 50
    eval_trials: int = 20
    success_threshold: float = 0.95
    seed: int = 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["hidden"] = list(self.hidden)
        return d

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(int(h) for h in d["hidden"])
        try:
            return TrainConfig(**d)
        except TypeError as exc:
            raise ConfigError(f"bad training config: {exc}") from exc


class ActorCritic:
    def __init__(self, obs_dim: int, model: DynModel, cfg: TrainConfig,
                 rng: np.random.Generator):
        act_dim = model.action_dim
        low = np.asarray(model.action_low)
        high = np.asarray(model.action_high)
        self.act_mid = (high + low) / 2.0
        self.act_half = (high - low) / 2.0
        hid = list(cfg.hidden)
        self.actor = Mlp([obs_dim, *hid, act_dim], out_activation="tanh",
                         out_scale=1.0, rng=rng)
        self.critic = Mlp([obs_dim + act_dim, *hid, 1], rng=rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        make = Adam if cfg.optimizer == "adam" else (lambda lr: Sgd(lr))
        self.actor_opt = make(cfg.actor_lr)
        self.critic_opt = make(cfg.critic_lr)
        self.cfg = cfg

    def act(self, obs: np.ndarray) -> np.ndarray:
        u = self.actor.forward(obs)[0]
        return self.act_mid + self.act_half * u

    def update(self, buf: ReplayBuffer, rng: np.random.Generator) -> tuple[float, float]:
        cfg = self.cfg
        s, a, r, s2, done = buf.sample(cfg.batch_size, rng)
        # critic: fit one-step bootstrapped targets
        a2 = self.act_mid + self.act_half * self.actor_target.forward(s2)
        q2 = self.critic_target.forward(np.hstack([s2, a2]))[:, 0]
        y = r + cfg.gamma * (1.0 - done) * q2
        q, cache = self.critic.forward_cache(np.hstack([s, a]))
        err = q[:, 0] - y
        gq = (2.0 / cfg.batch_size) * err[:, None]
        gw, gb, _ = self.critic.backward(cache, gq)
        self.critic_opt.step(self.critic.params(), gw + gb)
        critic_loss = float(np.mean(err * err))

        # actor: ascend Q(s, pi(s))
        u, a_cache = self.actor.forward_cache(s)
        pa = self.act_mid + self.act_half * u
        qv, c_cache = self.critic.forward_cache(np.hstack([s, pa]))
        gq = np.full((cfg.batch_size, 1), -1.0 / cfg.batch_size)
        _, _, g_in = self.critic.backward(c_cache, gq)
        g_act = g_in[:, s.shape[1]:] * self.act_half
        gw, gb, _ = self.actor.backward(a_cache, g_act)
        self.actor_opt.step(self.actor.params(), gw + gb)
        actor_value = float(np.mean(qv))

        self.actor_target.soft_update_from(self.actor, cfg.tau)
        self.critic_target.soft_update_from(self.critic, cfg.tau)
        return critic_loss, actor_value


# --- policies -----------------------------------------------------------------


class SegmentPolicy:
    """Deterministic trained policy for one segment."""

    def __init__(self, actor: Mlp, model: DynModel, balls: BallSequence,
                 segment_index: int, is_suffix: bool):
        self.actor = actor
        self.model = model
        self.balls = balls
        self.segment_index = segment_index
        self.is_suffix = is_suffix
        low = np.asarray(model.action_low)
        high = np.asarray(model.action_high)
        self.act_mid = (high + low) / 2.0
        self.act_half = (high - low) / 2.0

    def act(self, state: SimState, obs: ProductObservation, w: Workspace) -> np.ndarray:
        x = encode_obs(state, obs, self.balls, self.model, w)
        return self.act_mid + self.act_half * self.actor.forward(x)[0]

    def save(self, path, extra: dict | None = None) -> None:
        arrays = {f"actor_{k}": v for k, v in self.actor.to_arrays().items()}
        arrays["version"] = np.array(CHECKPOINT_VERSION)
        arrays["model"] = np.array(json.dumps(self.model.to_dict(), sort_keys=True))
        arrays["balls"] = np.array(json.dumps(self.balls.to_dict(), sort_keys=True))
        arrays["segment_index"] = np.array(self.segment_index)
        arrays["is_suffix"] = np.array(self.is_suffix)
        if extra:
            arrays["extra"] = np.array(json.dumps(extra, sort_keys=True))
        np.savez(path, **arrays)

    @staticmethod
    def load(path) -> "SegmentPolicy":
        with np.load(path, allow_pickle=False) as d:
            if str(d["version"]) != CHECKPOINT_VERSION:
                raise ConfigError(f"unsupported checkpoint version {d['version']}")
            actor = Mlp.from_arrays(
                {k[len("actor_"):]: d[k] for k in d.files if k.startswith("actor_")})
            model = DynModel.from_dict(json.loads(str(d["model"])))
            balls = BallSequence.from_dict(json.loads(str(d["balls"])))
            return SegmentPolicy(actor, model, balls,
                                 int(d["segment_index"]), bool(d["is_suffix"]))


class WaypointPolicy:
    """Scripted proportional controller chasing the next ball center.

    Serves as a learned-policy stand-in when checking evaluation plumbing.
    """

    def __init__(self, model: DynModel, balls: BallSequence,
                 segment_index: int = 0, is_suffix: bool = False, gain: float = 4.0):
        self.model = model
        self.balls = balls
        self.segment_index = segment_index
        self.is_suffix = is_suffix
        self.gain = gain

    def act(self, state: SimState, obs: ProductObservation, w: Workspace) -> np.ndarray:
        m = self.model
        target = np.asarray(self.balls.centers[min(obs.index,
                                                   len(self.balls.centers) - 1)])
        pos = state.vec[: w.dim]
        delta = target - pos
        low = np.asarray(m.action_low)
        high = np.asarray(m.action_high)
        match m.kind:
            case "point":
                u = self.gain * delta
            case "car":
                heading = state.vec[2]
                desired = np.arctan2(delta[1], delta[0])
                err = (desired - heading + np.pi) % (2 * np.pi) - np.pi
                v = high[0] * max(np.cos(err), 0.1)
                u = np.array([v, self.gain * err])
            case "quad":
                vel = state.vec[3:6]
                u = self.gain * delta - 2.0 * np.sqrt(self.gain) * vel
            case _:
                raise ConfigError(f"unknown model kind {m.kind!r}")
        return np.clip(u, low, high)


class GlobalPolicy:
    """Prefix segments once, then suffix segments cycled forever."""

    def __init__(self, prefix: list, suffix: list):
        if not prefix and not suffix:
            raise ConfigError("global policy needs at least one segment policy")
        self.prefix = list(prefix)
        self.suffix = list(suffix)

    def rollout(self, model: DynModel, w: Workspace, rng: np.random.Generator,
                max_steps: int, laps: int = 2, start: Shape | None = None,
                params: RewardParams | None = None, trace: list | None = None):
        """Run the segment chain; returns (success, trajectory, steps_used).

        With ``trace`` a list, appends per-step rows
        (t, *state, *action, reward, ball index)."""
        from .rewards import BallReward

        chain = self.prefix + self.suffix * (laps if self.suffix else 0)
        state = dynamics.reset(model, w, rng, start=start)
        traj = [state.vec[: w.dim].copy()]
        steps = 0
        for pol in chain:
            scheme = BallReward(pol.balls, params or RewardParams(), w)
            obs = ProductObservation()
            done = False
            while steps < max_steps:
                a = pol.act(state, obs, w)
                state = dynamics.step(model, state, a, rng)
                traj.append(state.vec[: w.dim].copy())
                steps += 1
                pos = state.vec[: w.dim]
                r, obs, flags = scheme.step(obs, pos)
                if trace is not None:
                    trace.append([state.t, *state.vec, *a, r, obs.index])
                if not w.bounds.contains(pos) or flags["collision"]:
                    return False, np.array(traj), steps
                if flags["goal"]:
                    done = True
                    break
            if not done:
                return False, np.array(traj), steps
        return True, np.array(traj), steps

    def evaluate(self, model: DynModel, w: Workspace, trials: int,
                 max_steps: int, seed: int, laps: int = 2,
                 start: Shape | None = None) -> float:
        wins = 0
        for t in range(trials):
            rng = np.random.default_rng(seed + t)
            ok, _, _ = self.rollout(model, w, rng, max_steps, laps=laps,
                                    start=start)
            wins += int(ok)
        return wins / trials


# --- training loop ------------------------------------------------------------

CSV_HEADER = "# ltlnav-trainlog-v1"


@dataclass
class TrainLog:
    episodes: list[int] = field(default_factory=list)
    returns: list[float] = field(default_factory=list)
    steps: list[int] = field(default_factory=list)
    successes: list[int] = field(default_factory=list)
    final_index: list[int] = field(default_factory=list)
    episode_time: list[float] = field(default_factory=list)
    eval_episodes: list[int] = field(default_factory=list)
    eval_success: list[float] = field(default_factory=list)
    wall_time: float = 0.0

    def success_rate(self, window: int = 100) -> float:
        tail = self.successes[-window:]
        return sum(tail) / len(tail) if tail else 0.0

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + f" wall_time={self.wall_time!r}\n")
            wr = csv.writer(fh)
            wr.writerow(["episode", "return", "steps", "success",
                         "final_index", "episode_time"])
            for row in zip(self.episodes, self.returns, self.steps,
                           self.successes, self.final_index, self.episode_time):
                wr.writerow(row)
            for ep, rate in zip(self.eval_episodes, self.eval_success):
                fh.write(f"# eval,{ep},{rate!r}\n")

    @staticmethod
    def read_csv(path) -> "TrainLog":
        import csv

        log = TrainLog()
        rows = []
        with open(path) as fh:
            for line in fh:
                if line.startswith("# eval,"):
                    _, ep, rate = line[2:].strip().split(",")
                    log.eval_episodes.append(int(ep))
                    log.eval_success.append(float(rate))
                elif line.startswith(CSV_HEADER):
                    if "wall_time=" in line:
                        log.wall_time = float(line.split("wall_time=")[1])
                elif line.startswith("#"):
                    continue
                else:
                    rows.append(line)
        for row in csv.DictReader(rows):
            log.episodes.append(int(row["episode"]))
            log.returns.append(float(row["return"]))
            log.steps.append(int(row["steps"]))
            log.successes.append(int(row["success"]))
            log.final_index.append(int(row["final_index"]))
            log.episode_time.append(float(row["episode_time"]))
        return log


def run_episode(
    model: DynModel,
    w: Workspace,
    ac: ActorCritic,
    scheme: RewardScheme,
    buf: ReplayBuffer | None,
    cfg: TrainConfig,
    rng: np.random.Generator,
    sigma: float,
    start: Shape | None,
    learn: bool = True,
) -> tuple[float, int, bool, int]:
    balls = scheme.balls
    state = dynamics.reset(model, w, rng, start=start)
    obs = ProductObservation()
    enc = encode_obs(state, obs, balls, model, w)
    total = 0.0
    low = np.asarray(model.action_low)
    high = np.asarray(model.action_high)
    success = False
    step_count = 0
    for step_count in range(1, cfg.max_steps + 1):
        if learn and buf.size < cfg.warmup_steps:
            a = rng.uniform(low, high)
        else:
            a = ac.act(enc)
            if sigma > 0:
                a = np.clip(a + rng.normal(0.0, sigma * (high - low) / 2.0),
                            low, high)
        state2 = dynamics.step(model, state, a, rng)
        pos2 = state2.vec[: w.dim]
        r, obs2, flags = scheme.step(obs, pos2)
        done = flags["collision"] or flags["goal"]
        enc2 = encode_obs(state2, obs2, balls, model, w)
        if learn:
            buf.add(enc, a, r, enc2, done)
            if buf.size >= max(cfg.warmup_steps, cfg.batch_size):
                for _ in range(cfg.updates_per_step):
                    ac.update(buf, rng)
        total += r
        state, obs, enc = state2, obs2, enc2
        if done:
            success = flags["goal"]
            break
    return total, step_count, success, obs.index


def train_subtask(
    model: DynModel,
    w: Workspace,
    scheme: RewardScheme,
    cfg: TrainConfig,
    start: Shape | None = None,
    progress=None,
) -> tuple[ActorCritic, TrainLog]:
    """Train one segment policy; stops early once evals clear the threshold."""
    rng = np.random.default_rng(cfg.seed)
    dim = obs_dim(model, w)
    ac = ActorCritic(dim, model, cfg, rng)
    buf = ReplayBuffer(cfg.buffer_capacity, dim, model.action_dim)
    log = TrainLog()
    t0 = time.monotonic()
    decay = (cfg.noise_final / cfg.noise_sigma) ** (1.0 / max(cfg.episodes - 1, 1))
    for ep in range(cfg.episodes):
        te = time.monotonic()
        sigma = cfg.noise_sigma * decay**ep
        ret, steps, ok, idx = run_episode(model, w, ac, scheme, buf, cfg, rng,
                                          sigma, start)
        log.episodes.append(ep)
        log.returns.append(ret)
        log.steps.append(steps)
        log.successes.append(int(ok))
        log.final_index.append(idx)
        log.episode_time.append(time.monotonic() - te)
        if progress:
            progress(ep, ret, ok)
        if (ep + 1) % cfg.eval_every == 0:
            wins = 0
            for t in range(cfg.eval_trials):
                erng = np.random.default_rng(cfg.seed * 100_003 + ep * 97 + t)
                _, _, w_ok, _ = run_episode(model, w, ac, scheme, buf, cfg,
                                            erng, 0.0, start, learn=False)
                wins += int(w_ok)
            rate = wins / cfg.eval_trials
            log.eval_episodes.append(ep)
            log.eval_success.append(rate)
            if rate >= cfg.success_threshold:
                break
    log.wall_time = time.monotonic() - t0
    return ac, log


def eval_policy(
    model: DynModel,
    w: Workspace,
    ac: ActorCritic,
    scheme: RewardScheme,
    cfg: TrainConfig,
    start: Shape | None,
    trials: int,
    seed: int,
) -> float:
    wins = 0
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        _, _, ok, _ = run_episode(model, w, ac, scheme, None, cfg, rng, 0.0,
                                  start, learn=False)
        wins += int(ok)
    return wins / trials


# --- multi-segment orchestration ----------------------------------------------


def segment_start_shape(segment) -> Sphere:
    return Sphere(center=tuple(float(v) for v in segment.points[0]), radius=0.0)


def _train_one(args) -> tuple[int, dict, dict]:
    """Picklable worker: trains one segment and returns arrays + log rows."""
    (w_dict, model_dict, balls_dict, cfg_dict, params_dict,
     seg_index, start) = args
    from .rewards import BallReward

    w = Workspace.from_dict(w_dict)
    model = DynModel.from_dict(model_dict)
    balls = BallSequence.from_dict(balls_dict)
    cfg = TrainConfig.from_dict(cfg_dict)
    params = RewardParams.from_dict(params_dict)
    scheme = BallReward(balls, params, w)
    start_shape = Sphere(center=tuple(start), radius=0.0)
    ac, log = train_subtask(model, w, scheme, cfg, start=start_shape)
    return seg_index, ac.actor.to_arrays(), log.__dict__


def train_segments(
    w: Workspace,
    model: DynModel,
    segments: list,
    ball_seqs: list[BallSequence],
    cfg: TrainConfig,
    params: RewardParams,
    n_workers: int = 1,
) -> tuple[list[SegmentPolicy], list[TrainLog]]:
    """Train every segment policy, optionally across worker processes."""
    jobs = []
    for i, (seg, balls) in enumerate(zip(segments, ball_seqs)):
        seg_cfg = TrainConfig.from_dict(cfg.to_dict())
        seg_cfg.seed = cfg.seed + 7919 * i
        jobs.append((w.to_dict(), model.to_dict(), balls.to_dict(),
                     seg_cfg.to_dict(), params.to_dict(), i,
                     tuple(float(v) for v in seg.points[0])))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_train_one, jobs))
    else:
        results = [_train_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    policies, logs = [], []
    for (i, arrays, log_d), seg, balls in zip(results, segments, ball_seqs):
        actor = Mlp.from_arrays(arrays)
        policies.append(SegmentPolicy(actor, model, balls, i, seg.is_suffix))
        log = TrainLog()
        log.__dict__.update(log_d)
        logs.append(log)
    return policies, logs
