"""Command-line front end: plan, train, eval, plot.

Exit codes: 0 success, 2 configuration/usage, 3 formula syntax,
4 empty automaton (unsatisfiable under the scene's mutex structure),
5 automaton capacity exceeded, 6 planner failure (no path / accepting
state / cycle / plan), 7 unlabeled segment end, 8 ball radius too large,
9 out of bounds, 10 missing artifact file.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import errors as err
from .buchi import Nba
from .config import RunConfig
from .ddpg import (GlobalPolicy, SegmentPolicy, TrainConfig, TrainLog,
                   train_segments)
from .dynamics import DynModel
from .pipeline import plan_task
from .product import DecomposedPlan, LassoPlan
from .rewards import BallSequence, theorem1_threshold
from .workspace import Workspace

EXIT_CODES: list[tuple[type, int]] = [
    (err.NextUnsupportedError, 3),
    (err.LtlSyntaxError, 3),
    (err.EmptyAutomatonError, 4),
    (err.CapacityExceededError, 5),
    (err.NoPathFoundError, 6),
    (err.NoAcceptingReachedError, 6),
    (err.NoCycleFoundError, 6),
    (err.NoPlanFoundError, 6),
    (err.UnlabeledSegmentEndError, 7),
    (err.RadiusTooLargeError, 8),
    (err.OutOfBoundsError, 9),
    (err.ConfigError, 2),
    (FileNotFoundError, 10),
]


def _fail(exc: Exception) -> None:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(code)
    raise exc


def _outdir(cfg: RunConfig) -> Path:
    out = Path(os.environ.get("LTLNAV_OUTDIR", cfg.outdir))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, kind: str, payload: dict) -> None:
    doc = {"version": f"ltlnav-{kind}-v1", **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path, kind: str) -> dict:
    doc = json.loads(path.read_text())
    want = f"ltlnav-{kind}-v1"
    if doc.get("version") != want:
        raise err.ConfigError(f"{path}: expected {want}, got {doc.get('version')}")
    return doc


def _load_config(config_path: str) -> tuple[RunConfig, Workspace]:
    cfg = RunConfig.load(config_path)
    return cfg, Workspace.load(cfg.scene)


def _model_of(cfg: RunConfig, w: Workspace) -> DynModel:
    kw = {"kind": cfg.model, "dt": cfg.dt, "noise_scale": cfg.noise_scale}
    if cfg.action_low is not None:
        kw["action_low"] = tuple(cfg.action_low)
    if cfg.action_high is not None:
        kw["action_high"] = tuple(cfg.action_high)
    return DynModel(**kw)


@click.group()
def main() -> None:
    """Temporal-logic navigation: plan, train, eval, plot."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--dump-nba", is_flag=True, help="Print the pruned automaton.")
def plan(config_path: str, dump_nba: bool) -> None:
    """Compile the formula and search for an optimal lasso plan."""
    try:
        cfg, w = _load_config(config_path)
        out = _outdir(cfg)
        rng = np.random.default_rng(cfg.seed)
        res = plan_task(w, cfg.formula, cfg.eta, cfg.radius,
                        cfg.prefix_iterations, cfg.suffix_iterations, rng,
                        kappa=cfg.kappa)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        _fail(exc)
    _write_json(out / "nba.json", "nba", res.nba.to_dict())
    _write_json(out / "plan.json", "plan", res.plan.to_dict())
    _write_json(out / "decomposition.json", "decomposition",
                res.decomposition.to_dict())
    _write_json(out / "balls.json", "balls",
                {"sequences": [b.to_dict() for b in res.ball_seqs]})
    if dump_nba:
        click.echo(json.dumps(res.nba.to_dict(), indent=2, sort_keys=True))

    from .plotting import plot_plan, save_figure

    fig = plot_plan(w, res.plan, ball_seqs=res.ball_seqs,
                    tree_points=res.prefix_tree.points,
                    tree_parents=res.prefix_tree.parent)
    save_figure(fig, out / "plan.svg")
    n_seg = len(res.decomposition.segments)
    click.echo(f"plan: cost {res.plan.total_cost:.3f}, {n_seg} segments, "
               f"artifacts in {out}")


def _load_plan_artifacts(out: Path) -> tuple[DecomposedPlan, list[BallSequence]]:
    dec = DecomposedPlan.from_dict(_read_json(out / "decomposition.json",
                                              "decomposition"))
    balls_doc = _read_json(out / "balls.json", "balls")
    seqs = [BallSequence.from_dict(d) for d in balls_doc["sequences"]]
    return dec, seqs


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--baseline", type=click.Choice(["drrt", "tl", "ned"]),
              default="drrt", help="Reward used for training.")
@click.option("--resume/--no-resume", default=True,
              help="Skip segments that already have a checkpoint.")
def train(config_path: str, baseline: str, resume: bool) -> None:
    """Train one policy per plan segment; writes checkpoints and CSV logs."""
    try:
        cfg, w = _load_config(config_path)
        out = _outdir(cfg)
        dec, seqs = _load_plan_artifacts(out)
        model = _model_of(cfg, w)
        n_balls = max(len(b) for b in seqs)
        cfg.rewards.validate(n_balls=n_balls, n_bar=cfg.training.max_steps,
                             guarantee=cfg.guarantee)
        segments = dec.segments
        if baseline == "drrt":
            todo = [i for i, _ in enumerate(segments)
                    if not (resume and (out / f"policy_seg{i}.npz").exists())]
            if todo:
                policies, logs = train_segments(
                    w, model, [segments[i] for i in todo],
                    [seqs[i] for i in todo], cfg.training, cfg.rewards,
                    n_workers=cfg.n_workers)
                for i, pol, log in zip(todo, policies, logs):
                    pol.segment_index = i
                    pol.save(out / f"policy_seg{i}.npz")
                    log.write_csv(out / f"train_seg{i}.csv")
            done = len(segments) - len(todo)
            click.echo(f"train: {len(todo)} segments trained, {done} resumed")
        else:
            _train_baseline(cfg, w, model, segments, seqs, baseline, out)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


def _train_baseline(cfg, w, model, segments, seqs, kind, out: Path) -> None:
    """Train the first segment's goal with a comparison reward."""
    from .ddpg import train_subtask
    from .rewards import NegativeDistanceReward, SparseGoalReward

    seg = segments[0]
    goal = w.region_shape(seg.goal_atom)
    scheme_cls = SparseGoalReward if kind == "tl" else NegativeDistanceReward
    scheme = scheme_cls(goal, cfg.rewards, w)
    from .ddpg import segment_start_shape

    ac, log = train_subtask(model, w, scheme, cfg.training,
                            start=segment_start_shape(seg))
    pol = SegmentPolicy(ac.actor, model, scheme.balls, 0, seg.is_suffix)
    pol.save(out / f"policy_{kind}_seg0.npz")
    log.write_csv(out / f"train_{kind}_seg0.csv")
    click.echo(f"train: baseline {kind} segment 0 done "
               f"({log.success_rate():.0%} recent success)")


@main.command("eval")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--trials", default=200, show_default=True)
@click.option("--laps", default=2, show_default=True)
@click.option("--max-steps", default=2000, show_default=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="Write a per-step CSV for one rollout.")
def eval_cmd(config_path: str, trials: int, laps: int, max_steps: int,
             trace_path: str | None) -> None:
    """Evaluate the concatenated policy; writes a JSON report and an SVG."""
    try:
        cfg, w = _load_config(config_path)
        out = _outdir(cfg)
        dec, _ = _load_plan_artifacts(out)
        model = _model_of(cfg, w)
        segments = dec.segments
        policies = []
        for i, _seg in enumerate(segments):
            path = out / f"policy_seg{i}.npz"
            if not path.exists():
                raise FileNotFoundError(f"missing checkpoint {path}")
            policies.append(SegmentPolicy.load(path))
        prefix = [p for p, s in zip(policies, segments) if not s.is_suffix]
        suffix = [p for p, s in zip(policies, segments) if s.is_suffix]
        gp = GlobalPolicy(prefix, suffix)
        rate = gp.evaluate(model, w, trials, max_steps, cfg.seed, laps=laps)
        rng = np.random.default_rng(cfg.seed)
        trace: list | None = [] if trace_path else None
        ok, traj, steps = gp.rollout(model, w, rng, max_steps, laps=laps,
                                     params=cfg.rewards, trace=trace)
        report = {
            "trials": trials, "laps": laps, "max_steps": max_steps,
            "success_rate": rate, "sample_rollout_success": ok,
            "sample_rollout_steps": steps, "segments": len(segments),
        }
        _write_json(out / "report.json", "report", report)
        if trace_path:
            _write_trace(Path(trace_path), trace, model, w)

        from .plotting import plot_trajectory, save_figure

        save_figure(plot_trajectory(w, traj), out / "rollout.svg")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    click.echo(f"eval: success rate {rate:.1%} over {trials} trials "
               f"({laps} suffix laps)")


def _write_trace(path: Path, rows: list, model: DynModel, w: Workspace) -> None:
    import csv

    state_cols = [f"s{i}" for i in range(model.state_dim)]
    act_cols = [f"a{i}" for i in range(model.action_dim)]
    with open(path, "w", newline="") as fh:
        fh.write("# ltlnav-trace-v1\n")
        wr = csv.writer(fh)
        wr.writerow(["t", *state_cols, *act_cols, "reward", "index"])
        wr.writerows(rows)


@main.command()
@click.option("--log", "log_paths", multiple=True, required=True,
              type=click.Path(exists=True), help="TrainLog CSV (repeatable).")
@click.option("--label", "labels", multiple=True, help="Curve label per log.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--window", default=50, show_default=True)
def plot(log_paths: tuple[str, ...], labels: tuple[str, ...], out_path: str,
         window: int) -> None:
    """Render smoothed learning curves from TrainLog CSVs to SVG."""
    try:
        logs = [TrainLog.read_csv(p) for p in log_paths]
        if any(not log.returns for log in logs):
            raise err.ConfigError("empty training log; nothing to plot")
        names = list(labels) if labels else [Path(p).stem for p in log_paths]

        from .plotting import plot_learning, save_figure

        save_figure(plot_learning(logs, names, window), out_path)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    click.echo(f"plot: wrote {out_path}")


if __name__ == "__main__":
    main()
