"""End-to-end orchestration: formula to plan, segments, and ball sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .buchi import Nba, compile_nba, prune_nba
from .errors import (NoAcceptingReachedError, NoCycleFoundError,
                     NoPlanFoundError)
from .ltl import normalize, parse_ltl
from .product import (DecomposedPlan, LassoPlan, ProductTree, decompose,
                      extract_lasso, grow_prefix_tree)
from .rewards import BallSequence, build_balls
from .workspace import Workspace, shape_center


def compile_task(formula: str, w: Workspace) -> Nba:
    """Parse and translate the formula, pruned against the scene's mutex
    structure."""
    ast = normalize(parse_ltl(formula))
    return prune_nba(compile_nba(ast), w.mutex_groups())


@dataclass
class PlanResult:
    nba: Nba
    plan: LassoPlan
    decomposition: DecomposedPlan
    ball_seqs: list[BallSequence]
    prefix_tree: ProductTree


def plan_task(
    w: Workspace,
    formula: str,
    eta: float,
    r: float,
    prefix_iterations: int,
    suffix_iterations: int,
    rng: np.random.Generator,
    kappa: float | None = None,
) -> PlanResult:
    """Compile, search the product space, decompose, and place reward balls."""
    nba = compile_task(formula, w)
    x0 = shape_center(w.initial)
    best: tuple[LassoPlan, ProductTree] | None = None
    last_err: Exception | None = None
    for q0 in sorted(nba.initial):
        try:
            tree, goals = grow_prefix_tree(
                w, nba, (x0, q0), prefix_iterations, rng, eta, kappa)
            plan = extract_lasso(w, nba, tree, goals, suffix_iterations, rng)
        except (NoAcceptingReachedError, NoCycleFoundError,
                NoPlanFoundError) as exc:
            last_err = exc
            continue
        if best is None or plan.total_cost < best[0].total_cost:
            best = (plan, tree)
    if best is None:
        raise last_err if last_err else NoPlanFoundError("no plan found")
    plan, tree = best
    dec = decompose(plan, w)
    ball_seqs = [build_balls(seg, r, eta, segment_id=seg.index)
                 for seg in dec.segments]
    return PlanResult(nba, plan, dec, ball_seqs, tree)
