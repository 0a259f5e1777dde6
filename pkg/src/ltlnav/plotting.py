"""Deterministic figure rendering for plans and training logs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "ltlnav"

import matplotlib.pyplot as plt
import numpy as np

from .workspace import Box, Sphere, Workspace

_SAVE_KW = {"metadata": {"Date": None}, "format": "svg"}


def _draw_shape(ax, shape, **kw):
    match shape:
        case Box(lo=lo, hi=hi):
            ax.add_patch(plt.Rectangle(lo[:2], hi[0] - lo[0], hi[1] - lo[1], **kw))
        case Sphere(center=c, radius=r):
            ax.add_patch(plt.Circle(c[:2], max(r, 0.02), **kw))


def draw_scene(ax, w: Workspace) -> None:
    lo, hi = w.bounds.lo, w.bounds.hi
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    for shape in w.obstacles:
        _draw_shape(ax, shape, facecolor="0.4", edgecolor="black", zorder=2)
    for name, shape in w.regions:
        _draw_shape(ax, shape, facecolor="tab:green", alpha=0.35,
                    edgecolor="tab:green", zorder=1)
        from .workspace import shape_center

        c = shape_center(shape)
        ax.annotate(name, c[:2], ha="center", va="center", zorder=3)
    if w.initial is not None:
        from .workspace import shape_center

        c = shape_center(w.initial)
        ax.plot(c[0], c[1], "k*", markersize=10, zorder=4)


def plot_plan(w: Workspace, plan, decomposition=None, ball_seqs=None,
              tree_points=None, tree_parents=None, path=None) -> plt.Figure:
    """Scene with the planned lasso, optional tree edges and reward balls."""
    fig, ax = plt.subplots(figsize=(6, 6))
    draw_scene(ax, w)
    if tree_points is not None and tree_parents is not None:
        for i, p in enumerate(tree_parents):
            if p >= 0:
                a, b = tree_points[i], tree_points[p]
                ax.plot([a[0], b[0]], [a[1], b[1]], color="0.8",
                        linewidth=0.4, zorder=1)
    if ball_seqs:
        for balls in ball_seqs:
            for c in balls.centers:
                ax.add_patch(plt.Circle(c[:2], balls.radius, fill=False,
                                        edgecolor="tab:orange",
                                        linewidth=0.6, zorder=3))
    if plan is not None:
        pp = np.asarray(plan.prefix_points)
        ax.plot(pp[:, 0], pp[:, 1], "-o", color="tab:blue", markersize=3,
                label="prefix", zorder=5)
        sp = np.asarray(plan.suffix_points)
        if len(sp) > 1:
            ax.plot(sp[:, 0], sp[:, 1], "-s", color="tab:red", markersize=3,
                    label="suffix", zorder=5)
        ax.legend(loc="upper right")
    if path is not None:
        path = np.asarray(path)
        ax.plot(path[:, 0], path[:, 1], color="tab:purple", linewidth=1.0,
                alpha=0.8, zorder=6)
    return fig


def plot_trajectory(w: Workspace, traj: np.ndarray, ball_seqs=None) -> plt.Figure:
    return plot_plan(w, None, ball_seqs=ball_seqs, path=traj)


def smooth(values, window: int = 50) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return v
    kernel = np.ones(min(window, len(v)))
    return np.convolve(v, kernel, mode="valid") / len(kernel)


def plot_learning(logs, labels=None, window: int = 50) -> plt.Figure:
    """Smoothed episode returns, one curve per training log."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, log in enumerate(logs):
        y = smooth(log.returns, window)
        label = labels[i] if labels else f"segment {i}"
        ax.plot(np.arange(len(y)), y, label=label)
    ax.set_xlabel("episode")
    ax.set_ylabel(f"return (window {window})")
    ax.legend()
    fig.tight_layout()
    return fig


def save_figure(fig: plt.Figure, path) -> None:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
