"""Matplotlib figures written next to the CSV outputs.

Figures are built on bare :class:`matplotlib.figure.Figure` objects (no
pyplot state), so rendering works headless and from worker threads.
"""

from __future__ import annotations

import io

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .grid import atomic_write_bytes
from .losses import LossConfig, focal_l1_map, stable_focal_l1_map

__all__ = ["plot_loss_curves", "plot_ablation", "plot_focal_slice", "plot_sauna_profile"]

# metadata-free PNGs keep figure bytes stable across runs
_PNG_META = {"Software": None}


def _save(fig: Figure, path) -> None:
    FigureCanvasAgg(fig)
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=120, bbox_inches="tight", metadata=_PNG_META)
    atomic_write_bytes(path, buf.getvalue())


def plot_loss_curves(curves: dict[str, list[float]], path) -> None:
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    for name, curve in curves.items():
        ax.plot(np.arange(len(curve)), curve, label=name, lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("training objective")
    ax.set_yscale("log")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, frameon=False)
    _save(fig, path)


def plot_ablation(rows: list[dict], path) -> None:
    """Horizontal bars of mean test IoU with +-1 SE whiskers."""
    names = [r["variant"] for r in rows]
    means = np.array([r["iou_mean"] for r in rows])
    ses = np.array([r["iou_se"] for r in rows])
    fig = Figure(figsize=(6, 0.5 * len(rows) + 1.2))
    ax = fig.add_subplot()
    y = np.arange(len(rows))
    ax.barh(y, means, xerr=ses, color="#4c72b0", ecolor="k", capsize=3)
    ax.set_yticks(y, names)
    ax.invert_yaxis()
    ax.set_xlim(0, 1.05)
    ax.set_xlabel("test IoU (mean +- SE)")
    for yi, m, se in zip(y, means, ses):
        ax.text(min(m + se + 0.02, 0.92), yi, f"{m:.3f}", va="center", fontsize=8)
    _save(fig, path)


def plot_focal_slice(path, target: float = 0.5, gamma: float = 1.0) -> None:
    """Per-pixel original vs. stable Focal-L1 along the prediction axis."""
    xs = np.linspace(-1, 1, 2001)
    ys = np.full_like(xs, target)
    cfg = LossConfig(gamma=gamma)
    fig = Figure(figsize=(5, 3.5))
    ax = fig.add_subplot()
    ax.plot(xs, focal_l1_map(xs, ys, cfg), label="Focal-L1")
    ax.plot(xs, stable_focal_l1_map(xs, ys, cfg), label="Stable Focal-L1")
    ax.axvline(target, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("prediction")
    ax.set_ylabel("loss")
    ax.set_title(f"target = {target:g}, gamma = {gamma:g}", fontsize=9)
    ax.legend(frameon=False)
    _save(fig, path)


def plot_sauna_profile(mask_row, boundary_row, thickness_row, sauna_row, path) -> None:
    """One image row: the 0-1 label and the three signed maps stacked."""
    panels = [("GT", mask_row), ("boundary", boundary_row), ("thickness", thickness_row), ("SAUNA", sauna_row)]
    fig = Figure(figsize=(7, 6))
    axes = fig.subplots(len(panels), 1, sharex=True)
    x = np.arange(len(mask_row))
    for ax, (label, row) in zip(axes, panels):
        ax.step(x, row, where="mid", lw=1.2)
        ax.axhline(0, color="gray", lw=0.5)
        ax.set_ylabel(label, fontsize=8)
    axes[-1].set_xlabel("column")
    _save(fig, path)
