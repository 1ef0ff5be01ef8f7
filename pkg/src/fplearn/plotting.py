"""SVG figures for run reports.

Figures are built on a bare ``Figure`` (no pyplot state) and saved with a fixed
hash salt and no date stamp, so identical inputs give identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional, Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

SVG_RC = {
    "svg.hashsalt": "fplearn",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.linewidth": 0.8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
SVG_METADATA = {"Date": None}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata=SVG_METADATA)
    return path


def write_svg_scatter(points, path, boxes: Iterable[tuple] = (), diagonal: bool = True,
                      labels: Sequence[str] = ("x_1", "x_2"), title: Optional[str] = None) -> Path:
    """Scatter of 2-D priors with optional square outlines and the x1 = x2 line.

    ``boxes`` holds ``(lo, hi)`` corner pairs, drawn in red.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2) if np.size(points) else np.zeros((0, 2))
    if np.size(points) and np.asarray(points).shape[-1] != 2:
        raise ValueError("scatter plots need 2-D points")
    boxes = [(np.asarray(lo, float), np.asarray(hi, float)) for lo, hi in boxes]

    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(4.5, 4.5))
        ax = fig.add_subplot()
        if len(pts):
            ax.scatter(pts[:, 0], pts[:, 1], s=2, c="black", linewidths=0, alpha=0.6)
        for lo, hi in boxes:
            ax.add_patch(Rectangle(tuple(lo), *(hi - lo), fill=False, edgecolor="red", lw=1.2))
        extent = [p for p in (pts, *(np.vstack(b) for b in boxes)) if len(p)]
        if extent:
            allp = np.vstack(extent)
            mid = (allp.min(axis=0) + allp.max(axis=0)) / 2
            half = 0.55 * max(float(np.ptp(allp, axis=0).max()), 1e-3)
            ax.set_xlim(mid[0] - half, mid[0] + half)
            ax.set_ylim(mid[1] - half, mid[1] + half)
        if diagonal:
            a = min(ax.get_xlim()[0], ax.get_ylim()[0])
            b = max(ax.get_xlim()[1], ax.get_ylim()[1])
            ax.plot([a, b], [a, b], color="0.5", lw=0.8, ls="--", scalex=False, scaley=False)
        ax.set_aspect("equal", adjustable="box")
        ax.set_xlabel(labels[0])
        ax.set_ylabel(labels[1])
        if title:
            ax.set_title(title)
        fig.tight_layout()
    return _save(fig, path)


def write_svg_series(times, panels: dict, path, labels: Sequence[str] = ()) -> Path:
    """One stacked panel per entry of ``panels`` ({title: (T, n) array}) against time."""
    times = np.asarray(times, dtype=float)
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(6, 2.2 * len(panels)))
        axes = fig.subplots(len(panels), 1, sharex=True, squeeze=False)[:, 0]
        for ax, (title, values) in zip(axes, panels.items()):
            values = np.asarray(values, dtype=float).reshape(len(times), -1)
            for i in range(values.shape[1]):
                name = labels[i] if i < len(labels) else f"{i + 1}"
                ax.plot(times, values[:, i], lw=1.0, label=name)
            ax.set_ylabel(title)
            ax.legend(loc="best", frameon=False, fontsize=7)
        axes[-1].set_xlabel("t")
        fig.tight_layout()
    return _save(fig, path)
