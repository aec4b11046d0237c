"""Static rendering: an SVG overview plus matplotlib report figures.

The SVG layers the target density (display-normalized so its maximum is
fully dark), obstacles, one polyline per robot, and start/goal markers.
The matplotlib figures summarize metric decay and compare the target
density against the achieved coverage.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle as MplCircle
from matplotlib.patches import Polygon as MplPolygon

from .grid import DensityGrid
from .planner import CircleObstacle, PolygonObstacle

ROBOT_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def _svg_header(width: float, height: float) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{width:.6g}" height="{height:.6g}" '
            f'viewBox="0 0 {width:.6g} {height:.6g}">')


def render_svg(xi: DensityGrid, trajectories=(), obstacles=(), starts=(),
               goal=None, pixels: float = 640.0) -> str:
    """Compose the overview SVG document and return it as a string.

    trajectories is a sequence of (n, 2) position arrays, one per robot.
    Display intensity is value / max(value); computations elsewhere always
    use the pdf normalization.
    """
    L1, L2 = xi.domain.lengths
    scale = pixels / max(L1, L2)
    width, height = L1 * scale, L2 * scale

    def px(x):
        return x * scale

    def py(y):
        return (L2 - y) * scale  # svg y grows downward

    parts = [_svg_header(width, height)]
    parts.append(f'<rect width="{width:.6g}" height="{height:.6g}" fill="white"/>')

    vmax = float(xi.values.max())
    n1, n2 = xi.domain.resolution
    cw, ch = xi.domain.cell_size
    parts.append('<g shape-rendering="crispEdges">')
    for j in range(n2):
        for i in range(n1):
            v = xi.values[j, i] / vmax if vmax > 0 else 0.0
            if v < 1e-3:
                continue  # keep the file small, near-white cells stay background
            g = int(round(255.0 * (1.0 - v)))
            parts.append(f'<rect x="{px(i * cw):.4g}" y="{py((j + 1) * ch):.4g}" '
                         f'width="{cw * scale:.4g}" height="{ch * scale:.4g}" '
                         f'fill="rgb({g},{g},{g})"/>')
    parts.append('</g>')

    for obs in obstacles:
        if isinstance(obs, CircleObstacle):
            parts.append(f'<circle cx="{px(obs.center[0]):.6g}" cy="{py(obs.center[1]):.6g}" '
                         f'r="{obs.radius * scale:.6g}" fill="#8b0000" fill-opacity="0.55"/>')
        elif isinstance(obs, PolygonObstacle):
            pts = " ".join(f"{px(x):.6g},{py(y):.6g}" for x, y in obs.vertices)
            parts.append(f'<polygon points="{pts}" fill="#8b0000" fill-opacity="0.55"/>')

    for idx, positions in enumerate(trajectories):
        positions = np.asarray(positions, dtype=float)
        color = ROBOT_COLORS[idx % len(ROBOT_COLORS)]
        if positions.size:
            pts = " ".join(f"{px(x):.6g},{py(y):.6g}" for x, y in positions)
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                         f'stroke-width="1.2"/>')

    for idx, start in enumerate(starts):
        color = ROBOT_COLORS[idx % len(ROBOT_COLORS)]
        parts.append(f'<circle cx="{px(start[0]):.6g}" cy="{py(start[1]):.6g}" r="4" '
                     f'fill="{color}" stroke="black"/>')

    if goal is not None:
        gx, gy = px(goal[0]), py(goal[1])
        parts.append(f'<path d="M {gx - 5:.6g} {gy:.6g} H {gx + 5:.6g} '
                     f'M {gx:.6g} {gy - 5:.6g} V {gy + 5:.6g}" '
                     f'stroke="black" stroke-width="2"/>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, svg_text: str) -> None:
    with open(path, "w") as fh:
        fh.write(svg_text)


def save_metrics_figure(metrics_rows, path) -> None:
    """Metric decay over stages (values taken after each stage completes)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if metrics_rows:
        last_robot = max(r.robot for r in metrics_rows)
        rows = [r for r in metrics_rows if r.robot == last_robot]
        stages = [r.stage for r in rows]
        ax.plot(stages, [r.bhattacharyya for r in rows], "o-", label="Bhattacharyya")
        ax.plot(stages, [r.kl for r in rows], "s-", label="KL divergence")
        ax.plot(stages, [r.phi for r in rows], "^-", label="spectral metric")
        ax.set_yscale("log")
        ax.legend()
    ax.set_xlabel("stage")
    ax.set_ylabel("distance to target density")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _add_obstacles(ax, obstacles):
    for obs in obstacles:
        if isinstance(obs, CircleObstacle):
            ax.add_patch(MplCircle(obs.center, obs.radius, facecolor="darkred",
                                   alpha=0.6, edgecolor="black"))
        elif isinstance(obs, PolygonObstacle):
            ax.add_patch(MplPolygon(np.asarray(obs.vertices), facecolor="darkred",
                                    alpha=0.6, edgecolor="black"))


def save_coverage_figure(xi: DensityGrid, gamma, trajectories, obstacles, path,
                         goal=None) -> None:
    """Side-by-side target density (with paths) and achieved coverage."""
    L1, L2 = xi.domain.lengths
    extent = (0.0, L1, 0.0, L2)
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.6))
    axes[0].imshow(xi.values, origin="lower", extent=extent, cmap="Greys")
    axes[0].set_title("target density and trajectories")
    for idx, positions in enumerate(trajectories):
        positions = np.asarray(positions, dtype=float)
        if positions.size:
            axes[0].plot(positions[:, 0], positions[:, 1],
                         color=ROBOT_COLORS[idx % len(ROBOT_COLORS)], lw=0.8)
            axes[0].plot(positions[0, 0], positions[0, 1], "o",
                         color=ROBOT_COLORS[idx % len(ROBOT_COLORS)], ms=5)
    if goal is not None:
        axes[0].plot(goal[0], goal[1], "k+", ms=12, mew=2)
    _add_obstacles(axes[0], obstacles)
    if gamma is not None:
        axes[1].imshow(gamma.values, origin="lower", extent=extent, cmap="Greys")
    axes[1].set_title("time-average coverage")
    _add_obstacles(axes[1], obstacles)
    for ax in axes:
        ax.set_xlim(0, L1)
        ax.set_ylim(0, L2)
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
