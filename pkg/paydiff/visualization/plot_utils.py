"""Figures for trajectories, success rates and workspace maps.

All figures are built on the Agg canvas so they render without a display.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from matplotlib.axes import Axes
from matplotlib.backends.backend_agg import FigureCanvasAgg as FigureCanvas
from matplotlib.figure import Figure

from ..core.trajectory import Trajectory
from ..robot.arm_model import RobotModel
from ..utils.logger import get_logger
from .colormaps import PlotColors

logger = get_logger(__name__)


class PlotUtilities:
    """Plotting helpers shared by the report writer and the CLI."""

    @staticmethod
    def create_figure(figsize: Tuple[float, float] = (10, 6), dpi: int = 100) -> Tuple[Figure, FigureCanvas]:
        """Create a figure attached to an Agg canvas.

        Parameters
        ----------
        figsize : tuple
            Figure size in inches (width, height).
        dpi : int
            Dots per inch.

        Returns
        -------
        tuple
            (Figure, FigureCanvas) objects.
        """
        fig = Figure(figsize=figsize, dpi=dpi, facecolor="white")
        canvas = FigureCanvas(fig)
        return fig, canvas

    @staticmethod
    def plot_success_bars(ax: Axes, table: pd.DataFrame, series: str = "planner",
                          value: str = "success_rate") -> Dict[str, List]:
        """Grouped bars: one group per payload, one bar per series.

        Each bar gets the SVG id ``bar-<payload>-<series>``.

        Parameters
        ----------
        ax : matplotlib.axes.Axes
            Target axes.
        table : pandas.DataFrame
            Needs ``payload``, ``series`` and ``value`` columns.
        series : str
            Column naming the bars within a group.
        value : str
            Column with the bar heights (rates in [0, 1]).

        Returns
        -------
        dict
            Bar patches per series name.
        """
        payloads = sorted(table["payload"].unique())
        names = list(dict.fromkeys(table[series]))
        colors = PlotColors.series_colors(names)
        width = 0.8 / max(len(names), 1)
        centers = np.arange(len(payloads))
        bars: Dict[str, List] = {}
        for i, name in enumerate(names):
            rows = table[table[series] == name].set_index("payload")[value]
            heights = [float(rows.get(p, np.nan)) for p in payloads]
            patches = ax.bar(centers - 0.4 + (i + 0.5) * width, np.nan_to_num(heights), width,
                             label=str(name), color=colors[name])
            for patch, p in zip(patches, payloads):
                patch.set_gid(f"bar-{p:g}-{name}")
            bars[name] = list(patches)
        ax.set_xticks(centers)
        ax.set_xticklabels([f"{p:g}" for p in payloads])
        ax.set_xlabel("Payload (kg)")
        ax.set_ylabel(value.replace("_", " ").capitalize())
        ax.set_ylim(0.0, 1.05)
        ax.grid(True, axis="y", alpha=0.3)
        ax.legend(loc="upper right", fontsize="small")
        return bars

    @staticmethod
    def plot_trajectory_states(traj: Trajectory, model: Optional[RobotModel] = None,
                               title: str = "") -> Figure:
        """Positions, velocities and accelerations over time, limits dashed when a model is given."""
        fig, _ = PlotUtilities.create_figure((10, 8))
        axes = fig.subplots(3, 1, sharex=True)
        colors = PlotColors.joint_colors(traj.n_dof)
        labels = (("position", "q (rad)", traj.q), ("velocity", "qd (rad/s)", traj.qd),
                  ("acceleration", "qdd (rad/s^2)", traj.qdd))
        limits = None
        if model is not None:
            limits = {"position": (model.q_min, model.q_max), "velocity": (-model.v_max, model.v_max),
                      "acceleration": (-model.a_max, model.a_max)}
        for ax, (kind, ylabel, values) in zip(axes, labels):
            for j in range(traj.n_dof):
                ax.plot(traj.times, values[:, j], color=colors[j], linewidth=1.2, label=f"joint {j + 1}")
                if limits is not None:
                    lo, hi = limits[kind]
                    ax.axhline(lo[j], color=colors[j], linestyle="--", alpha=0.4, linewidth=0.8)
                    ax.axhline(hi[j], color=colors[j], linestyle="--", alpha=0.4, linewidth=0.8)
            ax.set_ylabel(ylabel)
            ax.grid(True, alpha=0.3)
        axes[0].legend(loc="upper right", fontsize="small")
        axes[-1].set_xlabel("Time (s)")
        if title:
            fig.suptitle(title)
        return fig

    @staticmethod
    def plot_workspace_map(points: np.ndarray, reachable: np.ndarray, accessible: np.ndarray,
                           payload: float, axes_idx: Tuple[int, int] = (0, 1)) -> Figure:
        """Scatter of grid cells: accessible, reachable but blocked, and unreachable."""
        fig, _ = PlotUtilities.create_figure((7, 5))
        ax = fig.add_subplot(1, 1, 1)
        a, b = axes_idx
        groups = (
            (~reachable, PlotColors.UNREACHABLE, "unreachable"),
            (reachable & ~accessible, PlotColors.BLOCKED, "blocked"),
            (accessible, PlotColors.ACCESSIBLE, "accessible"),
        )
        for mask, color, label in groups:
            if np.any(mask):
                ax.scatter(points[mask, a], points[mask, b], c=color, s=80, marker="s", label=label,
                           edgecolors="#636e72")
        ax.set_xlabel("xyz"[a] + " (m)")
        ax.set_ylabel("xyz"[b] + " (m)")
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_title(f"Accessible cells at {payload:g} kg")
        ax.legend(loc="upper right", fontsize="small")
        return fig

    @staticmethod
    def save_figure(fig: Figure, path: Union[str, Path], metadata: Optional[Dict[str, Any]] = None) -> Path:
        """Write ``fig``; SVG output carries no creation date so reruns give identical files."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix.lower() == ".svg":
            meta = {"Date": None}
            meta.update(metadata or {})
            fig.savefig(path, format="svg", metadata=meta)
        else:
            fig.savefig(path, metadata=metadata)
        logger.debug(f"Saved figure {path}")
        return path
