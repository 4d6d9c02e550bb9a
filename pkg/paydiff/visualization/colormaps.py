"""Colors for planners, encodings and state channels."""

from typing import Dict, List

import numpy as np
from matplotlib import colormaps

from ..utils.logger import get_logger

logger = get_logger(__name__)


class PlotColors:
    """Fixed colors per planner and channel kind, generated ones for everything else."""

    SERIES_COLORS = {
        "ddim": "#1f77b4",
        "ddpm": "#aec7e8",
        "plan_and_filter": "#ff7f0e",
        "kinodynamic_rrt": "#2ca02c",
        "sqp": "#9467bd",
        "numeric": "#8c564b",
        "one_hot": "#d62728",
        "less_than": "#17becf",
        "supported_range": "#bcbd22",
    }

    CHANNEL_COLORS = {
        "position": "#1f77b4",
        "velocity": "#ff7f0e",
        "acceleration": "#2ca02c",
        "limit": "#7f7f7f",
    }

    ACCESSIBLE = "#00b894"
    BLOCKED = "#ff6b6b"
    UNREACHABLE = "#dfe6e9"

    @staticmethod
    def _hex(rgba) -> str:
        return f"#{int(rgba[0] * 255):02x}{int(rgba[1] * 255):02x}{int(rgba[2] * 255):02x}"

    @classmethod
    def series_colors(cls, names: List[str]) -> Dict[str, str]:
        """Color per series name; unknown names take distinct tab10/tab20 colors."""
        unknown = [n for n in names if n not in cls.SERIES_COLORS]
        cmap = colormaps["tab10" if len(unknown) <= 10 else "tab20"]
        generated = {n: cls._hex(cmap(i % cmap.N)) for i, n in enumerate(unknown)}
        return {n: cls.SERIES_COLORS.get(n, generated.get(n)) for n in names}

    @classmethod
    def joint_colors(cls, n_dof: int) -> List[str]:
        cmap = colormaps["tab10"]
        return [cls._hex(cmap(i)) for i in np.arange(n_dof) % 10]
