"""Line plots of trace columns, rendered to self-contained SVG.

One subplot per column group, time in hours on a shared x axis. The SVG writer
runs with a fixed hash salt and no date stamp so the same trace always renders
to the same bytes.
"""

import logging
from typing import Dict, List, Optional, Sequence, TextIO

import matplotlib

matplotlib.use("Agg")  # Non-interactive backend
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from smartpack.core.exceptions import InvalidInputError  # noqa: E402
from smartpack.schemas.trace import OBSERVABLE_COLUMNS, SimulationTrace  # noqa: E402

logger = logging.getLogger(__name__)

COLUMN_GROUPS: Dict[str, List[str]] = {
    "spoilage": ["tvbn_mg100g", "nh3_ppm"],
    "sensor": ["r_sensor_ohm"],
    "antenna": ["f_res_mhz", "gain_db", "v_harvest_v"],
    "mat": ["temp_mat_c", "gate_open"],
    "release": ["ca_released_frac", "eg_released_frac"],
    "headspace": ["ca_headspace_ppm", "eg_headspace_ppm"],
    "markers": ["butanone_ppm", "methylbutanol_ppm"],
}

DEFAULT_COLUMNS = ["nh3_ppm", "temp_mat_c", "ca_released_frac", "eg_released_frac", "butanone_ppm"]

_RC = {
    "svg.hashsalt": "smartpack",
    "svg.fonttype": "path",
    "figure.dpi": 100,
    "font.size": 9,
    "axes.grid": True,
}


def group_columns(columns: Sequence[str]) -> List[List[str]]:
    """Selected columns split by group, in group order; unknown names raise."""
    unknown = [c for c in columns if c not in OBSERVABLE_COLUMNS]
    if unknown:
        raise InvalidInputError(f"unknown trace column(s): {', '.join(unknown)}")
    wanted = set(columns)
    groups = [[c for c in members if c in wanted] for members in COLUMN_GROUPS.values()]
    return [g for g in groups if g]


class TracePlotter:
    """Renders a SimulationTrace to a matplotlib figure and writes it as SVG."""

    def __init__(self, width_in: float = 8.0, row_height_in: float = 2.2) -> None:
        self.width_in = width_in
        self.row_height_in = row_height_in

    def figure(self, trace: SimulationTrace, columns: Optional[Sequence[str]] = None) -> Figure:
        groups = group_columns(columns or DEFAULT_COLUMNS)
        t_h = trace.t_h.to_numpy()
        with plt.rc_context(_RC):
            fig, axes = plt.subplots(
                len(groups), 1, sharex=True, squeeze=False, figsize=(self.width_in, self.row_height_in * len(groups))
            )
            for ax, group in zip(axes[:, 0], groups):
                for column in group:
                    ax.plot(t_h, trace.frame[column].to_numpy(), label=column, linewidth=1.2)
                ax.legend(loc="best", fontsize=8)
            axes[-1, 0].set_xlabel("time (h)")
            fig.suptitle(trace.scenario)
            fig.tight_layout()
        return fig

    def write_svg(self, fig: Figure, handle: TextIO) -> None:
        with plt.rc_context(_RC):
            fig.savefig(handle, format="svg", metadata={"Date": None})
        plt.close(fig)
        logger.info("rendered %d panel(s)", len(fig.axes))
