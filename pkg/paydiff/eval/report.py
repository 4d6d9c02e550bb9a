"""Write benchmark and workspace tables as CSV, JSON and SVG bar charts."""

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import pandas as pd

from ..utils.error_handler import ReportError
from ..utils.logger import get_logger
from ..visualization.plot_utils import PlotUtilities
from .benchmark import BenchReport

logger = get_logger(__name__)

FORMATS = ("csv", "json", "svg")


def _table(report: Union[BenchReport, pd.DataFrame]) -> pd.DataFrame:
    return report.summary if isinstance(report, BenchReport) else report


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    if hasattr(value, "item"):
        return _json_safe(value.item())
    return value


def emit_report(report: Union[BenchReport, pd.DataFrame], out_dir: Union[str, Path],
                formats: Iterable[str] = FORMATS, stem: str = "report", series: str = "planner",
                value: str = "success_rate", metadata: Optional[Dict[str, Any]] = None) -> Dict[str, Path]:
    """Write ``report`` in each requested format.

    Parameters
    ----------
    report : BenchReport or pandas.DataFrame
        Summary table; column order is kept as given.
    out_dir : str or Path
        Output directory, created if missing.
    formats : iterable of str
        Any of ``csv``, ``json`` and ``svg``.
    stem : str
        File name without suffix.
    series, value : str
        Bar series column and bar height column of the SVG chart.
    metadata : dict, optional
        Stored next to the rows in the JSON file.

    Returns
    -------
    dict
        Written path per format.

    Raises
    ------
    ReportError
        If the table is empty, a format is unknown or a file cannot be written.
    """
    table = _table(report)
    if table is None or table.empty:
        raise ReportError("nothing to report: the table is empty")
    formats = list(formats)
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise ReportError(f"unknown report format(s) {unknown}, choose from {FORMATS}")

    out_dir = Path(out_dir)
    written: Dict[str, Path] = {}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            path = out_dir / f"{stem}.csv"
            table.to_csv(path, index=False)
            written["csv"] = path
        if "json" in formats:
            path = out_dir / f"{stem}.json"
            rows = [{k: _json_safe(v) for k, v in row.items()} for row in table.to_dict(orient="records")]
            with open(path, "w") as f:
                json.dump({"columns": list(table.columns), "rows": rows, "metadata": metadata or {}}, f, indent=2)
            written["json"] = path
        if "svg" in formats:
            if series not in table.columns or value not in table.columns:
                raise ReportError(f"svg chart needs columns {series!r} and {value!r}")
            fig, _ = PlotUtilities.create_figure((max(6.0, 1.2 * table["payload"].nunique() + 3), 4.5))
            ax = fig.add_subplot(1, 1, 1)
            PlotUtilities.plot_success_bars(ax, table, series=series, value=value)
            fig.tight_layout()
            written["svg"] = PlotUtilities.save_figure(fig, out_dir / f"{stem}.svg")
    except OSError as e:
        raise ReportError(f"cannot write report to {out_dir}: {e}") from e

    logger.info(f"Wrote {', '.join(str(p) for p in written.values())}")
    return written


def load_report_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Read a table written by :func:`emit_report`."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Report file not found: {path}")
    return pd.read_csv(path)
