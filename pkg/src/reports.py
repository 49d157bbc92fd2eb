"""
Result files: atomic CSV/JSON writers and static SVG charts.

CSV follows RFC 4180 with a mandatory header row; floats are written with
``repr`` so reruns with the same seed are byte-identical.
"""

import csv
import json
import logging
import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, List, Optional, Sequence, TextIO, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from pydantic import BaseModel  # noqa: E402

logger = logging.getLogger(__name__)

STATUS_COLUMN_VALUE = "status"


@contextmanager
def atomic_open(path: Union[str, Path]) -> Iterator[TextIO]:
    """Write to a temporary sibling and rename it over ``path`` on success"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as handle:
            yield handle
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def status_row(width: int, status: str) -> List[str]:
    """Trailing row recording how a run ended, padded to the header width"""
    return [STATUS_COLUMN_VALUE, status] + [""] * max(0, width - 2)


def write_csv(
    path: Union[str, Path],
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    status: Optional[str] = None,
) -> Path:
    path = Path(path)
    with atomic_open(path) as handle:
        writer = csv.writer(handle, lineterminator="\r\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
            count += 1
        if status is not None:
            writer.writerow(status_row(len(header), status))
    logger.info(f"💾 Wrote {count} rows to {path}")
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, float) and not math.isfinite(value):
        return format_cell(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_json(path: Union[str, Path], payload: Any) -> Path:
    path = Path(path)
    with atomic_open(path) as handle:
        json.dump(_jsonable(payload), handle, indent=2)
        handle.write("\n")
    logger.info(f"💾 Wrote report to {path}")
    return path


class ThroughputSeries(BaseModel):
    """Normalized throughput per blocklength with its reference lines"""

    n: List[int]
    achieved: List[float]
    lower: float
    upper: float
    target: float


def plot_throughput(path: Union[str, Path], series: ThroughputSeries, title: str) -> Path:
    """Static SVG line chart of log M / sqrt(n ln L) against n"""
    path = Path(path)
    plt.rcParams["svg.hashsalt"] = "covertslot"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(series.n, series.achieved, marker="o", label="reliable and covert")
    ax.axhline(series.upper, color="tab:red", linestyle="--", label="converse bound")
    ax.axhline(series.lower, color="tab:green", linestyle="--", label="achievability bound")
    ax.axhline(series.target, color="tab:gray", linestyle=":", label="(1 - xi) x achievability")
    ax.set_xscale("log")
    ax.set_xlabel("blocklength per slot n")
    ax.set_ylabel("log M / sqrt(n ln L)")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()

    path.parent.mkdir(parents=True, exist_ok=True)
    with atomic_open(path) as handle:
        fig.savefig(handle, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"💾 Wrote chart to {path}")
    return path
