"""CSV readers and shared figure plumbing for the plot scripts."""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

DPI = 200


class PlotInputError(ValueError):
    """Raised when an input CSV is missing, empty, or lacks a series."""


def style_path() -> str:
    return str(resources.files("cogplots").joinpath("figures.mplstyle"))


def read_rows(path) -> list[dict]:
    """Read a cogcache CSV: `#`-prefixed header comments, then one
    column-name row, then data rows. Returns a list of dicts."""
    path = Path(path)
    if not path.exists():
        raise PlotInputError(f"input CSV not found: {path}")
    with path.open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows:
        raise PlotInputError(f"input CSV is empty: {path}")
    return rows


def read_pmf(path) -> tuple[list[int], list[float]]:
    """Read an analytic PMF CSV with columns n,probability."""
    rows = read_rows(path)
    if "n" not in rows[0] or "probability" not in rows[0]:
        raise PlotInputError(
            f"expected columns n,probability in {path}; got {list(rows[0])}")
    return ([int(r["n"]) for r in rows],
            [float(r["probability"]) for r in rows])


def read_metric_pmf(path, node_class: str,
                    metric: str) -> tuple[list[int], list[float]]:
    """Read one (class, metric) PMF out of a simulator metrics_pmfs.csv
    with columns class,metric,n,value."""
    rows = read_rows(path)
    want = {"class", "metric", "n", "value"}
    if not want <= set(rows[0]):
        raise PlotInputError(
            f"expected columns {sorted(want)} in {path}; got {list(rows[0])}")
    sel = [r for r in rows
           if r["class"] == node_class and r["metric"] == metric]
    if not sel:
        raise PlotInputError(
            f"no rows with class={node_class!r} metric={metric!r} in {path}")
    return [int(r["n"]) for r in sel], [float(r["value"]) for r in sel]


def save(fig, out_png) -> None:
    """Write a timestamp-free PNG at the fixed DPI and close the figure."""
    fig.savefig(out_png, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
