"""Render steady-node fractions vs the swept parameter from a cogcache
sweep.csv (columns param,value,series,steady_fraction,ci)."""

from __future__ import annotations

import argparse
import sys
import warnings

import matplotlib.pyplot as plt

from cogplots._io import PlotInputError, read_rows, save, style_path

SERIES = (
    ("bs_proposed", "steady BSs (proposed)", "o"),
    ("d2d_proposed", "steady D2D TXs (proposed)", "s"),
    ("bs_baseline", "steady BSs (baseline)", "^"),
)


def plot_steady_fraction(sweep_csv, out_png) -> None:
    """Plot every known series in the sweep CSV with confidence bands.

    All three series (proposed BS, proposed D2D, baseline BS) are expected;
    a baseline-only file renders with a warning, any other missing series is
    an error.
    """
    rows = read_rows(sweep_csv)
    want = {"param", "value", "series", "steady_fraction", "ci"}
    if not want <= set(rows[0]):
        raise PlotInputError(
            f"expected columns {sorted(want)} in {sweep_csv}; "
            f"got {list(rows[0])}")
    present = {r["series"] for r in rows}
    missing = {name for name, _, _ in SERIES} - present
    if missing == {"bs_proposed", "d2d_proposed"}:
        warnings.warn(f"{sweep_csv} contains only the baseline series; "
                      "rendering a 1-series figure")
    elif missing:
        raise PlotInputError(
            f"missing series {sorted(missing)} in {sweep_csv}; "
            f"found {sorted(present)}")

    param = rows[0]["param"]
    with plt.style.context(style_path()):
        fig, ax = plt.subplots()
        for name, label, marker in SERIES:
            pts = sorted((float(r["value"]), float(r["steady_fraction"]),
                          float(r["ci"]))
                         for r in rows if r["series"] == name)
            if not pts:
                continue
            x, y, ci = zip(*pts)
            ax.plot(x, y, marker=marker, label=label)
            ax.fill_between(x, [v - c for v, c in zip(y, ci)],
                            [v + c for v, c in zip(y, ci)], alpha=0.2)
        ax.set_xlabel(param.replace("_", " "))
        ax.set_ylabel("fraction of steady service nodes")
        ax.set_ylim(0, 1.05)
        ax.legend()
        save(fig, out_png)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Plot steady-node fractions from a cogcache sweep CSV.")
    parser.add_argument("sweep_csv", help="sweep.csv produced by cogcache sweep")
    parser.add_argument("out_png", help="output PNG path")
    args = parser.parse_args(argv)
    try:
        plot_steady_fraction(args.sweep_csv, args.out_png)
    except PlotInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
