"""Overlay request-delay PMFs from cogcache CSVs: analytic curves dashed,
empirical distributions as markers."""

from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from cogplots._io import (PlotInputError, read_metric_pmf, read_pmf, save,
                          style_path)

# label, color index, and how to read each optional input
_ANALYTIC = (
    ("analytic_bs", "steady-BS users (analytic)", "C0"),
    ("analytic_d2d", "steady-D2D users (analytic)", "C1"),
    ("analytic_baseline", "baseline users (analytic)", "C2"),
)
_EMPIRICAL = (
    ("empirical", "bs", "steady-BS users (simulated)", "C0", "o"),
    ("empirical", "d2d", "steady-D2D users (simulated)", "C1", "s"),
    ("empirical_baseline", "bs", "baseline users (simulated)", "C2", "^"),
)


def plot_delay_pmf(out_png, *, analytic_bs=None, analytic_d2d=None,
                   analytic_baseline=None, empirical=None,
                   empirical_baseline=None, max_n=None) -> None:
    """Overlay whichever delay PMFs are supplied.

    Analytic inputs are `n,probability` CSVs; empirical inputs are simulator
    `metrics_pmfs.csv` files, from which the delay rows are taken (the
    baseline file contributes its BS class). At least one input is required.
    """
    named = {"analytic_bs": analytic_bs, "analytic_d2d": analytic_d2d,
             "analytic_baseline": analytic_baseline, "empirical": empirical,
             "empirical_baseline": empirical_baseline}
    if not any(named.values()):
        raise PlotInputError("no input CSVs supplied")

    with plt.style.context(style_path()):
        fig, ax = plt.subplots()
        for key, label, color in _ANALYTIC:
            if named[key] is None:
                continue
            n, p = read_pmf(named[key])
            ax.plot(n, p, linestyle="--", color=color, label=label)
        for key, cls, label, color, marker in _EMPIRICAL:
            if named[key] is None:
                continue
            n, p = read_metric_pmf(named[key], cls, "delay")
            ax.plot(n, p, linestyle="none", marker=marker, color=color,
                    markerfacecolor="none", label=label)
        if max_n is not None:
            ax.set_xlim(0, max_n)
        ax.set_xlabel("request delay (slots)")
        ax.set_ylabel("probability")
        ax.legend()
        save(fig, out_png)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Overlay request-delay PMFs from cogcache CSV outputs.")
    parser.add_argument("out_png", help="output PNG path")
    parser.add_argument("--analytic-bs", help="bs_delay_pmf.csv")
    parser.add_argument("--analytic-d2d", help="d2d_delay_pmf.csv")
    parser.add_argument("--analytic-baseline",
                        help="bs_delay_pmf.csv from an alpha=0 run")
    parser.add_argument("--empirical", help="metrics_pmfs.csv")
    parser.add_argument("--empirical-baseline",
                        help="metrics_pmfs.csv from an alpha=0 run")
    parser.add_argument("--max-n", type=int,
                        help="truncate the x axis at this delay")
    args = parser.parse_args(argv)
    try:
        plot_delay_pmf(args.out_png, analytic_bs=args.analytic_bs,
                       analytic_d2d=args.analytic_d2d,
                       analytic_baseline=args.analytic_baseline,
                       empirical=args.empirical,
                       empirical_baseline=args.empirical_baseline,
                       max_n=args.max_n)
    except PlotInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
