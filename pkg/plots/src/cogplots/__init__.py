"""Batch figure scripts for cogcache CSV outputs.

The scripts are pure readers: they never recompute model quantities, only
render what the CSVs contain. A fixed matplotlib style file and timestamp-free
PNG output make re-runs on identical inputs pixel-identical.
"""

from cogplots.delay import plot_delay_pmf
from cogplots.steady import plot_steady_fraction

__all__ = ["plot_steady_fraction", "plot_delay_pmf"]
