"""Figure scripts: rendering, reproducibility, and failure modes.

Fixture CSVs under tests/fixtures/ were produced by the cogcache CLI
(`cogcache compare` and `cogcache sweep` on a small desk-scale config) and
checked in, so these tests exercise the real file formats without running
the model."""

from pathlib import Path

import pytest
from PIL import Image

from cogplots import plot_delay_pmf, plot_steady_fraction
from cogplots._io import DPI, PlotInputError
from cogplots.delay import main as delay_main
from cogplots.steady import main as steady_main

FIX = Path(__file__).parent / "fixtures"


def _strip_series(text, series):
    lines = text.splitlines(keepends=True)
    return "".join(ln for ln in lines
                   if ln.startswith("#") or f",{series}," not in ln)


class TestSteadyFraction:
    def test_renders_three_series(self, tmp_path):
        out = tmp_path / "steady.png"
        plot_steady_fraction(FIX / "sweep.csv", out)
        assert out.exists() and out.stat().st_size > 0

    def test_png_is_200_dpi(self, tmp_path):
        out = tmp_path / "steady.png"
        plot_steady_fraction(FIX / "sweep.csv", out)
        dpi = Image.open(out).info["dpi"]
        assert round(dpi[0]) == DPI and round(dpi[1]) == DPI

    def test_rerun_is_pixel_identical(self, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        plot_steady_fraction(FIX / "sweep.csv", a)
        plot_steady_fraction(FIX / "sweep.csv", b)
        assert a.read_bytes() == b.read_bytes()

    def test_baseline_only_warns_and_renders(self, tmp_path):
        text = (FIX / "sweep.csv").read_text()
        trimmed = _strip_series(_strip_series(text, "bs_proposed"),
                                "d2d_proposed")
        src = tmp_path / "baseline_only.csv"
        src.write_text(trimmed)
        out = tmp_path / "steady.png"
        with pytest.warns(UserWarning, match="only the baseline"):
            plot_steady_fraction(src, out)
        assert out.exists()

    def test_missing_single_series_is_an_error(self, tmp_path):
        src = tmp_path / "no_d2d.csv"
        src.write_text(_strip_series((FIX / "sweep.csv").read_text(),
                                     "d2d_proposed"))
        with pytest.raises(PlotInputError, match="d2d_proposed"):
            plot_steady_fraction(src, tmp_path / "x.png")

    def test_missing_file_is_an_error(self, tmp_path):
        with pytest.raises(PlotInputError, match="not found"):
            plot_steady_fraction(tmp_path / "absent.csv", tmp_path / "x.png")

    def test_cli_roundtrip_and_error_exit(self, tmp_path, capsys):
        out = tmp_path / "steady.png"
        assert steady_main([str(FIX / "sweep.csv"), str(out)]) == 0
        assert out.exists()
        assert steady_main([str(tmp_path / "absent.csv"),
                            str(tmp_path / "y.png")]) == 2
        assert "absent.csv" in capsys.readouterr().err


class TestDelayPmf:
    def _full_kwargs(self):
        return dict(analytic_bs=FIX / "bs_delay_pmf.csv",
                    analytic_d2d=FIX / "d2d_delay_pmf.csv",
                    analytic_baseline=FIX / "baseline_bs_delay_pmf.csv",
                    empirical=FIX / "metrics_pmfs.csv",
                    empirical_baseline=FIX / "baseline_metrics_pmfs.csv")

    def test_six_curve_overlay(self, tmp_path):
        out = tmp_path / "delay.png"
        plot_delay_pmf(out, max_n=40, **self._full_kwargs())
        assert out.exists() and out.stat().st_size > 0

    def test_rerun_is_pixel_identical(self, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        plot_delay_pmf(a, max_n=40, **self._full_kwargs())
        plot_delay_pmf(b, max_n=40, **self._full_kwargs())
        assert a.read_bytes() == b.read_bytes()

    def test_analytic_only_subset_renders(self, tmp_path):
        out = tmp_path / "delay.png"
        plot_delay_pmf(out, analytic_bs=FIX / "bs_delay_pmf.csv")
        assert out.exists()

    def test_no_inputs_is_an_error(self, tmp_path):
        with pytest.raises(PlotInputError, match="no input"):
            plot_delay_pmf(tmp_path / "x.png")

    def test_empty_file_error_names_the_file(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(PlotInputError, match="empty.csv"):
            plot_delay_pmf(tmp_path / "x.png", analytic_bs=empty)

    def test_wrong_schema_is_an_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(PlotInputError, match="expected columns"):
            plot_delay_pmf(tmp_path / "x.png", analytic_bs=bad)

    def test_missing_class_rows_is_an_error(self, tmp_path):
        with pytest.raises(PlotInputError, match="class='d2d'"):
            plot_delay_pmf(tmp_path / "x.png",
                           empirical=FIX / "baseline_metrics_pmfs.csv")

    def test_cli_roundtrip(self, tmp_path):
        out = tmp_path / "delay.png"
        rc = delay_main([str(out),
                         "--analytic-bs", str(FIX / "bs_delay_pmf.csv"),
                         "--empirical", str(FIX / "metrics_pmfs.csv"),
                         "--max-n", "40"])
        assert rc == 0 and out.exists()
