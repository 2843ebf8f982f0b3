"""End-to-end CLI tests on a small, fast scenario."""

import json

import numpy as np
import pytest

from cogcache.cli import _parse_values, main

FAST_CFG = """
lambda_user = 4e-5
lambda_bs   = 2e-6
alpha       = 0.5
power_d2d_dbm = 23
power_bs_dbm  = 43
pathloss      = 4.0
fading_rate   = 1.0
sense_threshold = 2e-9
num_channels = 3
request_rate = 0.3
library_size  = 50
cache_size    = 5
zipf_exponent = 1.0
window_side = 1000.0
seed        = 7
"""

ANALYTIC_FILES = {"summary.json", "user_count_pmf.csv",
                  "bs_queue_length_pmf.csv", "bs_delay_pmf.csv",
                  "d2d_queue_length_pmf.csv", "d2d_delay_pmf.csv"}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "fast.cfg"
    p.write_text(FAST_CFG)
    return str(p)


def _read_dir(d):
    return {f.name: f.read_bytes() for f in d.iterdir() if f.is_file()}


class TestAnalytic:
    def test_writes_exactly_the_documented_files(self, cfg_path, tmp_path):
        out = tmp_path / "an"
        assert main(["analytic", cfg_path, str(out)]) == 0
        assert {f.name for f in out.iterdir()} == ANALYTIC_FILES

    def test_csvs_carry_config_header_and_schema(self, cfg_path, tmp_path):
        out = tmp_path / "an"
        main(["analytic", cfg_path, str(out)])
        lines = (out / "bs_queue_length_pmf.csv").read_text().splitlines()
        header = [ln for ln in lines if ln.startswith("#")]
        assert any("request_rate" in ln for ln in header)
        assert lines[len(header)] == "n,probability"
        n, p = lines[len(header) + 1].split(",")
        assert n == "0" and 0 <= float(p) <= 1

    def test_summary_contents(self, cfg_path, tmp_path):
        out = tmp_path / "an"
        main(["analytic", cfg_path, str(out)])
        s = json.loads((out / "summary.json").read_text())
        assert s["mode"] == "analytic"
        assert abs(sum(s["subset_split"].values()) - 1.0) < 1e-9
        assert set(s["pmfs"]) == ANALYTIC_FILES - {"summary.json"}

    def test_identical_invocations_identical_outputs(self, cfg_path,
                                                     tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["analytic", cfg_path, str(a)])
        main(["analytic", cfg_path, str(b)])
        assert _read_dir(a) == _read_dir(b)


class TestSimulate:
    def test_outputs_and_schema(self, cfg_path, tmp_path):
        out = tmp_path / "sim"
        rc = main(["simulate", cfg_path, str(out),
                   "--reps", "2", "--slots", "400"])
        assert rc == 0
        assert {f.name for f in out.iterdir()} == \
            {"metrics_pmfs.csv", "metrics_steady.csv", "summary.json"}
        steady = [ln for ln in
                  (out / "metrics_steady.csv").read_text().splitlines()
                  if not ln.startswith("#")]
        assert steady[0] == "class,steady_fraction,ci"
        classes = {ln.split(",")[0] for ln in steady[1:]}
        assert classes == {"bs", "d2d"}
        pmf_lines = [ln for ln in
                     (out / "metrics_pmfs.csv").read_text().splitlines()
                     if not ln.startswith("#")]
        assert pmf_lines[0] == "class,metric,n,value"

    def test_deterministic_across_invocations(self, cfg_path, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", cfg_path, str(a), "--reps", "1", "--slots", "400"])
        main(["simulate", cfg_path, str(b), "--reps", "1", "--slots", "400"])
        assert _read_dir(a) == _read_dir(b)


class TestCompare:
    def test_emits_comparison_with_tv_rows(self, cfg_path, tmp_path,
                                           capsys):
        out = tmp_path / "cmp"
        rc = main(["compare", cfg_path, str(out),
                   "--reps", "2", "--slots", "400"])
        assert rc == 0
        assert (out / "comparison.csv").exists()
        payload = json.loads((out / "comparison.json").read_text())
        rows = {(r["class"], r["metric"]): r for r in payload["rows"]}
        assert set(rows) == {("bs", "queue_length"), ("bs", "delay"),
                             ("d2d", "queue_length"), ("d2d", "delay")}
        assert rows[("bs", "queue_length")]["tolerance"] == 0.05
        assert rows[("d2d", "delay")]["tolerance"] == 0.07
        for r in rows.values():
            assert r["status"] in ("pass", "fail", "reported") or \
                r["status"].startswith("skipped")
        console = capsys.readouterr().out
        assert "compare bs/queue_length" in console
        assert {f.name for f in (out / "analytic").iterdir()} == \
            ANALYTIC_FILES

    def test_alpha_zero_skips_d2d(self, tmp_path, capsys):
        p = tmp_path / "a0.cfg"
        p.write_text(FAST_CFG.replace("alpha       = 0.5",
                                      "alpha       = 0.0"))
        out = tmp_path / "cmp0"
        rc = main(["compare", str(p), str(out),
                   "--reps", "1", "--slots", "400"])
        assert rc == 0
        payload = json.loads((out / "comparison.json").read_text())
        d2d_rows = [r for r in payload["rows"] if r["class"] == "d2d"]
        assert all(r["status"].startswith("skipped") for r in d2d_rows)


class TestSweep:
    def test_sweep_includes_baseline_series(self, cfg_path, tmp_path):
        out = tmp_path / "sw"
        rc = main(["sweep", cfg_path, str(out), "--param", "request_rate",
                   "--values", "0.2,0.5", "--reps", "1", "--slots", "400"])
        assert rc == 0
        lines = [ln for ln in (out / "sweep.csv").read_text().splitlines()
                 if not ln.startswith("#")]
        assert lines[0] == "param,value,series,steady_fraction,ci"
        series = {tuple(ln.split(",")[1:3]) for ln in lines[1:]}
        for v in ("0.2", "0.5"):
            assert (v, "bs_proposed") in series
            assert (v, "bs_baseline") in series

    def test_alpha_sweep_has_no_baseline(self, cfg_path, tmp_path):
        out = tmp_path / "swa"
        rc = main(["sweep", cfg_path, str(out), "--param", "alpha",
                   "--values", "0.3,0.6", "--reps", "1", "--slots", "400"])
        assert rc == 0
        text = (out / "sweep.csv").read_text()
        assert "bs_baseline" not in text

    def test_unknown_param_fails(self, cfg_path, tmp_path, capsys):
        rc = main(["sweep", cfg_path, str(tmp_path / "x"), "--param", "nope",
                   "--values", "1,2"])
        assert rc == 2
        assert "unknown sweep parameter" in capsys.readouterr().err

    def test_value_list_parsing(self):
        assert _parse_values("0.1,0.2") == [0.1, 0.2]
        assert _parse_values("0.01..0.05 step 0.02") == [0.01, 0.03, 0.05]
        with pytest.raises(ValueError):
            _parse_values("0.1..0.5")


class TestErrors:
    def test_unstable_config_exits_2(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text(FAST_CFG.replace("request_rate = 0.3",
                                      "request_rate = 5"))
        rc = main(["analytic", str(p), str(tmp_path / "out")])
        assert rc == 2
        assert "stability" in capsys.readouterr().err

    def test_malformed_config_exits_2(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("nonsense\n")
        rc = main(["analytic", str(p), str(tmp_path / "out")])
        assert rc == 2

    def test_missing_config_file_exits_2(self, tmp_path, capsys):
        rc = main(["analytic", str(tmp_path / "absent.cfg"),
                   str(tmp_path / "out")])
        assert rc == 2
