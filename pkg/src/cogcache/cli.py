"""Batch command-line front-end.

Subcommands:

* ``analytic``  -- closed-form subset split, count intensities, and the
  four queue/delay PMFs; writes 5 PMF CSVs plus ``summary.json``.
* ``simulate``  -- slot-level Monte Carlo replications; writes the pooled
  metrics as ``metrics_pmfs.csv``, ``metrics_steady.csv``, ``summary.json``.
* ``compare``   -- both pipelines plus per-distribution total-variation
  distances with pass/fail against the documented tolerances.
* ``sweep``     -- repeats ``simulate`` over a parameter grid; request-rate
  sweeps also run the no-caching baseline (alpha = 0) per point.

Every CSV starts with the producing config echoed as ``# key = value``
comment lines, so any artifact can be reproduced bit-for-bit from its own
header (all randomness flows from the config seed).  Files are written
atomically (temp + rename) and contain no timestamps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import (ConfigError, DiscretePmf, ScenarioConfig, StabilityError,
                   cache_hit_prob, config_to_dict, config_with, load_config)
from .geometry import ssr_count_intensity, subset_split
from .mqueue import (bs_delay_pmf, bs_queue_length_pmf, bs_user_count_pmf)
from .priority import (d2d_delay_pmf, d2d_queue_length_pmf,
                       group_user_intensity, heavy_load_pmf_vector)
from .simulator import MetricsReport, simulate

# documented analytic-vs-simulation tolerances (total variation)
COMPARE_TOLERANCES = {
    ("bs", "queue_length"): 0.05,
    ("d2d", "delay"): 0.07,
}

DEFAULT_SLOTS = 10_000
DEFAULT_REPS = 30


def _config_header(cfg: ScenarioConfig) -> str:
    lines = [f"# {k} = {v!r}" for k, v in sorted(config_to_dict(cfg).items())]
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_pmf_csv(path: Path, pmf: DiscretePmf, cfg: ScenarioConfig) -> None:
    rows = "\n".join(f"{n},{float(p)!r}" for n, p in enumerate(pmf.mass))
    _atomic_write(path, _config_header(cfg) + "n,probability\n" + rows + "\n")


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=1, sort_keys=True,
                                   default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _load(config_path: str) -> ScenarioConfig:
    cfg = load_config(config_path)
    if cfg.request_rate >= cfg.num_channels:
        raise StabilityError(
            f"stability impossible: request_rate {cfg.request_rate} >= "
            f"num_channels {cfg.num_channels} (even a single-user node "
            "cannot be steady)")
    return cfg


def _analytic_outputs(cfg: ScenarioConfig):
    """All closed-form artifacts for one config."""
    split = subset_split(cfg)
    pmfs = {
        "user_count_pmf.csv": bs_user_count_pmf(cfg),
        "bs_queue_length_pmf.csv": bs_queue_length_pmf(cfg),
        "bs_delay_pmf.csv": bs_delay_pmf(cfg),
        "d2d_queue_length_pmf.csv": d2d_queue_length_pmf(cfg),
        "d2d_delay_pmf.csv": d2d_delay_pmf(cfg),
    }
    # drop numerically-zero tails (inherited from the inversion grid size);
    # the dropped mass is accounted for in each PMF's truncation tail
    pmfs = {name: pmf.trimmed(1e-12) for name, pmf in pmfs.items()}
    summary = {
        "config": config_to_dict(cfg),
        "cache_hit_prob": cache_hit_prob(cfg.cache_size, cfg.zipf_exponent,
                                         cfg.library_size),
        "subset_split": {"p_local": split.p_local, "p_d2d": split.p_d2d,
                         "p_bs": split.p_bs},
        "sensing_intensities": {
            "lambda_gamma_d2d": ssr_count_intensity(1, cfg),
            "lambda_gamma_bs": ssr_count_intensity(2, cfg),
            "lambda_gamma_users": group_user_intensity(cfg),
        },
        "heavy_load_mean": heavy_load_pmf_vector(cfg).mean(),
        "pmfs": {name: {"mean": pmf.mean(),
                        "truncation_tail": pmf.truncation_tail,
                        "meta": pmf.meta}
                 for name, pmf in pmfs.items()},
    }
    return pmfs, summary


def cmd_analytic(config_path: str, out_dir: str) -> int:
    cfg = _load(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pmfs, summary = _analytic_outputs(cfg)
    for name, pmf in pmfs.items():
        _write_pmf_csv(out / name, pmf, cfg)
    summary["mode"] = "analytic"
    summary["outputs"] = sorted(pmfs) + ["summary.json"]
    _write_json(out / "summary.json", summary)
    return 0


def _report_csvs(report: MetricsReport, cfg: ScenarioConfig):
    header = _config_header(cfg)
    pmf_rows = "\n".join(f"{c},{m},{n},{float(v)!r}"
                         for c, m, n, v in report.pmf_rows())
    pmf_csv = header + "class,metric,n,value\n" + pmf_rows + "\n"
    frac_rows = "\n".join(f"{c},{float(f)!r},{float(ci)!r}"
                          for c, f, ci in report.fraction_rows())
    frac_csv = header + "class,steady_fraction,ci\n" + frac_rows + "\n"
    return pmf_csv, frac_csv


def _report_summary(report: MetricsReport, cfg: ScenarioConfig) -> dict:
    return {
        "config": config_to_dict(cfg),
        "steady_bs_fraction": report.steady_bs_fraction,
        "steady_bs_ci": report.steady_bs_ci,
        "steady_d2d_fraction": report.steady_d2d_fraction,
        "steady_d2d_ci": report.steady_d2d_ci,
        "replications": report.replications,
        "node_counts": report.node_counts,
        "pmf_means": {f"{c}/{m}": pmf.mean()
                      for (c, m), pmf in sorted(report.pmfs.items())},
        "meta": report.meta,
    }


def cmd_simulate(config_path: str, out_dir: str, slots: int = DEFAULT_SLOTS,
                 reps: int = DEFAULT_REPS) -> int:
    cfg = _load(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = simulate(cfg, num_slots=slots, replications=reps)
    pmf_csv, frac_csv = _report_csvs(report, cfg)
    _atomic_write(out / "metrics_pmfs.csv", pmf_csv)
    _atomic_write(out / "metrics_steady.csv", frac_csv)
    summary = _report_summary(report, cfg)
    summary["mode"] = "simulate"
    summary["slots"] = slots
    summary["outputs"] = ["metrics_pmfs.csv", "metrics_steady.csv",
                          "summary.json"]
    _write_json(out / "summary.json", summary)
    return 0


def _tv(a: DiscretePmf, b: DiscretePmf) -> float:
    n = max(len(a.mass), len(b.mass))
    x = np.zeros(n)
    y = np.zeros(n)
    x[:len(a.mass)] = a.mass
    y[:len(b.mass)] = b.mass
    return float(0.5 * np.abs(x - y).sum())


def cmd_compare(config_path: str, out_dir: str, slots: int = DEFAULT_SLOTS,
                reps: int = DEFAULT_REPS) -> int:
    cfg = _load(config_path)
    out = Path(out_dir)
    an_dir = out / "analytic"
    sim_dir = out / "simulation"
    an_dir.mkdir(parents=True, exist_ok=True)
    sim_dir.mkdir(parents=True, exist_ok=True)

    analytic_pmfs, an_summary = _analytic_outputs(cfg)
    for name, pmf in analytic_pmfs.items():
        _write_pmf_csv(an_dir / name, pmf, cfg)
    an_summary["mode"] = "analytic"
    an_summary["outputs"] = sorted(analytic_pmfs) + ["summary.json"]
    _write_json(an_dir / "summary.json", an_summary)

    report = simulate(cfg, num_slots=slots, replications=reps)
    pmf_csv, frac_csv = _report_csvs(report, cfg)
    _atomic_write(sim_dir / "metrics_pmfs.csv", pmf_csv)
    _atomic_write(sim_dir / "metrics_steady.csv", frac_csv)
    sim_summary = _report_summary(report, cfg)
    sim_summary["mode"] = "simulate"
    sim_summary["slots"] = slots
    sim_summary["outputs"] = ["metrics_pmfs.csv", "metrics_steady.csv",
                              "summary.json"]
    _write_json(sim_dir / "summary.json", sim_summary)

    name_of = {("bs", "queue_length"): "bs_queue_length_pmf.csv",
               ("bs", "delay"): "bs_delay_pmf.csv",
               ("d2d", "queue_length"): "d2d_queue_length_pmf.csv",
               ("d2d", "delay"): "d2d_delay_pmf.csv"}
    rows = []
    for key, fname in sorted(name_of.items()):
        if key[0] == "d2d" and cfg.alpha == 0:
            rows.append({"class": key[0], "metric": key[1], "tv": None,
                         "tolerance": COMPARE_TOLERANCES.get(key),
                         "status": "skipped (alpha = 0: no D2D tier)"})
            continue
        emp = report.pmfs.get(key)
        if emp is None:
            rows.append({"class": key[0], "metric": key[1], "tv": None,
                         "tolerance": COMPARE_TOLERANCES.get(key),
                         "status": "skipped (no empirical samples)"})
            continue
        tv = _tv(emp, analytic_pmfs[fname])
        tol = COMPARE_TOLERANCES.get(key)
        status = "reported" if tol is None else \
            ("pass" if tv <= tol else "fail")
        rows.append({"class": key[0], "metric": key[1], "tv": tv,
                     "tolerance": tol, "status": status})

    header = _config_header(cfg)
    csv_rows = "\n".join(
        f"{r['class']},{r['metric']},"
        f"{'' if r['tv'] is None else repr(r['tv'])},"
        f"{'' if r['tolerance'] is None else repr(r['tolerance'])},"
        f"{r['status']}" for r in rows)
    _atomic_write(out / "comparison.csv",
                  header + "class,metric,tv,tolerance,status\n"
                  + csv_rows + "\n")
    _write_json(out / "comparison.json",
                {"mode": "compare", "config": config_to_dict(cfg),
                 "slots": slots, "replications": reps, "rows": rows})
    for r in rows:
        tv_txt = "-" if r["tv"] is None else f"{r['tv']:.4f}"
        print(f"compare {r['class']}/{r['metric']}: tv={tv_txt} "
              f"[{r['status']}]")
    return 0


def _parse_values(spec: str) -> list:
    """Accept '0.1,0.2,0.3' or range syntax '0.01..0.15 step 0.01'."""
    spec = spec.strip()
    if ".." in spec:
        lo_txt, rest = spec.split("..", 1)
        if "step" in rest:
            hi_txt, step_txt = rest.split("step", 1)
        else:
            raise ValueError("range syntax is 'lo..hi step s'")
        lo, hi, step = float(lo_txt), float(hi_txt), float(step_txt)
        n = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 12) for i in range(n)]
    return [float(v) for v in spec.split(",") if v.strip()]


def cmd_sweep(config_path: str, out_dir: str, param: str, values_spec: str,
              slots: int = DEFAULT_SLOTS, reps: int = DEFAULT_REPS) -> int:
    cfg = _load(config_path)
    if param not in config_to_dict(cfg):
        print(f"error: unknown sweep parameter {param!r}", file=sys.stderr)
        return 2
    values = _parse_values(values_spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    run_baseline = param != "alpha" and cfg.alpha > 0
    rows = []
    for idx, value in enumerate(values):
        point = config_with(cfg, **{param: type(getattr(cfg, param))(value)})
        # per-point seed split keeps points independent and reproducible
        point = config_with(point, seed=_point_seed(cfg.seed, idx))
        report = simulate(point, num_slots=slots, replications=reps)
        rows.append((value, "bs_proposed", report.steady_bs_fraction,
                     report.steady_bs_ci))
        if not np.isnan(report.steady_d2d_fraction):
            rows.append((value, "d2d_proposed", report.steady_d2d_fraction,
                         report.steady_d2d_ci))
        if run_baseline:
            base = config_with(point, alpha=0.0)
            breport = simulate(base, num_slots=slots, replications=reps)
            rows.append((value, "bs_baseline", breport.steady_bs_fraction,
                         breport.steady_bs_ci))

    header = _config_header(cfg)
    body = "\n".join(f"{param},{v!r},{series},{float(f)!r},{float(ci)!r}"
                     for v, series, f, ci in rows)
    _atomic_write(out / "sweep.csv",
                  header + "param,value,series,steady_fraction,ci\n"
                  + body + "\n")
    _write_json(out / "summary.json",
                {"mode": "sweep", "config": config_to_dict(cfg),
                 "param": param, "values": values, "slots": slots,
                 "replications": reps, "baseline_included": run_baseline,
                 "rows": [{"value": v, "series": s, "steady_fraction": f,
                           "ci": ci} for v, s, f, ci in rows]})
    return 0


def _point_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence(
        [master_seed, 7, index]).generate_state(1)[0])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cogcache",
        description="Analytics and simulation for a cache-enabled cognitive "
                    "D2D cellular network")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to a 'key = value' config file")
        p.add_argument("out_dir", help="output directory")

    p = sub.add_parser("analytic", help="closed-form PMFs and probabilities")
    common(p)
    p = sub.add_parser("simulate", help="Monte Carlo replications")
    common(p)
    p.add_argument("--slots", type=int, default=DEFAULT_SLOTS)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p = sub.add_parser("compare", help="analytic vs simulation TV distances")
    common(p)
    p.add_argument("--slots", type=int, default=DEFAULT_SLOTS)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p = sub.add_parser("sweep", help="parameter sweep of the simulator")
    common(p)
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True,
                   help="'0.1,0.2' or '0.01..0.15 step 0.01'")
    p.add_argument("--slots", type=int, default=DEFAULT_SLOTS)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)

    args = parser.parse_args(argv)
    try:
        if args.command == "analytic":
            return cmd_analytic(args.config, args.out_dir)
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out_dir, args.slots,
                                args.reps)
        if args.command == "compare":
            return cmd_compare(args.config, args.out_dir, args.slots,
                               args.reps)
        if args.command == "sweep":
            return cmd_sweep(args.config, args.out_dir, args.param,
                             args.values, args.slots, args.reps)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, StabilityError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
