"""Analysis-ready result files: delimited series, summary table, run record,
and rendered figures.

`metrics.csv` is the figure-data contract (fixed, versioned schema); the
figures under `figures/` are rendered from exactly the same arrays. All text
output is byte-stable given an identical run record.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .architectures import ARCH_CLDI, PAPER_CLDI_DL_BPS, overhead_report
from .config import RealizationConfig, config_dict
from .engine import CampaignResult
from .neural import count_weights

CSV_SCHEMA_VERSION = 1
METRICS_COLUMNS = ("tti", "arch", "holding_mean", "holding_std",
                   "overflow_mean", "overflow_std", "power_mw_mean",
                   "power_mw_std", "collisions_cum_mean", "collisions_cum_std")
SUMMARY_COLUMNS = ("arch", "ul_overhead_bps", "dl_overhead_bps", "collisions",
                   "power_cost_mw", "holding_cost_packets")


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


@dataclass
class RunRecord:
    config: RealizationConfig
    archs: list
    ttis: int
    realizations: int
    series: dict        # arch -> column -> np.ndarray
    summary: dict       # arch -> scalar table
    holding_by_delta: dict
    overhead: dict      # arch -> {ul_bps, dl_bps, ...}
    weight_count: int
    weight_count_paper: int
    seeds: list
    counters: dict      # arch -> actually moved coordination bits
    conservation_violations: dict
    failures: list
    wall_s: float
    extra: dict = field(default_factory=dict)


def build_run_record(campaign: CampaignResult) -> RunRecord:
    cfg = campaign.cfg
    w_bias = count_weights(cfg.base_stations, cfg.subcarriers,
                           cfg.max_mod_order, len(cfg.power_levels_mw),
                           convention="bias")
    w_paper = count_weights(cfg.base_stations, cfg.subcarriers,
                            cfg.max_mod_order, len(cfg.power_levels_mw),
                            convention="paper")
    series, summary, by_delta, overhead, counters, conservation = ({} for _ in range(6))
    for arch, agg in campaign.per_arch.items():
        h_mean, h_std = agg.series["holding"]
        o_mean, o_std = agg.series["overflow"]
        p_mean, p_std = agg.series["power_mw"]
        c_mean, c_std = agg.series["collisions_cum"]
        series[arch] = {
            "holding_mean": h_mean, "holding_std": h_std,
            "overflow_mean": o_mean, "overflow_std": o_std,
            "power_mw_mean": p_mean, "power_mw_std": p_std,
            "collisions_cum_mean": c_mean, "collisions_cum_std": c_std,
        }
        ul, dl = overhead_report(arch, cfg.tti_s, weight_count=w_bias,
                                 broadcast_period=cfg.broadcast_period)
        entry = {"ul_bps": ul, "dl_bps": dl}
        if arch == ARCH_CLDI:
            entry["dl_bps_published"] = PAPER_CLDI_DL_BPS
            entry["weight_count"] = w_bias
        overhead[arch] = entry
        summary[arch] = {
            "ul_overhead_bps": ul,
            "dl_overhead_bps": dl,
            "collisions": agg.final["collisions"],
            "power_cost_mw": agg.final["power_cost_mw"],
            "holding_cost_packets": agg.final["holding_cost_packets"],
            "overflow_packets": agg.final["overflow_packets"],
        }
        by_delta[arch] = agg.holding_by_delta
        counters[arch] = {"ul_bits": agg.ul_bits, "dl_bits": agg.dl_bits}
        conservation[arch] = agg.conservation_violations
    n_real = next(iter(campaign.per_arch.values())).n_realizations \
        if campaign.per_arch else 0
    seeds = [[cfg.seed, idx] for idx in range(n_real)]
    return RunRecord(config=cfg, archs=list(campaign.per_arch), ttis=campaign.ttis,
                     realizations=n_real, series=series, summary=summary,
                     holding_by_delta=by_delta, overhead=overhead,
                     weight_count=w_bias, weight_count_paper=w_paper,
                     seeds=seeds, counters=counters,
                     conservation_violations=conservation,
                     failures=campaign.failures, wall_s=campaign.wall_s)


def write_metrics_csv(record: RunRecord, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")
        for arch in record.archs:
            cols = record.series[arch]
            for t in range(record.ttis):
                row = [str(t + 1), arch]
                for name in METRICS_COLUMNS[2:]:
                    row.append(_fmt(cols[name][t]))
                fh.write(",".join(row) + "\n")


def write_summary_csv(record: RunRecord, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for arch in record.archs:
            s = record.summary[arch]
            fh.write(",".join([arch] + [_fmt(s[c]) for c in SUMMARY_COLUMNS[1:]])
                     + "\n")


def write_run_json(record: RunRecord, path: str) -> None:
    payload = {
        "schema_version": CSV_SCHEMA_VERSION,
        "config": config_dict(record.config),
        "archs": record.archs,
        "ttis": record.ttis,
        "realizations": record.realizations,
        "seeds": record.seeds,
        "summary": record.summary,
        "overhead": record.overhead,
        "holding_by_delta": record.holding_by_delta,
        "weight_count": record.weight_count,
        "weight_count_paper_convention": record.weight_count_paper,
        "coordination_bits_counted": record.counters,
        "conservation_violations": record.conservation_violations,
        "series": {arch: {k: [float(v) for v in arr] for k, arr in cols.items()}
                   for arch, cols in record.series.items()},
        "failures": record.failures,
        "wall_s": record.wall_s,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


_FIGURES = (
    ("holding_cost", "holding", "Cumulative average holding cost [packets]"),
    ("overflow_cost", "overflow", "Cumulative average overflow [packets]"),
    ("power_cost", "power_mw", "Cumulative average power cost [mW]"),
    ("collisions", "collisions_cum", "Cumulative collisions"),
)


def render_figures(record: RunRecord, out_dir: str) -> list:
    """Render the four cumulative-metric figures next to the CSV output."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    ttis = np.arange(1, record.ttis + 1)
    written = []
    for stem, metric, ylabel in _FIGURES:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for arch in record.archs:
            mean = record.series[arch][f"{metric}_mean"]
            std = record.series[arch][f"{metric}_std"]
            line, = ax.plot(ttis, mean, label=arch.upper(), linewidth=1.4)
            ax.fill_between(ttis, mean - std, mean + std,
                            color=line.get_color(), alpha=0.18, linewidth=0)
        ax.set_xlabel("TTI")
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(fig_dir, f"{stem}.png")
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)
    return written


def emit_results(record: RunRecord, out_dir: str, figures: bool = True) -> dict:
    """Write metrics.csv, summary.csv, run.json (and figures) to out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "metrics": os.path.join(out_dir, "metrics.csv"),
        "summary": os.path.join(out_dir, "summary.csv"),
        "run": os.path.join(out_dir, "run.json"),
    }
    write_metrics_csv(record, paths["metrics"])
    write_summary_csv(record, paths["summary"])
    write_run_json(record, paths["run"])
    if figures:
        paths["figures"] = render_figures(record, out_dir)
    return paths
