"""Config parsing, result emission and the command-line surface."""

import json
import subprocess
import sys

import numpy as np
import pytest

from gfla.config import (ConfigError, RealizationConfig, format_config,
                         parse_config, parse_config_text)
from gfla.engine import run_campaign
from gfla.report import (METRICS_COLUMNS, SUMMARY_COLUMNS, build_run_record,
                         emit_results)


def test_empty_config_gives_reference_defaults():
    cfg = parse_config_text("")
    assert cfg == RealizationConfig()
    assert cfg.gamma == 0.99
    assert cfg.tti_s == 0.01
    assert cfg.preambles == 64
    assert cfg.path_loss_exp == 3.5
    assert cfg.p_on_mw == 320.0
    assert cfg.buffer_capacity == 25
    assert cfg.update_period == 200


def test_config_range_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="1"):
        parse_config_text("gamma = 1.5")
    with pytest.raises(ConfigError, match="3"):
        parse_config_text("users = 4\nttis = 10\nq_bar = 7\n")


def test_config_unknown_key_and_malformed_line():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("bogus = 1")
    with pytest.raises(ConfigError, match="malformed"):
        parse_config_text("users 64")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config_text("users = sixty")


def test_config_desk_scale_example():
    cfg = parse_config_text("arch=CLDI\nusers=64\nttis=3000")
    assert cfg.arch == "cldi"
    assert cfg.users == 64
    assert cfg.ttis == 3000


def test_config_comments_blank_lines_and_lists():
    cfg = parse_config_text("# comment\n\nreally_unknown_not= but commented"
                            .replace("really_unknown_not= but commented", "")
                            + "\ndelay_classes = 2, 6\npower_levels_mw = 5,10\n")
    assert cfg.delay_classes == (2, 6)
    assert cfg.power_levels_mw == (5.0, 10.0)


def test_config_round_trip_through_text():
    cfg = RealizationConfig(users=32, arch="dacc", ttis=500, seed=42,
                            ber_literal=True, q_bar=0.45,
                            power_levels_mw=(5.0, 25.0))
    assert parse_config_text(format_config(cfg)) == cfg


def test_config_cross_validation_slot_quantum():
    with pytest.raises(ConfigError, match="slot_quantum"):
        parse_config_text("slot_quantum = 0.05\ncw_a = 8\nmax_mod_order = 4")


def test_parse_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "nope.cfg")


@pytest.fixture(scope="module")
def small_record():
    cfg = RealizationConfig(users=5, base_stations=2, subcarriers=2,
                            preambles=4, ttis=60, realizations=2, seed=21)
    campaign = run_campaign(cfg, ["il", "baseline"], workers=1)
    return build_run_record(campaign)


def test_metrics_csv_schema_and_monotone_collisions(small_record, tmp_path):
    paths = emit_results(small_record, tmp_path / "out", figures=False)
    lines = (tmp_path / "out" / "metrics.csv").read_text().splitlines()
    assert lines[0] == ",".join(METRICS_COLUMNS)
    assert len(lines) == 1 + 2 * 60  # two architectures x 60 TTIs
    il_rows = [l.split(",") for l in lines[1:] if l.split(",")[1] == "il"]
    coll = [float(r[-2]) for r in il_rows]
    assert all(a <= b + 1e-12 for a, b in zip(coll, coll[1:]))
    assert paths["metrics"].endswith("metrics.csv")


def test_summary_csv_il_overhead_zero(small_record, tmp_path):
    emit_results(small_record, tmp_path / "s", figures=False)
    lines = (tmp_path / "s" / "summary.csv").read_text().splitlines()
    assert lines[0] == ",".join(SUMMARY_COLUMNS)
    row = dict(zip(SUMMARY_COLUMNS, lines[1].split(",")))
    assert row["arch"] == "il"
    assert float(row["ul_overhead_bps"]) == 0.0
    assert float(row["dl_overhead_bps"]) == 0.0


def test_run_json_round_trips_config_and_is_byte_stable(small_record, tmp_path):
    emit_results(small_record, tmp_path / "a", figures=False)
    emit_results(small_record, tmp_path / "b", figures=False)
    a = (tmp_path / "a" / "run.json").read_bytes()
    b = (tmp_path / "b" / "run.json").read_bytes()
    assert a == b
    payload = json.loads(a)
    assert payload["config"]["users"] == 5
    assert payload["coordination_bits_counted"]["il"] == {"ul_bits": 0,
                                                          "dl_bits": 0}
    assert payload["conservation_violations"] == {"il": 0, "baseline": 0}
    echo = "\n".join(f"{k} = {','.join(map(repr, v)) if isinstance(v, list) else v}"
                     for k, v in payload["config"].items()
                     if k in ("users", "ttis", "seed"))
    cfg = parse_config_text(echo)
    assert cfg.users == 5 and cfg.seed == 21


def test_single_realization_std_columns_zero(tmp_path):
    cfg = RealizationConfig(users=4, base_stations=1, subcarriers=2,
                            preambles=4, ttis=25, realizations=1, seed=3)
    record = build_run_record(run_campaign(cfg, ["baseline"], workers=1))
    emit_results(record, tmp_path / "one", figures=False)
    lines = (tmp_path / "one" / "metrics.csv").read_text().splitlines()[1:]
    for line in lines:
        parts = line.split(",")
        assert float(parts[3]) == 0.0  # holding_std
        assert float(parts[5]) == 0.0  # overflow_std
        assert float(parts[7]) == 0.0  # power_std
        assert float(parts[9]) == 0.0  # collisions_std


def test_figures_rendered_alongside_csv(small_record, tmp_path):
    paths = emit_results(small_record, tmp_path / "figs", figures=True)
    assert len(paths["figures"]) == 4
    for p in paths["figures"]:
        assert p.endswith(".png")
        assert (tmp_path / "figs" / "figures").exists()


def test_cldi_overhead_entry_reports_published_figure(tmp_path):
    cfg = RealizationConfig(users=3, base_stations=1, subcarriers=2,
                            preambles=4, ttis=25, realizations=1, seed=4)
    record = build_run_record(run_campaign(cfg, ["cldi"], workers=1))
    entry = record.overhead["cldi"]
    assert entry["dl_bps_published"] == 20496.0
    assert entry["dl_bps"] == pytest.approx(
        16 * record.weight_count / (cfg.broadcast_period * cfg.tti_s))


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "gfla.cli", *args],
                          capture_output=True, text=True, timeout=600)


def test_cli_weights_prints_both_conventions():
    proc = run_cli("weights", "--dims", "nb=2,ns=8,m=4,p=5")
    assert proc.returncode == 0
    assert "bias: total 17793" in proc.stdout
    assert "paper: total" in proc.stdout


def test_cli_weights_rejects_bad_dims():
    proc = run_cli("weights", "--dims", "oops")
    assert proc.returncode == 2


def test_cli_run_end_to_end(tmp_path):
    out = tmp_path / "cli_out"
    proc = run_cli("run", "--arch", "baseline", "--realizations", "1",
                   "--ttis", "40", "--seed", "9", "--out", str(out),
                   "--quiet")
    assert proc.returncode == 0, proc.stderr
    assert (out / "metrics.csv").exists()
    assert (out / "summary.csv").exists()
    assert (out / "run.json").exists()
    assert (out / "figures" / "holding_cost.png").exists()


def test_cli_run_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("gamma = 2.0\n")
    proc = run_cli("run", "--config", str(bad), "--out", str(tmp_path / "x"))
    assert proc.returncode == 2
    assert "config error" in proc.stderr
