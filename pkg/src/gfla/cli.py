"""Command-line front end: launch campaigns, verify oracles, count weights."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .architectures import ALL_ARCHS
from .config import ConfigError, RealizationConfig, parse_config
from .neural import count_weights, weight_breakdown


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gfla",
        description="Grant-free mMTC uplink campaigns with learned link "
                    "adaptation (IL / DACC / CLDI) against a reactive-HARQ "
                    "baseline.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a simulation campaign")
    run.add_argument("--config", help="flat key=value config file")
    run.add_argument("--arch", choices=list(ALL_ARCHS) + ["all"],
                     help="architecture to simulate (default: config value)")
    run.add_argument("--realizations", type=int, help="independent realizations")
    run.add_argument("--ttis", type=int, help="TTIs per realization")
    run.add_argument("--seed", type=int, help="campaign master seed")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--no-figures", action="store_true",
                     help="skip figure rendering (CSV/JSON only)")
    run.add_argument("--quiet", action="store_true")

    sub.add_parser("verify", help="run the built-in oracle suite")

    weights = sub.add_parser("weights", help="print network parameter counts")
    weights.add_argument("--dims", default="nb=2,ns=8,m=4,p=5",
                         help="comma list nb=..,ns=..,m=..,p=.. "
                              "(base stations, subcarriers, max modulation "
                              "order, power levels)")
    return parser


def _load_config(args) -> RealizationConfig:
    cfg = parse_config(args.config) if args.config else RealizationConfig()
    overrides = {}
    for name in ("arch", "realizations", "ttis", "seed"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _cmd_run(args) -> int:
    from .engine import run_campaign, worker_count
    from .report import build_run_record, emit_results

    cfg = _load_config(args)
    archs = list(ALL_ARCHS) if cfg.arch == "all" else [cfg.arch]
    say = (lambda *a, **k: None) if args.quiet else print
    say(f"campaign: archs={archs} users={cfg.users} ttis={cfg.ttis} "
        f"realizations={cfg.realizations} seed={cfg.seed} "
        f"workers={worker_count()}")
    done = []

    def progress(arch, idx):
        done.append(1)
        say(f"  [{len(done)}/{len(archs) * cfg.realizations}] {arch} "
            f"realization {idx}")

    campaign = run_campaign(cfg, archs, progress=progress)
    for failure in campaign.failures:
        say(f"  FAILED {failure['arch']} realization "
            f"{failure['realization']}: {failure['error']}")
    record = build_run_record(campaign)
    paths = emit_results(record, args.out, figures=not args.no_figures)
    say(f"wrote {paths['metrics']}, {paths['summary']}, {paths['run']}")
    if not args.no_figures:
        say(f"figures: {', '.join(paths['figures'])}")
    for arch in record.archs:
        s = record.summary[arch]
        line = (f"{arch:>8}: power {s['power_cost_mw']:.2f} mW, holding "
                f"{s['holding_cost_packets']:.3f} pkt, collisions "
                f"{s['collisions']:.1f}, overhead UL {s['ul_overhead_bps']:.0f} "
                f"/ DL {s['dl_overhead_bps']:.0f} bit/s")
        if arch == "cldi":
            line += (f" (published DL figure "
                     f"{record.overhead[arch]['dl_bps_published']:.0f} bit/s)")
        say(line)
    return 1 if campaign.failures and not record.archs else 0


def _cmd_verify(_args) -> int:
    from .verify import run_verify
    return 0 if run_verify() else 1


def _cmd_weights(args) -> int:
    try:
        parts = dict(kv.split("=") for kv in args.dims.split(","))
        nb, ns = int(parts["nb"]), int(parts["ns"])
        m, p = int(parts["m"]), int(parts["p"])
    except (KeyError, ValueError):
        print(f"could not parse --dims {args.dims!r}; expected "
              "nb=..,ns=..,m=..,p=..", file=sys.stderr)
        return 2
    for convention in ("bias", "paper"):
        breakdown = weight_breakdown(nb, ns, m, p, convention)
        total = count_weights(nb, ns, m, p, convention)
        blocks = ", ".join(f"{k}={v}" for k, v in breakdown.items())
        print(f"{convention:>5}: total {total} ({blocks}); "
              f"16-bit broadcast {2 * total} bytes")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "weights":
            return _cmd_weights(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
