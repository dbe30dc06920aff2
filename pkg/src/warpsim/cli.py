"""Command-line entry point: ``simulate <scenario-file> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .metrics import export, summarize
from .scenario import ConfigError, ScenarioConfig, Traffic, run_scenario

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simulate", description="Run one wARP-Path wireless scenario.")
    p.add_argument("scenario", help="scenario file with key = value lines")
    p.add_argument("--seed", type=int, help="override the seed from the scenario file")
    p.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    p.add_argument("--traffic", choices=[t.value for t in Traffic], help="override the traffic type")
    p.add_argument("--trace", choices=["full", "summary"], default="summary",
                   help="full writes every frame event; summary only app and drop events")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ScenarioConfig.from_file(args.scenario, seed=args.seed, traffic=args.traffic)
    except ConfigError as exc:
        print(f"simulate: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"simulate: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with (out / "trace.csv").open("w", newline="") as sink:
            result = run_scenario(cfg, trace_sink=sink, full_trace=args.trace == "full")
        export(result, out)
    except OSError as exc:
        print(f"simulate: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    s = summarize(result.records, cfg.sim_end)
    delay = "n/a" if s.avg_e2e_delay is None else f"{s.avg_e2e_delay:.4f} s"
    print(f"{cfg.traffic.value} seed={cfg.seed}: goodput {s.goodput_ratio:.2f}%, avg delay {delay}, "
          f"{s.received_packets}/{s.sent_packets} packets delivered -> {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
