"""Command line front end.

Subcommands: ``gen-channel`` (one realization as JSON), ``estimate`` (single
trial, prints per-estimator metrics), ``sweep`` (config-driven batch to CSV),
``rank-hist`` (histogram a results CSV).  Exit codes: 0 on success, 2 for
configuration problems, 3 when an estimator fails in single-trial mode.
"""

from __future__ import annotations

import argparse
import sys

from .channel import generate_channel, normalize_entry_power
from .exceptions import ConfigError, EstimatorError, GenerationError
from .harness import (load_config, rank_distribution, read_records_csv,
                      run_sweep, run_trial, write_records_csv)


def _add_config_arg(parser, required=True):
    parser.add_argument("--config", required=required,
                        help="experiment config JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcchan",
        description="Matrix-completion channel estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-channel", help="emit one channel realization JSON")
    _add_config_arg(p, required=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--raw", action="store_true",
                   help="skip unit entry-power normalization")
    p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("estimate", help="run one trial and print metrics")
    _add_config_arg(p)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--point", type=float, default=None,
                   help="sweep-axis value for this trial")

    p = sub.add_parser("sweep", help="run the configured sweep to CSV")
    _add_config_arg(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("rank-hist", help="histogram ranks from a results CSV")
    p.add_argument("--csv", required=True, help="sweep output CSV")
    return parser


def _cmd_gen_channel(args) -> int:
    config = load_config(args.config) if args.config else load_config({})
    realization = generate_channel(config.channel.params(),
                                   config.system.tx_geometry(),
                                   config.system.rx_geometry(),
                                   seed=args.seed)
    if not args.raw:
        realization = normalize_entry_power(realization)
    text = realization.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return 0


def _cmd_estimate(args) -> int:
    config = load_config(args.config)
    records = run_trial(config, args.trial, point_value=args.point)
    failed = False
    for rec in records:
        if rec.error:
            failed = True
            print(f"{rec.estimator} failed: {rec.error}")
            continue
        se = " ".join(f"se@{snr:g}dB={rec.se[snr]:.3f}"
                      for snr in sorted(rec.se))
        print(f"{rec.estimator} nmse_db={rec.nmse_db:.3f} r_hat={rec.r_hat} "
              f"r_sub={rec.r_sub} flops={rec.flops:.3e} "
              f"wall_ms={rec.wall_ms:.1f} {se}")
    return 3 if failed else 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)

    def progress(done, total):
        if not args.quiet and (done % 50 == 0 or done == total):
            print(f"{done}/{total} trials", file=sys.stderr)

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        count = write_records_csv(run_sweep(config, progress=progress),
                                  config, fh)
    if not args.quiet:
        print(f"wrote {count} records to {args.out}", file=sys.stderr)
    return 0


def _cmd_rank_hist(args) -> int:
    with open(args.csv, "r", encoding="utf-8", newline="") as fh:
        rows = read_records_csv(fh)
    hist = rank_distribution(rows)
    names = sorted(hist.series)
    print("rank," + ",".join(names))
    centers = (hist.edges[:-1] + 0.5).astype(int)
    for i, center in enumerate(centers):
        vals = ",".join(f"{hist.series[name][i]:.6f}" for name in names)
        print(f"{center},{vals}")
    return 0


_COMMANDS = {"gen-channel": _cmd_gen_channel, "estimate": _cmd_estimate,
             "sweep": _cmd_sweep, "rank-hist": _cmd_rank_hist}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 0
    except (ConfigError, GenerationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EstimatorError as exc:
        print(f"estimator failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
