"""Command line entry point: one subcommand per experiment, CSV on output."""

import argparse
import json
import sys

from .channel import SystemConfig
from .errors import DimRedError
from .harness import ExperimentConfig, db_to_linear, emit_csv, run_experiment, write_csv

SUBCOMMANDS = {
    "mi-vs-snr": "MiVsSnr",
    "sumrate-vs-n": "SumRateVsN",
    "sumrate-vs-m": "SumRateVsM",
    "userrate-vs-n": "UserRateVsN",
    "outage": "OutageVsN",
    "density": "DensityScaling",
    "csi-sweep": "CsiSweep",
    "downlink": "DownlinkVsN",
    "fronthaul": "FronthaulVsT",
}

# which list-valued flag is the swept parameter
SWEEP_FLAG = {
    "MiVsSnr": "snr_db",
    "SumRateVsN": "dims",
    "UserRateVsN": "dims",
    "OutageVsN": "dims",
    "DownlinkVsN": "dims",
    "SumRateVsM": "antennas",
    "DensityScaling": "users",
    "CsiSweep": "csi_db",
    "FronthaulVsT": "coherence",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text):
    return [x.strip().lower() for x in text.split(",") if x.strip()]


def _attach_negative_values(argv):
    """Turn ``--snr-db -10,0`` into ``--snr-db=-10,0`` so argparse accepts it."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--snr-db", "--csi-db", "--power-dbm"):
            nxt = next(it, None)
            if nxt is not None and nxt[:1] == "-" and nxt[1:2].isdigit():
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--users", type=_int_list, help="K (density: list of K values)")
    common.add_argument("--rrhs", type=_int_list, help="L")
    common.add_argument("--antennas", type=_int_list, help="M (sumrate-vs-m: list)")
    common.add_argument("--dims", type=_int_list, help="reduced dimensions N1,N2,...")
    common.add_argument("--snr-db", type=_float_list, help="uplink SNR in dB (mi-vs-snr: list)")
    common.add_argument("--power-dbm", type=float, help="per-RRH downlink power, 10^(x/10) linear")
    common.add_argument("--csi-db", type=_float_list, help="pilot SNRs in dB (csi-sweep)")
    common.add_argument("--coherence", type=_int_list, help="coherence block length(s)")
    common.add_argument("--threshold", type=float, help="outage rate threshold in bits")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--methods", type=_str_list)
    common.add_argument("--out", help="output CSV path (default: standard output)")
    common.add_argument("--config", help="JSON file with ExperimentConfig defaults")
    common.add_argument("--dump-trials", help="also write raw per-trial values to this CSV")

    parser = _Parser(prog="cran-dimred",
                     description="Distributed dimension reduction experiments for MIMO C-RAN.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for name, scenario in SUBCOMMANDS.items():
        sub.add_parser(name, parents=[common], help=f"{scenario} experiment")
    return parser


def _scalar(values, flag):
    if len(values) != 1:
        raise UsageError(f"{flag} takes a single value here, got {values}")
    return values[0]


def config_from_args(args):
    scenario = SUBCOMMANDS[args.command]
    raw = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
        if raw.pop("scenario", scenario) != scenario:
            raise UsageError("config file scenario does not match the subcommand")
    base = dict(raw.pop("base", {}))
    sweep_flag = SWEEP_FLAG[scenario]
    sweep = raw.pop("sweep", None)

    flag_to_field = {"users": "K", "rrhs": "L", "antennas": "M", "dims": "N"}
    for flag, fname in flag_to_field.items():
        values = getattr(args, flag)
        if values is None:
            continue
        if flag == sweep_flag:
            sweep = values
            if flag == "users":
                base["K"] = values[0]
            elif flag == "antennas":
                base["M"] = max(values)
            continue
        if flag == "dims" and scenario == "MiVsSnr":
            raw["dims"] = values
            continue
        base[fname] = _scalar(values, "--" + flag)
    if args.snr_db is not None:
        if sweep_flag == "snr_db":
            sweep = args.snr_db
        else:
            base["rho"] = db_to_linear(_scalar(args.snr_db, "--snr-db"))
    if args.power_dbm is not None:
        base["P"] = db_to_linear(args.power_dbm)
    if args.csi_db is not None:
        if sweep_flag != "csi_db":
            raise UsageError("--csi-db only applies to csi-sweep")
        sweep = args.csi_db
    if args.coherence is not None:
        if sweep_flag == "coherence":
            sweep = args.coherence
        else:
            base["T_coh"] = _scalar(args.coherence, "--coherence")
    if sweep_flag == "dims" and sweep is not None:
        base.setdefault("N", min(sweep))
    for flag, fname in (("threshold", "threshold_bits"), ("trials", "trials"),
                        ("seed", "seed"), ("methods", "methods"), ("out", "out_path")):
        v = getattr(args, flag)
        if v is not None:
            raw[fname] = v
    merged = SystemConfig().replace(**base) if base else SystemConfig()
    return ExperimentConfig(scenario=scenario, base=merged, sweep=sweep, **raw)


def main(argv=None):
    parser = build_parser()
    try:
        argv = sys.argv[1:] if argv is None else list(argv)
        args = parser.parse_args(_attach_negative_values(argv))
        if args.command is None:
            raise UsageError(parser.format_usage() + "cran-dimred: error: a subcommand is required")
        ecfg = config_from_args(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (DimRedError, TypeError) as exc:
        print(f"cran-dimred: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cran-dimred: cannot read config: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, OSError) else 1

    try:
        rows = run_experiment(ecfg, dump_trials=args.dump_trials)
    except DimRedError as exc:
        print(f"cran-dimred: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cran-dimred: I/O error: {exc}", file=sys.stderr)
        return 2
    try:
        if ecfg.out_path:
            emit_csv(rows, ecfg.out_path)
        else:
            write_csv(rows, sys.stdout)
    except OSError as exc:
        print(f"cran-dimred: I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
