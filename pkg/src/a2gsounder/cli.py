"""Command-line surface.

Subcommands:
  synth      scenario -> measurement capture file
  b2b        scenario -> back-to-back reference file
  calibrate  meas + ref + attenuator -> calibrated (CAL) file
  analyze    meas + ref (or CAL file) -> per-snapshot metrics + summary
  stability  B2B series -> relative amplitude/phase CSV
  report     metrics CSV -> route table CSV
  selftest   run the built-in invariant suite

Exit codes: 0 ok, 2 schema/config error, 3 missing input file,
4 malformed capture file, 5 dimension mismatch, 6 strict hash mismatch,
1 unexpected error.
"""

import argparse
import csv
import json
import sys

from .calibration import (CalibratedResponse, CalibrationError,
                          stability_stats)
from .capture_file import (CaptureFileError, HashMismatch, read_capture,
                           write_capture)
from .capture_sim import AttenuatorModel
from .config import SchemaError, parse_scenario
from .pipeline import (analyze_records, calibrate_records, metrics_rows,
                       run_b2b, run_synthesis, stability_rows, summarize,
                       write_rows_csv, write_rows_json)
from .selftest import run_selftest

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_SCHEMA = 2
EXIT_MISSING_FILE = 3
EXIT_FORMAT = 4
EXIT_DIMENSION = 5
EXIT_HASH = 6


def _load_scenario(path, seed_override=None):
    try:
        with open(path) as fh:
            document = json.load(fh)
    except FileNotFoundError:
        raise _Exit(EXIT_MISSING_FILE, f"scenario file not found: {path}")
    except json.JSONDecodeError as exc:
        raise _Exit(EXIT_SCHEMA, f"scenario file is not valid JSON: {exc}")
    if seed_override is not None:
        document.setdefault("capture", {})["noise_seed"] = seed_override
        document["capture"]["b2b_noise_seed"] = seed_override + 1
        document.setdefault("system", {})["seed"] = seed_override + 2
    return parse_scenario(document)


class _Exit(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _read(path, expected_hash=None, strict=False):
    try:
        return read_capture(path, expected_config_hash=expected_hash, strict_hash=strict)
    except FileNotFoundError:
        raise _Exit(EXIT_MISSING_FILE, f"capture file not found: {path}")
    except HashMismatch as exc:
        raise _Exit(EXIT_HASH, str(exc))
    except CaptureFileError as exc:
        raise _Exit(EXIT_FORMAT, str(exc))


def _attenuator(args, config=None):
    if args.attenuator_db is not None:
        return AttenuatorModel(nominal_loss_db=args.attenuator_db)
    if config is not None:
        return config.attenuator
    return AttenuatorModel()


def cmd_synth(args):
    config = _load_scenario(args.scenario, args.seed)
    records = run_synthesis(config)
    write_capture(args.out, records, config_hash=config.scenario_hash,
                  geometry_hash=config.geometry.content_hash(), record_type="MEAS")
    print(f"wrote {len(records)} snapshots to {args.out}")
    return EXIT_OK


def cmd_b2b(args):
    config = _load_scenario(args.scenario, args.seed)
    records = run_b2b(config, snapshot_count=args.snapshots)
    write_capture(args.out, records, config_hash=config.scenario_hash,
                  geometry_hash=config.geometry.content_hash(), record_type="B2B")
    print(f"wrote {len(records)} B2B snapshots to {args.out}")
    return EXIT_OK


def _check_same_hash(meas_header, ref_header, strict):
    if meas_header["config_hash"] != ref_header["config_hash"]:
        message = ("measurement and reference were produced by different configs "
                   f"({meas_header['config_hash'][:12]}... vs "
                   f"{ref_header['config_hash'][:12]}...)")
        if strict:
            raise _Exit(EXIT_HASH, message)
        print(f"warning: {message}", file=sys.stderr)


def cmd_calibrate(args):
    meas, meas_header = _read(args.meas, strict=args.strict_hash)
    ref, ref_header = _read(args.ref, strict=args.strict_hash)
    _check_same_hash(meas_header, ref_header, args.strict_hash)
    attenuator = _attenuator(args)
    try:
        cal = calibrate_records(meas, ref, attenuator)
    except CalibrationError as exc:
        raise _Exit(EXIT_DIMENSION, str(exc))
    write_capture(args.out, cal, config_hash=meas_header["config_hash"],
                  geometry_hash=meas_header["geometry_hash"], record_type="CAL")
    print(f"wrote {len(cal)} calibrated snapshots to {args.out}")
    return EXIT_OK


def cmd_analyze(args):
    config = _load_scenario(args.scenario) if args.scenario else None
    expected = config.scenario_hash if config else None

    if args.cal:
        cal_records, header = _read(args.cal, expected_hash=expected, strict=args.strict_hash)
        if header["record_type"] != "CAL":
            raise _Exit(EXIT_FORMAT, f"{args.cal} is a {header['record_type']} file, expected CAL")
        cal = [CalibratedResponse(h_f=r.tf, tone_plan=r.tone_plan, timestamp=r.timestamp,
                                  tx_position=r.tx_position, tx_tilt=r.tx_tilt,
                                  snapshot_index=r.snapshot_index)
               for r in cal_records]
    else:
        if not args.meas or not args.ref:
            raise _Exit(EXIT_SCHEMA, "analyze needs either --cal or both --meas and --ref")
        meas, meas_header = _read(args.meas, expected_hash=expected, strict=args.strict_hash)
        ref, ref_header = _read(args.ref, strict=args.strict_hash)
        _check_same_hash(meas_header, ref_header, args.strict_hash)
        attenuator = _attenuator(args, config)
        try:
            cal = calibrate_records(meas, ref, attenuator)
        except CalibrationError as exc:
            raise _Exit(EXIT_DIMENSION, str(exc))

    if config is None:
        raise _Exit(EXIT_SCHEMA, "analyze needs --scenario for the array geometry and gate")
    try:
        metrics = analyze_records(cal, config.geometry, config.gate, window=args.window)
    except ValueError as exc:
        raise _Exit(EXIT_DIMENSION, str(exc))

    rows = metrics_rows(metrics)
    if args.format == "json":
        write_rows_json(args.out, rows)
    else:
        write_rows_csv(args.out, rows, config_hash=expected)
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump(summarize(metrics, config_hash=expected or ""), fh, indent=2)
            fh.write("\n")
    print(f"analyzed {len(metrics)} snapshots -> {args.out}")
    return EXIT_OK


def cmd_stability(args):
    records, header = _read(args.ref, strict=args.strict_hash)
    try:
        report = stability_stats(records, port=args.port)
    except (CalibrationError, IndexError) as exc:
        raise _Exit(EXIT_DIMENSION, str(exc))
    rows = stability_rows(report)
    if args.format == "json":
        write_rows_json(args.out, rows)
    else:
        write_rows_csv(args.out, rows, config_hash=header.get("config_hash") or None)
    print(f"amplitude std {report.amplitude_std_db:.6f} dB, "
          f"phase std {report.phase_std_deg:.6f} deg -> {args.out}")
    return EXIT_OK


def cmd_report(args):
    config_hash = None
    try:
        with open(args.metrics) as fh:
            first = fh.readline()
            if first.startswith("# config_hash:"):
                config_hash = first.split(":", 1)[1].strip()
            else:
                fh.seek(0)
            reader = csv.DictReader(fh)
            rows = list(reader)
    except FileNotFoundError:
        raise _Exit(EXIT_MISSING_FILE, f"metrics file not found: {args.metrics}")
    if not rows:
        raise _Exit(EXIT_FORMAT, f"metrics file {args.metrics} has no rows")

    out_rows = []
    for i, row in enumerate(rows):
        out = {"location": i}
        for key in ("timestamp", "tx_x", "tx_y", "tx_z", "p_rx_db",
                    "sigma_tau_dbs", "gamma12_db", "gamma14_db", "argmax_v_column"):
            out[key] = row.get(key, "")
        for key, value in row.items():
            if key.startswith("col"):
                out[key] = value
        out_rows.append(out)
    if args.format == "json":
        write_rows_json(args.out, out_rows)
    else:
        write_rows_csv(args.out, out_rows, config_hash=config_hash)
    print(f"wrote route table with {len(out_rows)} locations to {args.out}")
    return EXIT_OK


def cmd_selftest(args):
    failures = run_selftest(verbose=True)
    if failures:
        print(f"{failures} selftest check(s) failed")
        return EXIT_UNEXPECTED
    print("all selftest checks passed")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="a2gs",
        description="Virtual air-to-ground massive-MIMO channel sounder")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--strict-hash", action="store_true",
                       help="escalate provenance hash mismatches to errors")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("synth", help="simulate a measurement capture")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override scenario seeds")

    p = sub.add_parser("b2b", help="simulate a back-to-back reference")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--snapshots", type=int, default=None)

    p = sub.add_parser("calibrate", help="divide out the system response")
    p.add_argument("--meas", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--attenuator-db", type=float, default=None)
    p.add_argument("--strict-hash", action="store_true")

    p = sub.add_parser("analyze", help="compute per-snapshot metrics")
    p.add_argument("--scenario", required=True)
    p.add_argument("--meas")
    p.add_argument("--ref")
    p.add_argument("--cal")
    p.add_argument("--out", required=True)
    p.add_argument("--summary")
    p.add_argument("--attenuator-db", type=float, default=None)
    p.add_argument("--window", choices=("rect", "hann"), default="rect")
    add_common(p)

    p = sub.add_parser("stability", help="B2B stability statistics")
    p.add_argument("--ref", required=True)
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--out", required=True)
    add_common(p)

    p = sub.add_parser("report", help="route table from a metrics CSV")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True)
    add_common(p)

    sub.add_parser("selftest", help="run the invariant suite")
    return parser


_COMMANDS = {
    "synth": cmd_synth,
    "b2b": cmd_b2b,
    "calibrate": cmd_calibrate,
    "analyze": cmd_analyze,
    "stability": cmd_stability,
    "report": cmd_report,
    "selftest": cmd_selftest,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _Exit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except Exception as exc:
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
