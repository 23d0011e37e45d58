"""Command-line utility: case control, imports, detection, serving.

Exit codes: 0 success, 2 usage, 30 import completed with failed status,
and one stable code per engine error class (see EXIT_CODES).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .cases import CaseManager, ImportConfig, WatchConfig
from .detection import DetectionThresholds, interval_histogram, port_scan_report
from .errors import EngineError
from .ingest import run_import

EXIT_IMPORT_FAILED = 30

EXIT_CODES = {
    "unknown_magic": 10,
    "unsupported_version": 11,
    "truncated_record": 12,
    "unrepairable": 13,
    "out_of_order_input": 14,
    "schema_conflict": 15,
    "storage_full": 16,
    "unknown_field": 17,
    "invalid_spec": 18,
    "too_many_buckets": 19,
    "unknown_format": 20,
    "corrupt_archive": 21,
    "unsafe_path": 22,
    "path_outside_case": 23,
    "not_found": 24,
    "duplicate_id": 25,
    "case_busy": 26,
    "case_stopped": 27,
    "bind_failure": 28,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="flowcase",
        description="Case-based network flow indexing, querying and scan detection.",
    )
    p.add_argument(
        "--data-root",
        default=os.environ.get("FLOWCASE_DATA_ROOT", "./flowcase-data"),
        help="directory holding all cases (env: FLOWCASE_DATA_ROOT)",
    )
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("create", help="create a new case")
    sp.add_argument("case_id")

    sub.add_parser("list", help="list cases")

    sp = sub.add_parser("status", help="show case status")
    sp.add_argument("case_id", nargs="?")

    sp = sub.add_parser("backup", help="archive a case to a tgz")
    sp.add_argument("case_id")
    sp.add_argument("out_path")

    sp = sub.add_parser("restore", help="restore an archived case under a new id")
    sp.add_argument("archive")
    sp.add_argument("case_id")

    sp = sub.add_parser("destroy", help="delete a case and everything under it")
    sp.add_argument("case_id")

    sp = sub.add_parser("import", help="index captures / csv / json into a case")
    sp.add_argument("case_id")
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--config-id", default=None, help="use a saved import config")
    sp.add_argument("--source-kind", choices=("pcap", "csv", "json", "auto"), default="auto")
    sp.add_argument("--no-repair", action="store_true", help="fail on damaged captures")
    sp.add_argument("--day", default=None, help="force day partition for undated rows")
    sp.add_argument("--enrichment", default=None, help="ip<TAB>name table for flows")

    dp = sub.add_parser("detect", help="run detection analytics")
    dsub = dp.add_subparsers(dest="detector", required=True)
    for name in ("portscan", "histogram"):
        sp = dsub.add_parser(name)
        sp.add_argument("case_id")
        sp.add_argument("--day", required=True)
        if name == "portscan":
            sp.add_argument("--pair-min", type=int, default=10)
            sp.add_argument("--total-min", type=int, default=500)
            sp.add_argument("--csv", action="store_true", help="sender,receiver,ports rows")

    wp = sub.add_parser("watch", help="manage watched drop directories")
    wsub = wp.add_subparsers(dest="action", required=True)
    sp = wsub.add_parser("add")
    sp.add_argument("case_id")
    sp.add_argument("watch_id")
    sp.add_argument("directory")
    sp.add_argument("--interval", type=int, default=30)
    sp.add_argument("--config-id", default="default")
    sp = wsub.add_parser("remove")
    sp.add_argument("case_id")
    sp.add_argument("watch_id")

    sp = sub.add_parser("serve", help="run the HTTP API")
    sp.add_argument("--host", default=os.environ.get("FLOWCASE_HOST", "127.0.0.1"))
    sp.add_argument(
        "--port", type=int, default=int(os.environ.get("FLOWCASE_PORT", "8340"))
    )

    sp = sub.add_parser("synth", help="generate the two-day synthetic capture set")
    sp.add_argument("out_dir")
    sp.add_argument("--seed", type=int, default=7)

    return p


def _emit(args, payload, human: str | None = None) -> None:
    if args.json:
        print(json.dumps(payload))
    else:
        print(human if human is not None else json.dumps(payload, indent=2))


def _cmd_import(mgr: CaseManager, args) -> int:
    case = mgr.get_case(args.case_id)
    if args.config_id:
        config = args.config_id
    else:
        config = ImportConfig(
            source_kind=args.source_kind,
            repair_enabled=not args.no_repair,
            target_day_override=args.day,
            enrichment_table=args.enrichment,
        )
    record = run_import(case, [Path(p) for p in args.inputs], config)
    _emit(
        args,
        record.to_dict(),
        f"{record.import_id} {record.status} docs={record.docs_indexed} "
        f"undecodable={record.packets_undecodable}"
        + (f" error={record.error}" if record.error else ""),
    )
    return 0 if record.status == "succeeded" else EXIT_IMPORT_FAILED


def _cmd_detect(mgr: CaseManager, args) -> int:
    case = mgr.get_case(args.case_id)
    if args.detector == "portscan":
        thresholds = DetectionThresholds(
            pair_min_unique_ports=args.pair_min, sender_min_total=args.total_min
        )
        report = port_scan_report(case.store, args.day, thresholds)
        if args.json:
            print(json.dumps({"day": report.day, **report.to_buckets()}))
        elif args.csv:
            for sender, receiver, ports in report.csv_rows():
                print(f"{sender},{receiver},{ports}")
        else:
            for entry in report.entries:
                print(f"{entry['sender_ip']}  total={entry['total_count']}")
                for r in entry["receivers"]:
                    print(f"    {r['receiver_ip']}  ports={r['unique_ports']}")
        return 0
    hist = interval_histogram(case.store, args.day)
    if args.json:
        print(json.dumps(hist.to_dict()))
    else:
        for b in hist.bins:
            hi = "+" if b["hi"] is None else f"-{b['hi']}"
            print(f"[{b['lo']}{hi})  senders={b['sender_count']}")
    return 0


def _dispatch(args) -> int:
    mgr = CaseManager(args.data_root)

    if args.command == "create":
        case = mgr.create_case(args.case_id)
        _emit(args, {"case_id": case.case_id, "state": case.state}, f"created {case.case_id}")
        return 0

    if args.command == "list":
        ids = mgr.list_cases()
        _emit(args, {"cases": ids}, "\n".join(ids))
        return 0

    if args.command == "status":
        payload = mgr.status(args.case_id)
        if args.json:
            print(json.dumps(payload))
        else:
            rows = payload if isinstance(payload, list) else [payload]
            for st in rows:
                print(
                    f"{st['case_id']}  {st['state']}  docs={st['docs']} "
                    f"days={len(st['days'])} disk={st['disk_bytes']}B "
                    f"running={len(st['running_imports'])} watches={len(st['watches'])}"
                )
        return 0

    if args.command == "backup":
        size = mgr.backup_case(args.case_id, args.out_path)
        _emit(args, {"path": args.out_path, "bytes": size}, f"{args.out_path} ({size} bytes)")
        return 0

    if args.command == "restore":
        case = mgr.restore_case(args.archive, args.case_id)
        _emit(args, {"case_id": case.case_id}, f"restored {case.case_id}")
        return 0

    if args.command == "destroy":
        mgr.destroy_case(args.case_id)
        _emit(args, {"destroyed": args.case_id}, f"destroyed {args.case_id}")
        return 0

    if args.command == "import":
        return _cmd_import(mgr, args)

    if args.command == "detect":
        return _cmd_detect(mgr, args)

    if args.command == "watch":
        case = mgr.get_case(args.case_id)
        if args.action == "add":
            watch = WatchConfig(
                watch_id=args.watch_id,
                directory=args.directory,
                poll_interval=args.interval,
                config_id=args.config_id,
            )
            case.add_watch(watch)
            _emit(args, {"watch": watch.to_dict()}, f"watching {args.directory}")
        else:
            case.remove_watch(args.watch_id)
            _emit(args, {"removed": args.watch_id}, f"removed {args.watch_id}")
        return 0

    if args.command == "serve":
        from .server import serve

        serve(args.host, args.port, args.data_root)
        return 0

    if args.command == "synth":
        from .synth import generate_replica

        manifest = generate_replica(args.out_dir, seed=args.seed)
        _emit(
            args,
            manifest,
            "\n".join(f"{k}: {v}" for k, v in manifest.items() if k != "files"),
        )
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _dispatch(args)
    except EngineError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return EXIT_CODES.get(e.code, 1)


if __name__ == "__main__":
    sys.exit(main())
