"""Command-line entry point.

Three subcommands: ``ingest`` loads a CSV into a relation, ``index``
builds a dense index, ``run`` executes a plan file.  Rows go to
standard output as CSV; reports and statistics go to standard error so
pipelines can consume rows directly.

Exit codes are disjoint by error class: 0 success, 2 plan validation,
3 runtime I/O (storage, addressing, OS), 4 pathological data, 1 for
everything else including usage errors.  argparse's own usage failures
are remapped from its default of 2 to 1 so that 2 stays unambiguous.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .catalog import Database
from .config import (DEFAULT_BUFFERS, DEFAULT_EXTENT_LENGTH, DEFAULT_PAGE_SIZE,
                     EngineConfig)
from .engine import execute
from .errors import (AddressError, IngestError, PathologicalDataError, PlanError,
                     RelqError, StorageError)
from .index import build_index
from .ingest import ingest_csv
from .plan import parse_plan, parse_plan_json

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_PLAN = 2
EXIT_IO = 3
EXIT_PATHOLOGICAL = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit code 2 reserved for plan validation
        self.print_usage(sys.stderr)
        self.exit(EXIT_OTHER, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="relq", description="paged relational execution engine")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--db", required=True, help="database directory")

    geometry = _Parser(add_help=False)
    geometry.add_argument("--page-size", type=int, default=None,
                          help=f"page size in bytes (default {DEFAULT_PAGE_SIZE})")
    geometry.add_argument("--extent", type=int, default=None,
                          help=f"pages per extent (default {DEFAULT_EXTENT_LENGTH})")

    ing = sub.add_parser("ingest", parents=[common, geometry],
                         help="load a CSV file into a new relation")
    ing.add_argument("relation")
    ing.add_argument("csv_path", metavar="csv")
    ing.add_argument("schema", help="schema string, e.g. id:int,name:str32")

    ix = sub.add_parser("index", parents=[common],
                        help="build a dense index on key attributes")
    ix.add_argument("relation")
    ix.add_argument("attrs", help="key attributes joined with +, e.g. name+city")

    run = sub.add_parser("run", parents=[common],
                         help="execute a plan file")
    run.add_argument("plan", help="plan file path")
    run.add_argument("--buffers", type=int, default=DEFAULT_BUFFERS,
                     help=f"pool capacity M (default {DEFAULT_BUFFERS})")
    run.add_argument("--readahead", type=int, default=None,
                     help="read-ahead window in pages (default: extent length - 1)")
    run.add_argument("--seed", type=int, default=0, help="hash seed (default 0)")
    run.add_argument("--stats-json", action="store_true",
                     help="emit statistics as JSON instead of key=value lines")
    run.add_argument("--plan-json", action="store_true",
                     help="parse the plan file as JSON instead of line syntax")
    return p


def _cmd_ingest(args) -> int:
    db = Database(args.db, page_size=args.page_size, extent_length=args.extent,
                  create=True)
    with db:
        report = ingest_csv(db, args.relation, args.csv_path, args.schema)
    for key, val in report.items():
        print(f"{key}={val}", file=sys.stderr)
    return EXIT_OK


def _cmd_index(args) -> int:
    keys = tuple(a.strip() for a in args.attrs.split("+"))
    with Database(args.db) as db:
        heap = db.open_relation(args.relation)
        idx = build_index(heap, keys, db.index_path(args.relation, keys))
        name = db.register_index(args.relation, keys, idx.page_count,
                                 idx.tuple_count())
        entry = db.indexes[name]
    for key, val in (("index", name), ("pages", entry["pages"]),
                     ("entries", entry["entries"])):
        print(f"{key}={val}", file=sys.stderr)
    return EXIT_OK


def _cmd_run(args) -> int:
    with open(args.plan, encoding="utf-8") as fh:
        text = fh.read()
    plan = parse_plan_json(text) if args.plan_json else parse_plan(text)
    with Database(args.db) as db:
        # geometry comes from the catalog, not flags; run never changes it
        config = EngineConfig(buffers=args.buffers, page_size=db.page_size,
                              extent_length=db.extent_length,
                              readahead_window=args.readahead, seed=args.seed)
        writer = csv.writer(sys.stdout, lineterminator="\n")
        report = execute(plan, db, config,
                         on_header=writer.writerow, on_row=writer.writerow)
    sys.stdout.flush()
    if args.stats_json:
        doc = {**report.totals,
               "runs_created": report.runs_created,
               "merge_passes": report.merge_passes,
               "output_rows": report.output_rows,
               "elapsed_ms": report.elapsed_ms,
               "steps": report.steps,
               "stages": report.stage_marks}
        print(json.dumps(doc, indent=2), file=sys.stderr)
    else:
        lines = {**report.totals,
                 "runs_created": report.runs_created,
                 "merge_passes": report.merge_passes,
                 "output_rows": report.output_rows}
        for key, val in lines.items():
            print(f"{key}={val}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "index":
            return _cmd_index(args)
        return _cmd_run(args)
    except PlanError as e:
        print(f"relq: plan error: {e}", file=sys.stderr)
        return EXIT_PLAN
    except PathologicalDataError as e:
        print(f"relq: pathological data: {e}", file=sys.stderr)
        return EXIT_PATHOLOGICAL
    except (StorageError, AddressError, OSError) as e:
        print(f"relq: i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except IngestError as e:
        print(f"relq: ingest error: {e}", file=sys.stderr)
        return EXIT_OTHER
    except RelqError as e:
        print(f"relq: error: {e}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
