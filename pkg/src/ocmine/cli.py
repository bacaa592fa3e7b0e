"""Command-line interface.

Thin wrappers over the library modules: every subcommand parses its
inputs, calls one pipeline operation and writes the result.  Exit codes:
0 success, 1 usage error, 2 data error.  Output files are written via a
temporary file and an atomic rename, so failures never leave partial
artifacts behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from datetime import datetime, timedelta
from typing import Callable, Optional

from ocmine.io import (
    FormatError,
    parse_mdl,
    parse_timestamp,
    read_model,
    render_dot,
    serialize_model,
    write_flat_csv,
    write_mdl,
)
from ocmine.log import (
    FilterSpec,
    LogError,
    filter_log,
    flatten,
    flattening_diagnostics,
    object_type_stats,
    to_trace_log,
)
from ocmine.ocpn import (
    AcceptingOCPN,
    DiscoveryParams,
    ObjectPopulation,
    OcpnError,
    discover_ocpn,
    simulate_log,
)
from ocmine.petri import ExplorationBound, PetriError, conformance_fraction
from ocmine.replay import AnnotatedOCPN, ReplayError, annotate, project_type

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

DATA_ERRORS = (LogError, PetriError, OcpnError, ReplayError, FormatError,
               ExplorationBound, OSError, json.JSONDecodeError, KeyError)


def _atomic_write(path: str, writer: Callable) -> None:
    """Write through a sibling temp file and rename into place."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit(path: Optional[str], writer: Callable) -> None:
    if path is None or path == "-":
        writer(sys.stdout)
    else:
        _atomic_write(path, writer)


def _load_log(args):
    log = parse_mdl(args.log, getattr(args, "timestamp_format", None))
    types = getattr(args, "types", None)
    if types:
        wanted = set(types.split(","))
        unknown = wanted - set(log.object_types)
        if unknown:
            raise LogError(f"unknown object types: {', '.join(sorted(unknown))}")
        spec = FilterSpec(retained={act: wanted for act in log.activities})
        log = filter_log(log, spec)
    return log


def _filter_spec_from_json(raw: Optional[str]) -> Optional[FilterSpec]:
    if not raw:
        return None
    obj = json.loads(raw)
    window = None
    if obj.get("time_window"):
        lo, hi = obj["time_window"]
        window = (
            parse_timestamp(lo) if lo else None,
            parse_timestamp(hi) if hi else None,
        )
    return FilterSpec(
        retained={k: set(v) for k, v in obj.get("retained", {}).items()} or None,
        activities=set(obj["activities"]) if obj.get("activities") else None,
        min_activity_frequency=obj.get("min_activity_frequency"),
        time_window=window,
    )


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_stats(args) -> int:
    log = _load_log(args)
    table = object_type_stats(log)
    if args.json:
        doc = {
            "events": len(log),
            "object_types": {
                ot: len(log.objects_of_type(ot)) for ot in sorted(log.object_types)
            },
            "table": [
                {
                    "activity": act,
                    "object_type": ot,
                    "min": s.min_objects,
                    "mean": s.mean_objects,
                    "max": s.max_objects,
                    "events": s.events,
                    "unique_objects": s.unique_objects,
                }
                for (act, ot), s in sorted(table.items())
            ],
        }
        _emit(args.output, lambda fh: (json.dump(doc, fh, indent=2), fh.write("\n")))
    else:
        def write_text(fh):
            fh.write(f"events: {len(log)}\n")
            for ot in sorted(log.object_types):
                fh.write(f"objects[{ot}]: {len(log.objects_of_type(ot))}\n")
            width = max((len(a) for a in log.activities), default=8)
            for (act, ot), s in sorted(table.items()):
                fh.write(f"{act:<{width}}  {ot:<12}  {s.formatted()}  ({s.events} events)\n")
        _emit(args.output, write_text)
    return EXIT_OK


def cmd_flatten(args) -> int:
    log = _load_log(args)
    flat = flatten(log, args.type)
    _emit(args.output, lambda fh: write_flat_csv(flat, fh))
    return EXIT_OK


def cmd_diagnose(args) -> int:
    log = _load_log(args)
    diag = flattening_diagnostics(log, args.type)
    doc = {
        "type": args.type,
        "deficient": diag.deficient_count,
        "convergent": diag.convergent_count,
        "divergent": diag.divergent_count,
        "deficient_events": sorted(diag.deficient),
        "convergent_events": sorted(diag.convergent),
        "divergent_events": sorted(diag.divergent),
    }
    _emit(args.output, lambda fh: (json.dump(doc, fh, indent=2), fh.write("\n")))
    return EXIT_OK


def _discover(args) -> tuple:
    log = _load_log(args)
    params = DiscoveryParams(
        noise=args.noise,
        tau=args.tau,
        filter_spec=_filter_spec_from_json(getattr(args, "filter", None)),
    )
    return log, discover_ocpn(log, params)


def cmd_discover(args) -> int:
    _, aocpn = _discover(args)
    doc = serialize_model(aocpn)
    _emit(args.output, lambda fh: (json.dump(doc, fh, indent=2, sort_keys=True), fh.write("\n")))
    return EXIT_OK


def cmd_annotate(args) -> int:
    log, aocpn = _discover(args)
    annotated = annotate(log, aocpn)
    doc = serialize_model(annotated)
    _emit(args.output, lambda fh: (json.dump(doc, fh, indent=2, sort_keys=True), fh.write("\n")))
    return EXIT_OK


def cmd_render(args) -> int:
    model = read_model(args.model)
    text = render_dot(model)
    _emit(args.output, lambda fh: fh.write(text))
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = read_model(args.model)
    aocpn = model.aocpn if isinstance(model, AnnotatedOCPN) else model
    with open(args.population, encoding="utf-8") as fh:
        pop_doc = json.load(fh)
    population = ObjectPopulation(
        counts=pop_doc["counts"],
        ownership={k: (v[0], v[1]) for k, v in pop_doc.get("ownership", {}).items()},
        batches={k: (v[0], v[1]) for k, v in pop_doc.get("batches", {}).items()},
    )
    start = parse_timestamp(args.start) if args.start else None
    log = simulate_log(aocpn, population, seed=args.seed, start_time=start)
    _emit(args.output, lambda fh: write_mdl(log, fh))
    return EXIT_OK


def cmd_conformance(args) -> int:
    log = _load_log(args)
    model = read_model(args.model)
    aocpn = model.aocpn if isinstance(model, AnnotatedOCPN) else model
    result = {}
    for ot in sorted(set(aocpn.ocpn.pt.values())):
        if ot not in log.object_types:
            continue
        traces = to_trace_log(flatten(log, ot))
        result[ot] = conformance_fraction(traces, project_type(aocpn, ot))
    _emit(args.output, lambda fh: (json.dump(result, fh, indent=2), fh.write("\n")))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from ocmine.service import create_app

    app = create_app(upload_cap_bytes=args.upload_cap)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text!r} not in [0, 1]")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocmine", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_log_opts(p):
        p.add_argument("--log", required=True, help="MDL/CSV event log path")
        p.add_argument("--types", help="comma-separated object-type view")
        p.add_argument("--timestamp-format", dest="timestamp_format",
                       help="explicit strptime format for timestamp cells")
        p.add_argument("-o", "--output", help="output path (default stdout)")

    p = sub.add_parser("stats", help="activity/object-type statistics")
    add_log_opts(p)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("flatten", help="flatten to a classical per-case log")
    add_log_opts(p)
    p.add_argument("--type", required=True, help="case notion object type")
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("diagnose", help="flattening pathologies for one type")
    add_log_opts(p)
    p.add_argument("--type", required=True)
    p.set_defaults(func=cmd_diagnose)

    for name, fn, help_text in (
        ("discover", cmd_discover, "discover an object-centric Petri net"),
        ("annotate", cmd_annotate, "discover and annotate via token replay"),
    ):
        p = sub.add_parser(name, help=help_text)
        add_log_opts(p)
        p.add_argument("--noise", type=_unit_interval, default=0.0)
        p.add_argument("--tau", type=_unit_interval, default=0.98)
        p.add_argument("--filter", help="filter spec as JSON")
        p.set_defaults(func=fn)

    p = sub.add_parser("render", help="render a model JSON as DOT")
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("simulate", help="generate an MDL log from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--population", required=True, help="population spec JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", help="simulation start timestamp")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("conformance", help="per-type fitness fractions")
    add_log_opts(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_conformance)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--upload-cap", type=int, default=64 * 1024 * 1024,
                   help="maximum upload size in bytes")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except DATA_ERRORS as exc:
        print(f"ocmine {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
