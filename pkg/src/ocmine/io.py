"""Parsing and serialization.

Three surfaces: MDL/CSV object-centric event logs (one column per object
type, list-valued cells), a versioned model JSON document for (annotated)
object-centric Petri nets, and deterministic DOT rendering.
"""

from __future__ import annotations

import ast
import csv
import io as _io
import json
from collections import Counter, defaultdict
from datetime import datetime
from typing import IO, Mapping, Optional, Union

from ocmine.log import LogError, ObjectCentricEventLog, make_event
from ocmine.ocpn import AcceptingOCPN, ObjectCentricPetriNet, OcpnMarking
from ocmine.petri import LabeledPetriNet, PetriError
from ocmine.replay import (
    AnnotatedOCPN,
    ArcAnnotation,
    DurationStats,
    PlaceDiagnostics,
    TransitionAnnotation,
    TypeUsage,
)

SCHEMA_VERSION = 1

RESERVED_COLUMNS = ("event_id", "event_activity", "event_timestamp")

TIMESTAMP_FORMATS = (
    "%Y-%m-%d %H:%M:%S",
    "%d-%m-%Y:%H.%M",
)


class FormatError(ValueError):
    """Raised for malformed input files or documents."""


# ---------------------------------------------------------------------------
# MDL / CSV event logs


def parse_timestamp(text: str, fmt: Optional[str] = None) -> datetime:
    """Parse a timestamp cell.

    Accepts ISO-8601, "YYYY-MM-DD HH:MM:SS" and "DD-MM-YYYY:HH.MM"; an
    explicit strptime format wins over auto-detection.
    """
    text = text.strip()
    if fmt is not None:
        try:
            return datetime.strptime(text, fmt)
        except ValueError as exc:
            raise FormatError(f"timestamp {text!r} does not match format {fmt!r}") from exc
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        pass
    for candidate in TIMESTAMP_FORMATS:
        try:
            return datetime.strptime(text, candidate)
        except ValueError:
            continue
    raise FormatError(f"unparseable timestamp {text!r}")


def _parse_list_cell(cell: str) -> list[str]:
    """Parse a list-valued cell: JSON array, Python-style single-quoted
    list literal, or empty."""
    cell = cell.strip()
    if not cell or cell in ("[]", "nan"):
        return []
    try:
        value = json.loads(cell)
    except (json.JSONDecodeError, ValueError):
        try:
            value = ast.literal_eval(cell)
        except (SyntaxError, ValueError) as exc:
            raise FormatError(f"unparseable list cell {cell!r}") from exc
    if not isinstance(value, (list, tuple)):
        raise FormatError(f"cell {cell!r} is not a list")
    return [str(v) for v in value]


def parse_mdl(
    source: Union[str, IO[str]],
    timestamp_format: Optional[str] = None,
) -> ObjectCentricEventLog:
    """Read an MDL/CSV file into an object-centric event log.

    Every non-reserved column is an object type.  Rows without any object
    are dropped.  Event ids come from the optional event_id column, else
    from the row order.
    """
    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return parse_mdl(fh, timestamp_format)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty MDL file: missing header row")
    header = [h.strip() for h in header]
    for mandatory in ("event_activity", "event_timestamp"):
        if mandatory not in header:
            raise FormatError(f"missing mandatory column {mandatory!r}")
    idx = {name: i for i, name in enumerate(header)}
    type_columns = [h for h in header if h not in RESERVED_COLUMNS]
    events = []
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            row = row + [""] * (len(header) - len(row))
        act = row[idx["event_activity"]].strip()
        if not act:
            raise FormatError(f"row {row_no}: empty event_activity")
        try:
            time = parse_timestamp(row[idx["event_timestamp"]], timestamp_format)
        except FormatError as exc:
            raise FormatError(f"row {row_no}: {exc}") from exc
        omap = {}
        for ot in type_columns:
            try:
                objs = _parse_list_cell(row[idx[ot]])
            except FormatError as exc:
                raise FormatError(f"row {row_no}, column {ot!r}: {exc}") from exc
            if objs:
                omap[ot] = objs
        if not omap:
            continue  # object-less rows carry no object-centric behavior
        if "event_id" in idx and row[idx["event_id"]].strip():
            ei = row[idx["event_id"]].strip()
        else:
            ei = f"e{row_no - 1}"
        events.append(make_event(ei, act, time, omap))
    return ObjectCentricEventLog(events)


def write_mdl(log: ObjectCentricEventLog, sink: Union[str, IO[str]]) -> None:
    """Write `log` as MDL/CSV with JSON-array object cells."""
    if isinstance(sink, str):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            write_mdl(log, fh)
        return
    types = sorted(log.object_types)
    writer = csv.writer(sink)
    writer.writerow(["event_id", "event_activity", "event_timestamp", *types])
    for e in log.events:
        cells = [e.ei, e.act, e.time.strftime("%Y-%m-%d %H:%M:%S")]
        for ot in types:
            cells.append(json.dumps(sorted(e.objects(ot))))
        writer.writerow(cells)


def write_flat_csv(flat, sink: Union[str, IO[str]]) -> None:
    """Write a flattened log as a classical per-case CSV."""
    if isinstance(sink, str):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            write_flat_csv(flat, fh)
        return
    writer = csv.writer(sink)
    writer.writerow(["case_id", "event_id", "activity", "timestamp"])
    for fe in flat.events:
        writer.writerow([fe.case, fe.ei, fe.act, fe.time.strftime("%Y-%m-%d %H:%M:%S")])


# ---------------------------------------------------------------------------
# Model JSON documents


def _marking_to_json(m: OcpnMarking) -> list[dict]:
    grouped: dict[str, list[str]] = defaultdict(list)
    for (place, oid), n in sorted(m.items()):
        grouped[place].extend([oid] * n)
    return [{"place": p, "objects": sorted(objs)} for p, objs in sorted(grouped.items())]


def _marking_from_json(items, path: str) -> OcpnMarking:
    m: OcpnMarking = Counter()
    for i, entry in enumerate(items):
        if not isinstance(entry, dict) or "place" not in entry or "objects" not in entry:
            raise FormatError(f"{path}[{i}]: expected object with place/objects")
        for oid in entry["objects"]:
            m[(entry["place"], str(oid))] += 1
    return m


def _duration_to_json(d: Optional[DurationStats]):
    if d is None:
        return None
    return {"mean": d.mean, "median": d.median, "min": d.min, "max": d.max}


def _duration_from_json(obj) -> Optional[DurationStats]:
    if obj is None:
        return None
    return DurationStats(obj["mean"], obj["median"], obj["min"], obj["max"])


def serialize_model(model: Union[AnnotatedOCPN, AcceptingOCPN]) -> dict:
    """Serialize an (annotated) accepting OCPN to a JSON document."""
    annotated = model if isinstance(model, AnnotatedOCPN) else None
    aocpn = annotated.aocpn if annotated else model
    ocpn = aocpn.ocpn
    net = ocpn.net
    doc = {
        "schema_version": SCHEMA_VERSION,
        "places": [{"id": p, "type": ocpn.pt[p]} for p in sorted(net.places)],
        "transitions": [
            {"id": t, "label": net.label(t)} for t in sorted(net.transitions)
        ],
        "arcs": [
            {"source": a, "target": b, "variable": (a, b) in ocpn.f_var}
            for a, b in sorted(net.arcs)
        ],
        "initial_marking": _marking_to_json(aocpn.m_init),
        "final_marking": _marking_to_json(aocpn.m_final),
    }
    if annotated is not None:
        doc["annotations"] = {
            "places": {
                p: {
                    "produced": d.produced,
                    "consumed": d.consumed,
                    "missing": d.missing,
                    "remaining": d.remaining,
                    "sojourn": _duration_to_json(d.sojourn_summary()),
                }
                for p, d in sorted(annotated.places.items())
            },
            "transitions": {
                t: {
                    "frequency": a.frequency,
                    "per_type": {
                        ot: {
                            "unique_objects": u.unique_objects,
                            "mean_objects": u.mean_objects,
                            "min_objects": u.min_objects,
                            "max_objects": u.max_objects,
                        }
                        for ot, u in sorted(a.per_type.items())
                    },
                }
                for t, a in sorted(annotated.transitions.items())
            },
            "arcs": [
                {
                    "source": src,
                    "target": dst,
                    "occurrences": a.occurrences,
                    "mean_multiplicity": a.mean_multiplicity,
                    "durations": _duration_to_json(a.durations),
                }
                for (src, dst), a in sorted(annotated.arcs.items())
            ],
        }
    return doc


def parse_model(doc: dict) -> Union[AnnotatedOCPN, AcceptingOCPN]:
    """Parse a model JSON document; errors carry the offending JSON path."""
    if not isinstance(doc, dict):
        raise FormatError("$: model document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FormatError(f"$.schema_version: unsupported value {version!r}")
    for key in ("places", "transitions", "arcs", "initial_marking", "final_marking"):
        if key not in doc:
            raise FormatError(f"$.{key}: missing")
    pt: dict[str, str] = {}
    for i, entry in enumerate(doc["places"]):
        if "id" not in entry or "type" not in entry:
            raise FormatError(f"$.places[{i}]: expected id and type")
        pt[entry["id"]] = entry["type"]
    labels: dict[str, str] = {}
    transitions: set[str] = set()
    for i, entry in enumerate(doc["transitions"]):
        if "id" not in entry:
            raise FormatError(f"$.transitions[{i}]: expected id")
        transitions.add(entry["id"])
        if entry.get("label") is not None:
            labels[entry["id"]] = entry["label"]
    arcs: set[tuple[str, str]] = set()
    f_var: set[tuple[str, str]] = set()
    nodes = set(pt) | transitions
    for i, entry in enumerate(doc["arcs"]):
        src, dst = entry.get("source"), entry.get("target")
        for end, name in ((src, "source"), (dst, "target")):
            if end not in nodes:
                raise FormatError(f"$.arcs[{i}].{name}: unknown node {end!r}")
        arcs.add((src, dst))
        if entry.get("variable"):
            f_var.add((src, dst))
    try:
        net = LabeledPetriNet(frozenset(pt), frozenset(transitions), frozenset(arcs), labels)
        ocpn = ObjectCentricPetriNet(net, pt, frozenset(f_var))
    except (PetriError, ValueError) as exc:
        raise FormatError(f"$: {exc}") from exc
    m_init = _marking_from_json(doc["initial_marking"], "$.initial_marking")
    m_final = _marking_from_json(doc["final_marking"], "$.final_marking")
    for path, m in (("$.initial_marking", m_init), ("$.final_marking", m_final)):
        for place, _ in m:
            if place not in pt:
                raise FormatError(f"{path}: unknown place {place!r}")
    aocpn = AcceptingOCPN(ocpn, m_init, m_final)
    ann = doc.get("annotations")
    if ann is None:
        return aocpn
    places = {}
    for p, entry in ann.get("places", {}).items():
        if p not in pt:
            raise FormatError(f"$.annotations.places.{p}: unknown place")
        diag = PlaceDiagnostics(
            produced=entry["produced"],
            consumed=entry["consumed"],
            missing=entry["missing"],
            remaining=entry["remaining"],
            sojourn_stats=_duration_from_json(entry.get("sojourn")),
        )
        places[p] = diag
    trans = {}
    for t, entry in ann.get("transitions", {}).items():
        if t not in transitions:
            raise FormatError(f"$.annotations.transitions.{t}: unknown transition")
        trans[t] = TransitionAnnotation(
            frequency=entry["frequency"],
            per_type={
                ot: TypeUsage(
                    unique_objects=u["unique_objects"],
                    mean_objects=u["mean_objects"],
                    min_objects=u["min_objects"],
                    max_objects=u["max_objects"],
                )
                for ot, u in entry.get("per_type", {}).items()
            },
        )
    arc_ann = {}
    for i, entry in enumerate(ann.get("arcs", [])):
        arc = (entry["source"], entry["target"])
        if arc not in arcs:
            raise FormatError(f"$.annotations.arcs[{i}]: unknown arc {arc!r}")
        arc_ann[arc] = ArcAnnotation(
            occurrences=entry["occurrences"],
            mean_multiplicity=entry["mean_multiplicity"],
            durations=_duration_from_json(entry.get("durations")),
        )
    return AnnotatedOCPN(aocpn, places, trans, arc_ann)


def write_model(model, sink: Union[str, IO[str]]) -> None:
    doc = serialize_model(model)
    if isinstance(sink, str):
        with open(sink, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        json.dump(doc, sink, indent=2, sort_keys=True)
        sink.write("\n")


def read_model(source: Union[str, IO[str]]):
    if isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            return parse_model(json.load(fh))
    return parse_model(json.load(source))


# ---------------------------------------------------------------------------
# DOT rendering

_PALETTE = (
    "#e6194b",
    "#3cb44b",
    "#4363d8",
    "#f58231",
    "#911eb4",
    "#46a6a6",
    "#808000",
    "#9a6324",
    "#800000",
    "#000075",
)


def type_palette(types) -> dict[str, str]:
    """Stable type -> color map: the fixed palette assigned to the type
    names in sorted order (wrapping around when exhausted)."""
    ordered = sorted(set(types))
    return {ot: _PALETTE[i % len(_PALETTE)] for i, ot in enumerate(ordered)}


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _fmt_seconds(sec: float) -> str:
    if sec >= 86400:
        return f"{sec / 86400:.1f}d"
    if sec >= 3600:
        return f"{sec / 3600:.1f}h"
    if sec >= 60:
        return f"{sec / 60:.1f}m"
    return f"{sec:.0f}s"


def render_dot(model: Union[AnnotatedOCPN, AcceptingOCPN]) -> str:
    """Render a model as deterministic DOT text.

    Places are colored per object type; variable arcs are drawn doubled
    (bold, color doubled via a colorList); initial/final places carry
    start/stop markers; annotations appear as labels when present.
    """
    annotated = model if isinstance(model, AnnotatedOCPN) else None
    aocpn = annotated.aocpn if annotated else model
    ocpn = aocpn.ocpn
    net = ocpn.net
    palette = type_palette(ocpn.pt.values())
    init_places = {p for p, _ in aocpn.m_init}
    final_places = {p for p, _ in aocpn.m_final}
    lines = [
        "digraph ocpn {",
        "  rankdir=LR;",
        "  node [fontname=Helvetica, fontsize=10];",
        "  edge [fontname=Helvetica, fontsize=9];",
    ]
    for p in sorted(net.places):
        color = palette[ocpn.pt[p]]
        label_parts = [ocpn.pt[p]]
        if p in init_places:
            label_parts.append("start")
        if p in final_places:
            label_parts.append("stop")
        if annotated and p in annotated.places:
            d = annotated.places[p]
            label_parts.append(f"p={d.produced}, c={d.consumed}")
            label_parts.append(f"m={d.missing}, r={d.remaining}")
        label = "\n".join(label_parts)
        lines.append(
            f"  {_quote(p)} [shape=ellipse, style=filled, fillcolor={_quote(color)}, "
            f"label={_quote_raw(label)}];"
        )
    for t in sorted(net.transitions):
        label = net.label(t)
        if label is None:
            lines.append(f"  {_quote(t)} [shape=box, style=filled, fillcolor=\"#333333\", label=\"\"];")
            continue
        types = sorted(ocpn.types_of(t))
        colors = ":".join(palette[ot] for ot in types) or "#ffffff"
        parts = [label]
        if annotated and t in annotated.transitions:
            a = annotated.transitions[t]
            parts.append(f"freq={a.frequency}")
            for ot in types:
                u = a.per_type.get(ot)
                if u is not None:
                    parts.append(f"{ot}: {u.mean_objects:.2f}")
        style = "filled" if len(types) <= 1 else "striped"
        lines.append(
            f"  {_quote(t)} [shape=box, style={_quote(style)}, fillcolor={_quote(colors)}, "
            f"label={_quote_raw(chr(10).join(parts))}];"
        )
    for a, b in sorted(net.arcs):
        attrs = []
        if (a, b) in ocpn.f_var:
            attrs.append("style=bold")
            attrs.append('color="black:black"')
        if annotated and (a, b) in annotated.arcs:
            ann = annotated.arcs[(a, b)]
            label = ann.label()
            if ann.durations is not None:
                label += f"\n{_fmt_seconds(ann.durations.mean)}"
            attrs.append(f"label={_quote_raw(label)}")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_quote(a)} -> {_quote(b)}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _quote_raw(s: str) -> str:
    """Quote a label whose embedded newlines become DOT line breaks."""
    s = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return '"' + s + '"'
