"""In-memory model of object-centric event logs.

An event carries an activity, a timestamp, a per-type object map and an
attribute map.  A log keeps its events in a fixed total order (timestamp,
then ingestion position).  Flattening replicates or drops events for one
object type used as case notion; the diagnostics report the pathologies
this introduces (deficiency, convergence, divergence).
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Iterable, Mapping, Optional, Sequence


class LogError(ValueError):
    """Raised for malformed logs or invalid query arguments."""


@dataclass(frozen=True)
class Event:
    ei: str
    act: str
    time: datetime
    omap: Mapping[str, frozenset[str]]
    vmap: Mapping[str, object] = field(default_factory=dict)

    def objects(self, ot: str) -> frozenset[str]:
        """Objects of type `ot`; absent type means the empty set."""
        return self.omap.get(ot, frozenset())


def _freeze_omap(omap: Mapping[str, Iterable[str]]) -> dict[str, frozenset[str]]:
    return {ot: frozenset(ois) for ot, ois in omap.items() if ois}


def make_event(ei, act, time, omap, vmap=None) -> Event:
    """Convenience constructor normalizing the object map."""
    return Event(str(ei), act, time, _freeze_omap(omap), dict(vmap or {}))


class ObjectCentricEventLog:
    """A totally ordered collection of events.

    Events are sorted by (timestamp, ingestion position) at construction
    time and are immutable afterwards.  The positional index is the order
    relation: e1 precedes e2 iff index(e1) <= index(e2).
    """

    def __init__(self, events: Iterable[Event]):
        indexed = list(enumerate(events))
        indexed.sort(key=lambda pair: (pair[1].time, pair[0]))
        self.events: tuple[Event, ...] = tuple(e for _, e in indexed)
        seen: set[str] = set()
        for e in self.events:
            if e.ei in seen:
                raise LogError(f"duplicate event id {e.ei!r}")
            seen.add(e.ei)
        types: set[str] = set()
        for e in self.events:
            types.update(e.omap)
        self.object_types: frozenset[str] = frozenset(types)
        self.activities: frozenset[str] = frozenset(e.act for e in self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def objects_of_type(self, ot: str) -> set[str]:
        out: set[str] = set()
        for e in self.events:
            out.update(e.objects(ot))
        return out

    def _require_type(self, ot: str) -> None:
        if ot not in self.object_types:
            known = ", ".join(sorted(self.object_types)) or "<none>"
            raise LogError(f"unknown object type {ot!r}; known types: {known}")

    def _require_activity(self, act: str) -> None:
        if act not in self.activities:
            raise LogError(f"activity {act!r} does not occur in the log")


@dataclass(frozen=True)
class FlatEvent:
    """An event replicated for one object of the case notion type."""

    ei: str           # composite id "src#object"
    src_ei: str
    case: str
    act: str
    time: datetime
    omap: Mapping[str, frozenset[str]]
    vmap: Mapping[str, object]


class FlattenedEventLog:
    """Classical event log obtained by flattening with one object type."""

    def __init__(self, case_type: str, events: Sequence[FlatEvent]):
        self.case_type = case_type
        self.events: tuple[FlatEvent, ...] = tuple(events)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def cases(self) -> dict[str, list[FlatEvent]]:
        """Events grouped per case id, preserving log order."""
        by_case: dict[str, list[FlatEvent]] = defaultdict(list)
        for fe in self.events:
            by_case[fe.case].append(fe)
        return dict(by_case)


# A trace log is a multiset of activity sequences.
TraceLog = Counter


@dataclass
class FlatteningDiagnostics:
    deficient: set[str]
    convergent: set[str]
    divergent: set[str]

    @property
    def deficient_count(self) -> int:
        return len(self.deficient)

    @property
    def convergent_count(self) -> int:
        return len(self.convergent)

    @property
    def divergent_count(self) -> int:
        return len(self.divergent)


def flatten(log: ObjectCentricEventLog, ot: str) -> FlattenedEventLog:
    """Flatten `log` using object type `ot` as case notion.

    Each event with n objects of type `ot` yields n flattened events
    (composite id "ei#oi"); events without such objects are dropped.
    """
    log._require_type(ot)
    out: list[FlatEvent] = []
    for e in log.events:
        for oi in sorted(e.objects(ot)):
            out.append(
                FlatEvent(
                    ei=f"{e.ei}#{oi}",
                    src_ei=e.ei,
                    case=oi,
                    act=e.act,
                    time=e.time,
                    omap=e.omap,
                    vmap=e.vmap,
                )
            )
    return FlattenedEventLog(ot, out)


def to_trace_log(flat: FlattenedEventLog) -> TraceLog:
    """Per-case activity sequences, merged into a multiset."""
    traces = Counter()
    for _, events in flat.cases().items():
        traces[tuple(fe.act for fe in events)] += 1
    return traces


def flattening_diagnostics(log: ObjectCentricEventLog, ot: str) -> FlatteningDiagnostics:
    """Deficient, convergent and divergent events for case notion `ot`."""
    log._require_type(ot)
    deficient: set[str] = set()
    convergent: set[str] = set()
    groups: dict[frozenset[str], list[Event]] = defaultdict(list)
    for e in log.events:
        objs = e.objects(ot)
        if not objs:
            deficient.add(e.ei)
        else:
            if len(objs) >= 2:
                convergent.add(e.ei)
            groups[objs].append(e)
    divergent: set[str] = set()
    # Two distinct events agreeing on ot but differing on some other type
    # ot' (both nonempty on ot') make each other divergent.
    for events in groups.values():
        if len(events) < 2:
            continue
        per_type: dict[str, dict[frozenset[str], list[str]]] = defaultdict(lambda: defaultdict(list))
        for e in events:
            for ot2, objs2 in e.omap.items():
                if ot2 != ot and objs2:
                    per_type[ot2][objs2].append(e.ei)
        for ot2, by_value in per_type.items():
            involved = sum(len(v) for v in by_value.values())
            for value, eis in by_value.items():
                # an event diverges if some other event has a different
                # nonempty value on ot2
                if involved > len(eis):
                    divergent.update(eis)
    return FlatteningDiagnostics(deficient, convergent, divergent)


def score(log: ObjectCentricEventLog, act: str, ot: str) -> float:
    """Fraction of `act` events referring to exactly one object of `ot`."""
    log._require_activity(act)
    total = 0
    single = 0
    for e in log.events:
        if e.act == act:
            total += 1
            if len(e.objects(ot)) == 1:
                single += 1
    return single / total


@dataclass(frozen=True)
class ActivityTypeStats:
    min_objects: int
    mean_objects: float
    max_objects: int
    events: int
    unique_objects: int

    def formatted(self) -> str:
        return f"{self.min_objects} / {self.mean_objects:.2f} / {self.max_objects}"


def object_type_stats(log: ObjectCentricEventLog) -> dict[tuple[str, str], ActivityTypeStats]:
    """Per (activity, object type): min/mean/max objects per event, event
    count, and unique object count.  Every activity x type combination is
    reported, including all-zero ones."""
    counts: dict[tuple[str, str], list[int]] = defaultdict(list)
    uniques: dict[tuple[str, str], set[str]] = defaultdict(set)
    per_act_events = Counter(e.act for e in log.events)
    for e in log.events:
        for ot in log.object_types:
            objs = e.objects(ot)
            counts[(e.act, ot)].append(len(objs))
            uniques[(e.act, ot)].update(objs)
    table: dict[tuple[str, str], ActivityTypeStats] = {}
    for act in log.activities:
        for ot in log.object_types:
            sizes = counts.get((act, ot), [])
            if not sizes:
                sizes = [0]
            table[(act, ot)] = ActivityTypeStats(
                min_objects=min(sizes),
                mean_objects=sum(sizes) / len(sizes),
                max_objects=max(sizes),
                events=per_act_events[act],
                unique_objects=len(uniques.get((act, ot), ())),
            )
    return table


@dataclass
class FilterSpec:
    """Filter configuration for object-centric event logs.

    retained maps an activity to the object types kept for it; activities
    not listed keep all types.  Events failing the whitelist, frequency,
    time window or attribute predicates are dropped, as are events whose
    object map becomes empty.
    """

    retained: Optional[Mapping[str, set[str]]] = None
    activities: Optional[set[str]] = None
    min_activity_frequency: Optional[int] = None
    time_window: Optional[tuple[Optional[datetime], Optional[datetime]]] = None
    attribute_predicates: Optional[Mapping[str, Callable[[object], bool]]] = None


def filter_log(log: ObjectCentricEventLog, spec: FilterSpec) -> ObjectCentricEventLog:
    """Apply `spec` to `log`, returning a new log."""
    if spec.retained:
        for act, types in spec.retained.items():
            if act not in log.activities:
                raise LogError(f"retained map references unknown activity {act!r}")
            for ot in types:
                if ot not in log.object_types:
                    raise LogError(f"retained map references unknown object type {ot!r}")
    freq = Counter(e.act for e in log.events)
    survivors: list[Event] = []
    for e in log.events:
        if spec.activities is not None and e.act not in spec.activities:
            continue
        if spec.min_activity_frequency is not None and freq[e.act] < spec.min_activity_frequency:
            continue
        if spec.time_window is not None:
            t_start, t_end = spec.time_window
            if t_start is not None and e.time < t_start:
                continue
            if t_end is not None and e.time >= t_end:
                continue
        if spec.attribute_predicates:
            ok = all(pred(e.vmap.get(attr)) for attr, pred in spec.attribute_predicates.items())
            if not ok:
                continue
        omap = e.omap
        if spec.retained is not None and e.act in spec.retained:
            kept = spec.retained[e.act]
            omap = {ot: objs for ot, objs in omap.items() if ot in kept}
        if not any(omap.values()):
            continue
        survivors.append(Event(e.ei, e.act, e.time, omap, e.vmap))
    return ObjectCentricEventLog(survivors)
