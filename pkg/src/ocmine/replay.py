"""Token-based replay per object type and assembly of the annotated
object-centric Petri net.

Replay plays the token game per case: missing tokens are inserted when
the log fires a transition the marking does not enable (after a bounded
search for enabling silent firings), and tokens left over at the end are
remaining.  Per place, p + m = c + r after a full replay.  The token game
is solved once per control-flow variant; timing is computed per case.
"""

from __future__ import annotations

import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from typing import Mapping, Optional, Sequence

from ocmine.log import (
    FlattenedEventLog,
    LogError,
    ObjectCentricEventLog,
    flatten,
)
from ocmine.ocpn import AcceptingOCPN
from ocmine.petri import AcceptingPetriNet, Marking


class ReplayError(ValueError):
    pass


@dataclass
class PlaceDiagnostics:
    produced: int = 0
    consumed: int = 0
    missing: int = 0
    remaining: int = 0
    sojourn_seconds: list[float] = field(default_factory=list)
    # summary restored from a serialized document whose raw samples are gone
    sojourn_stats: Optional["DurationStats"] = None

    def merge(self, other: "PlaceDiagnostics") -> None:
        self.produced += other.produced
        self.consumed += other.consumed
        self.missing += other.missing
        self.remaining += other.remaining
        self.sojourn_seconds.extend(other.sojourn_seconds)

    def sojourn_summary(self) -> Optional["DurationStats"]:
        if self.sojourn_seconds:
            return DurationStats.of(self.sojourn_seconds)
        return self.sojourn_stats


@dataclass(frozen=True)
class DurationStats:
    mean: float
    median: float
    min: float
    max: float

    @staticmethod
    def of(values: Sequence[float]) -> Optional["DurationStats"]:
        if not values:
            return None
        return DurationStats(
            mean=statistics.fmean(values),
            median=statistics.median(values),
            min=min(values),
            max=max(values),
        )


@dataclass
class TypeUsage:
    unique_objects: int
    mean_objects: float
    min_objects: int
    max_objects: int


@dataclass
class TransitionAnnotation:
    frequency: int  # raw event count, never the flattened count
    per_type: dict[str, TypeUsage] = field(default_factory=dict)


@dataclass
class ArcAnnotation:
    occurrences: int                 # n: transition occurrences moving tokens
    mean_multiplicity: float         # k: mean tokens per occurrence
    durations: Optional[DurationStats] = None

    def label(self) -> str:
        return f"{self.occurrences} × {self.mean_multiplicity:g}"


@dataclass
class AnnotatedOCPN:
    aocpn: AcceptingOCPN
    places: dict[str, PlaceDiagnostics]
    transitions: dict[str, TransitionAnnotation]
    arcs: dict[tuple[str, str], ArcAnnotation]


# ---------------------------------------------------------------------------
# Token replay on one flattened log / accepting Petri net


@dataclass
class _VariantPlan:
    """Memoized token-game solution for one activity sequence.

    steps[i] lists, for event i, the silent transitions fired before the
    event's transition, then the transition itself, plus the tokens that
    had to be inserted (missing).  tail lists silent transitions fired
    after the last event.
    """

    steps: list[tuple[list[str], str, Counter]]
    tail: list[str]
    final_missing: Counter
    unreached: bool = False


def _silent_path(
    net, m: Marking, target_pre: frozenset[str], silents: list[str], bound: int
) -> Optional[list[str]]:
    """Shortest sequence of silent firings making every place of
    `target_pre` marked; None when the bounded BFS fails."""

    def key(mk: Marking) -> tuple:
        return tuple(sorted((p, n) for p, n in mk.items() if n > 0))

    if all(m[p] >= 1 for p in target_pre):
        return []
    seen = {key(m)}
    frontier: list[tuple[Marking, list[str]]] = [(m, [])]
    explored = 0
    while frontier:
        nxt: list[tuple[Marking, list[str]]] = []
        for mk, path in frontier:
            for t in silents:
                pre = net.preset(t)
                if all(mk[p] >= 1 for p in pre):
                    m2 = Counter(mk)
                    m2.subtract({p: 1 for p in pre})
                    m2.update({p: 1 for p in net.postset(t)})
                    m2 = +m2
                    k = key(m2)
                    if k in seen:
                        continue
                    seen.add(k)
                    explored += 1
                    if explored > bound:
                        return None
                    path2 = path + [t]
                    if all(m2[p] >= 1 for p in target_pre):
                        return path2
                    if len(path2) < bound:
                        nxt.append((m2, path2))
        frontier = nxt
    return None


def _silent_path_to_marking(
    net, m: Marking, target: Marking, silents: list[str], bound: int
) -> Optional[list[str]]:
    def key(mk: Marking) -> tuple:
        return tuple(sorted((p, n) for p, n in mk.items() if n > 0))

    target_key = key(target)
    if key(m) == target_key:
        return []
    seen = {key(m)}
    frontier: list[tuple[Marking, list[str]]] = [(m, [])]
    explored = 0
    while frontier:
        nxt: list[tuple[Marking, list[str]]] = []
        for mk, path in frontier:
            for t in silents:
                pre = net.preset(t)
                if all(mk[p] >= 1 for p in pre):
                    m2 = Counter(mk)
                    m2.subtract({p: 1 for p in pre})
                    m2.update({p: 1 for p in net.postset(t)})
                    m2 = +m2
                    k = key(m2)
                    if k in seen:
                        continue
                    seen.add(k)
                    explored += 1
                    if explored > bound:
                        return None
                    path2 = path + [t]
                    if k == target_key:
                        return path2
                    if len(path2) < bound:
                        nxt.append((m2, path2))
        frontier = nxt
    return None


def _plan_variant(apn: AcceptingPetriNet, variant: tuple[str, ...]) -> _VariantPlan:
    net = apn.net
    by_label: dict[str, str] = {}
    for t, label in net.labels.items():
        if label in by_label:
            raise ReplayError(f"labeling must be injective; duplicate {label!r}")
        by_label[label] = t
    silents = sorted(t for t in net.transitions if net.label(t) is None)
    bound = max(2 * len(net.transitions), 8)
    m = +apn.m_init
    steps: list[tuple[list[str], str, Counter]] = []
    for act in variant:
        t = by_label.get(act)
        if t is None:
            # activity unknown to the model: count one missing/remaining
            # token nowhere; represent as a no-op transition with no arcs
            steps.append(([], "", Counter()))
            continue
        pre = net.preset(t)
        path = _silent_path(net, m, pre, silents, bound)
        fired_silents: list[str] = []
        if path:
            for s in path:
                m.subtract({p: 1 for p in net.preset(s)})
                m.update({p: 1 for p in net.postset(s)})
                m = +m
                fired_silents.append(s)
        inserted = Counter()
        for p in pre:
            if m[p] < 1:
                inserted[p] += 1
                m[p] += 1
        m.subtract({p: 1 for p in pre})
        m.update({p: 1 for p in net.postset(t)})
        m = +m
        steps.append((fired_silents, t, inserted))
    tail = _silent_path_to_marking(net, m, +apn.m_final, silents, bound) or []
    for s in tail:
        m.subtract({p: 1 for p in net.preset(s)})
        m.update({p: 1 for p in net.postset(s)})
        m = +m
    final_missing = +( +apn.m_final - m)
    return _VariantPlan(steps, tail, final_missing)


@dataclass
class TokenRecord:
    place: str
    produced_at: Optional[datetime]
    consumed_at: Optional[datetime]
    consumer: Optional[str]  # transition id, None when never consumed
    producer: Optional[str]


@dataclass
class ReplayResult:
    places: dict[str, PlaceDiagnostics]
    tokens: list[TokenRecord]
    fitting_cases: int
    total_cases: int


def token_replay(flat: FlattenedEventLog, apn: AcceptingPetriNet) -> ReplayResult:
    """Replay each case of the flattened log on `apn`, collecting per-place
    produced/consumed/missing/remaining counts and per-token timestamps."""
    net = apn.net
    plans: dict[tuple[str, ...], _VariantPlan] = {}
    places: dict[str, PlaceDiagnostics] = {p: PlaceDiagnostics() for p in net.places}
    tokens: list[TokenRecord] = []
    fitting = 0
    total = 0
    for case_id, case_events in flat.cases().items():
        total += 1
        variant = tuple(fe.act for fe in case_events)
        plan = plans.get(variant)
        if plan is None:
            plan = _plan_variant(apn, variant)
            plans[variant] = plan
        case_missing = 0
        # live tokens: place -> list of (produced_at, producer)
        live: dict[str, list[tuple[Optional[datetime], Optional[str]]]] = defaultdict(list)
        first_time = case_events[0].time
        last_time = case_events[-1].time
        for p, n in apn.m_init.items():
            places[p].produced += n
            for _ in range(n):
                live[p].append((first_time, None))

        def fire_at(t: str, when: datetime) -> None:
            nonlocal case_missing
            for p in net.preset(t):
                produced_at, producer = live[p].pop(0)
                places[p].consumed += 1
                if produced_at is not None:
                    delta = (when - produced_at).total_seconds()
                    places[p].sojourn_seconds.append(delta)
                tokens.append(TokenRecord(p, produced_at, when, t, producer))
            for p in net.postset(t):
                places[p].produced += 1
                live[p].append((when, t))

        for fe, (silent_steps, t, inserted) in zip(case_events, plan.steps):
            for s in silent_steps:
                fire_at(s, fe.time)
            for p, n in inserted.items():
                places[p].missing += n
                case_missing += n
                for _ in range(n):
                    live[p].insert(0, (None, None))
            if t:
                fire_at(t, fe.time)
        for s in plan.tail:
            fire_at(s, last_time)
        for p, n in plan.final_missing.items():
            places[p].missing += n
            case_missing += n
            for _ in range(n):
                live[p].insert(0, (None, None))
        # consume the final marking; whatever else is live remains
        need = Counter(apn.m_final)
        for p, stock in live.items():
            while need[p] > 0 and stock:
                produced_at, producer = stock.pop(0)
                places[p].consumed += 1
                need[p] -= 1
                if produced_at is not None:
                    delta = (last_time - produced_at).total_seconds()
                    places[p].sojourn_seconds.append(delta)
                tokens.append(TokenRecord(p, produced_at, last_time, None, producer))
            for produced_at, producer in stock:
                places[p].remaining += 1
                tokens.append(TokenRecord(p, produced_at, None, None, producer))
            stock.clear()
        case_remaining = sum(d for d in need.values() if d > 0)  # defensive; zero by plan
        if case_missing == 0 and case_remaining == 0 and not plan.unreached:
            fitting += 1
    return ReplayResult(places, tokens, fitting, total)


# ---------------------------------------------------------------------------
# Annotation assembly


def project_type(aocpn: AcceptingOCPN, ot: str) -> AcceptingPetriNet:
    """The accepting Petri net seen by one object type: its places, every
    transition touching them, and single-token initial/final markings."""
    ocpn = aocpn.ocpn
    net = ocpn.net
    sub_places = frozenset(p for p in net.places if ocpn.pt[p] == ot)
    if not sub_places:
        raise ReplayError(f"object type {ot!r} has no places in the net")
    sub_transitions = frozenset(
        t for t in net.transitions if (net.preset(t) | net.postset(t)) & sub_places
    )
    sub_arcs = frozenset((a, b) for a, b in net.arcs if a in sub_places or b in sub_places)
    from ocmine.petri import LabeledPetriNet

    sub_net = LabeledPetriNet(
        sub_places,
        sub_transitions,
        sub_arcs,
        {t: net.labels[t] for t in sub_transitions if t in net.labels},
    )
    m_init = Counter()
    m_final = Counter()
    for (p, _), _n in aocpn.m_init.items():
        if p in sub_places:
            m_init[p] = 1
    for (p, _), _n in aocpn.m_final.items():
        if p in sub_places:
            m_final[p] = 1
    return AcceptingPetriNet(sub_net, m_init, m_final)


def annotate(log: ObjectCentricEventLog, aocpn: AcceptingOCPN) -> AnnotatedOCPN:
    """Token replay per object type plus frequency/multiplicity/timing
    annotations for transitions, places, and arcs."""
    ocpn = aocpn.ocpn
    net = ocpn.net
    types_in_net = sorted(set(ocpn.pt.values()))

    # transition annotations straight from the raw log
    freq = Counter(e.act for e in log.events)
    transitions: dict[str, TransitionAnnotation] = {}
    per_act_sizes: dict[tuple[str, str], list[int]] = defaultdict(list)
    per_act_objs: dict[tuple[str, str], set[str]] = defaultdict(set)
    for e in log.events:
        for ot in types_in_net:
            objs = e.objects(ot)
            per_act_sizes[(e.act, ot)].append(len(objs))
            per_act_objs[(e.act, ot)].update(objs)
    for t in sorted(net.transitions):
        label = net.label(t)
        if label is None:
            continue
        usage: dict[str, TypeUsage] = {}
        for ot in sorted(ocpn.types_of(t)):
            sizes = per_act_sizes.get((label, ot), [0])
            usage[ot] = TypeUsage(
                unique_objects=len(per_act_objs.get((label, ot), ())),
                mean_objects=sum(sizes) / len(sizes),
                min_objects=min(sizes),
                max_objects=max(sizes),
            )
        transitions[t] = TransitionAnnotation(frequency=freq.get(label, 0), per_type=usage)

    # per-type token replay for place diagnostics and arc timing
    places: dict[str, PlaceDiagnostics] = {p: PlaceDiagnostics() for p in net.places}
    arc_sojourns: dict[tuple[str, str], list[float]] = defaultdict(list)
    for ot in types_in_net:
        if ot not in log.object_types:
            continue
        sub_apn = project_type(aocpn, ot)
        result = token_replay(flatten(log, ot), sub_apn)
        for p, diag in result.places.items():
            if p in places:
                places[p].merge(diag)
        for rec in result.tokens:
            if rec.produced_at is not None and rec.consumed_at is not None:
                delta = (rec.consumed_at - rec.produced_at).total_seconds()
                if rec.consumer is not None:
                    arc_sojourns[(rec.place, rec.consumer)].append(delta)
                if rec.producer is not None:
                    arc_sojourns[(rec.producer, rec.place)].append(delta)

    # arc annotations: occurrences and mean multiplicity regrouped per
    # original event
    arcs: dict[tuple[str, str], ArcAnnotation] = {}
    for arc in sorted(net.arcs):
        src, dst = arc
        t = dst if dst in net.transitions else src
        p = src if src in ocpn.pt else dst
        label = net.label(t)
        ot = ocpn.pt[p]
        if label is None:
            durations = DurationStats.of(arc_sojourns.get(arc, []))
            arcs[arc] = ArcAnnotation(0, 1.0, durations)
            continue
        sizes = [
            n for n in per_act_sizes.get((label, ot), []) if n > 0
        ]
        n_occ = len(sizes)
        if arc in ocpn.f_var:
            k = sum(sizes) / n_occ if n_occ else 0.0
        else:
            k = 1.0
        durations = DurationStats.of(arc_sojourns.get(arc, []))
        arcs[arc] = ArcAnnotation(n_occ, k, durations)

    return AnnotatedOCPN(aocpn, places, transitions, arcs)


# ---------------------------------------------------------------------------
# Repeat-occurrence reporting


@dataclass
class FailureStats:
    activity: str
    events: int
    per_type: dict[str, tuple[int, int]]  # ot -> (objects >=1, objects >=2)


def failure_stats(log: ObjectCentricEventLog, activity: str) -> FailureStats:
    """How many objects saw `activity` at least once / more than once."""
    log._require_activity(activity)
    occurrences: dict[str, Counter] = defaultdict(Counter)
    events = 0
    for e in log.events:
        if e.act != activity:
            continue
        events += 1
        for ot, objs in e.omap.items():
            for oi in objs:
                occurrences[ot][oi] += 1
    per_type = {
        ot: (len(counts), sum(1 for c in counts.values() if c >= 2))
        for ot, counts in occurrences.items()
    }
    return FailureStats(activity, events, per_type)
