"""Object-centric Petri nets: merging per-type nets, variable arcs,
object-aware markings, binding execution, the end-to-end discovery
pipeline, and a synthetic-log simulator.

Tokens are (place, object) pairs; markings are Counters over tokens.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable, Mapping, Optional, Sequence

from ocmine.discovery import discover_accepting_net
from ocmine.log import (
    Event,
    FilterSpec,
    LogError,
    ObjectCentricEventLog,
    filter_log,
    flatten,
    score,
    to_trace_log,
)
from ocmine.petri import AcceptingPetriNet, LabeledPetriNet, Marking, PetriError


class OcpnError(ValueError):
    pass


OcpnMarking = Counter  # multiset of (place, object-id) tokens


@dataclass(frozen=True)
class ObjectCentricPetriNet:
    net: LabeledPetriNet
    pt: Mapping[str, str]          # place -> object type
    f_var: frozenset[tuple[str, str]]

    def __post_init__(self):
        if set(self.pt) != set(self.net.places):
            raise OcpnError("pt must assign a type to exactly the places of the net")
        extra = self.f_var - self.net.arcs
        if extra:
            raise OcpnError(f"variable arcs not in the flow relation: {sorted(extra)}")

    def place_of_arc(self, arc: tuple[str, str]) -> str:
        src, dst = arc
        return src if src in self.pt else dst

    def types_of(self, t: str) -> set[str]:
        return {self.pt[p] for p in self.net.preset(t) | self.net.postset(t)}

    def variable_types_of(self, t: str) -> set[str]:
        out = set()
        for arc in self.f_var:
            if t in arc:
                out.add(self.pt[self.place_of_arc(arc)])
        return out

    def nonvariable_types_of(self, t: str) -> set[str]:
        out = set()
        for arc in self.net.arcs - self.f_var:
            if t in arc:
                out.add(self.pt[self.place_of_arc(arc)])
        return out


@dataclass(frozen=True)
class Binding:
    transition: str
    objects: Mapping[str, frozenset[str]]  # object type -> chosen objects


@dataclass(frozen=True)
class AcceptingOCPN:
    ocpn: ObjectCentricPetriNet
    m_init: OcpnMarking
    m_final: OcpnMarking


def is_well_formed(ocpn: ObjectCentricPetriNet) -> tuple[bool, list[tuple[str, str]]]:
    """A transition's variable and non-variable arcs must not share an
    object type.  Returns (ok, violating (transition, type) pairs)."""
    violations: list[tuple[str, str]] = []
    for t in sorted(ocpn.net.transitions):
        overlap = ocpn.variable_types_of(t) & ocpn.nonvariable_types_of(t)
        violations.extend((t, ot) for ot in sorted(overlap))
    return (not violations, violations)


# ---------------------------------------------------------------------------
# Merging per-type nets (pipeline steps 3-4)


@dataclass(frozen=True)
class MergedNet:
    net: LabeledPetriNet
    pt: Mapping[str, str]
    init_places: Mapping[str, Marking]   # per object type, renamed
    final_places: Mapping[str, Marking]


def merge_nets(nets: Mapping[str, AcceptingPetriNet]) -> MergedNet:
    """Union of the per-type nets with globally unique place/silent ids and
    label-unified transitions."""
    if not nets:
        raise OcpnError("no per-type nets to merge")
    places: set[str] = set()
    transitions: set[str] = set()
    arcs: set[tuple[str, str]] = set()
    labels: dict[str, str] = {}
    pt: dict[str, str] = {}
    init_places: dict[str, Marking] = {}
    final_places: dict[str, Marking] = {}
    for ot in sorted(nets):
        apn = nets[ot]
        seen_labels: set[str] = set()
        rename: dict[str, str] = {}
        for p in apn.net.places:
            rename[p] = f"{ot}@{p}"
        for t in apn.net.transitions:
            label = apn.net.label(t)
            if label is None:
                rename[t] = f"{ot}@{t}"
            else:
                if label in seen_labels:
                    raise OcpnError(f"duplicate label {label!r} in the net for type {ot!r}")
                seen_labels.add(label)
                rename[t] = f"t:{label}"
        for p in apn.net.places:
            new = rename[p]
            places.add(new)
            pt[new] = ot
        for t in apn.net.transitions:
            new = rename[t]
            transitions.add(new)
            label = apn.net.label(t)
            if label is not None:
                labels[new] = label
        for src, dst in apn.net.arcs:
            arcs.add((rename[src], rename[dst]))
        init_places[ot] = Counter({rename[p]: n for p, n in apn.m_init.items()})
        final_places[ot] = Counter({rename[p]: n for p, n in apn.m_final.items()})
    net = LabeledPetriNet(frozenset(places), frozenset(transitions), frozenset(arcs), labels)
    return MergedNet(net, pt, init_places, final_places)


def identify_variable_arcs(
    log: ObjectCentricEventLog, merged: MergedNet, tau: float
) -> frozenset[tuple[str, str]]:
    """Arcs of labeled transitions whose (activity, place type) score falls
    below tau.  Silent transitions never get variable arcs."""
    out: set[tuple[str, str]] = set()
    for arc in merged.net.arcs:
        src, dst = arc
        t = dst if dst in merged.net.transitions else src
        p = src if src in merged.pt else dst
        label = merged.net.label(t)
        if label is None or label not in log.activities:
            continue
        if score(log, label, merged.pt[p]) < tau:
            out.add(arc)
    return frozenset(out)


def build_ocpn_markings(
    log: ObjectCentricEventLog, merged: MergedNet
) -> tuple[OcpnMarking, OcpnMarking]:
    """Replicate the per-type source/sink markings for every object of the
    corresponding type occurring anywhere in the log."""
    m_init: OcpnMarking = Counter()
    m_final: OcpnMarking = Counter()
    for ot, marking in merged.init_places.items():
        objects = sorted(log.objects_of_type(ot)) if ot in log.object_types else []
        for p, n in marking.items():
            for oi in objects:
                m_init[(p, oi)] += n
    for ot, marking in merged.final_places.items():
        objects = sorted(log.objects_of_type(ot)) if ot in log.object_types else []
        for p, n in marking.items():
            for oi in objects:
                m_final[(p, oi)] += n
    return m_init, m_final


@dataclass
class DiscoveryParams:
    noise: float = 0.0
    tau: float = 0.98
    filter_spec: Optional[FilterSpec] = None
    types: Optional[set[str]] = None  # object-type view; default all

    def __post_init__(self):
        if not 0.0 <= self.noise <= 1.0:
            raise OcpnError(f"noise must be in [0, 1], got {self.noise}")
        if not 0.0 <= self.tau <= 1.0:
            raise OcpnError(f"tau must be in [0, 1], got {self.tau}")


def discover_ocpn(
    log: ObjectCentricEventLog, params: Optional[DiscoveryParams] = None
) -> AcceptingOCPN:
    """Full pipeline: filter, flatten per type, discover per type, merge,
    identify variable arcs, replicate markings."""
    params = params or DiscoveryParams()
    if params.filter_spec is not None:
        log = filter_log(log, params.filter_spec)
    types = set(log.object_types)
    if params.types is not None:
        unknown = params.types - types
        if unknown:
            raise LogError(f"unknown object types in view: {sorted(unknown)}")
        types &= params.types
    if not types:
        raise OcpnError("log has no objects of any selected type")
    nets: dict[str, AcceptingPetriNet] = {}
    for ot in sorted(types):
        trace_log = to_trace_log(flatten(log, ot))
        nets[ot] = discover_accepting_net(trace_log, noise=params.noise, prefix=ot)
    merged = merge_nets(nets)
    f_var = identify_variable_arcs(log, merged, params.tau)
    ocpn = ObjectCentricPetriNet(merged.net, dict(merged.pt), f_var)
    ok, violations = is_well_formed(ocpn)
    if not ok:
        raise OcpnError(f"discovered net is not well-formed: {violations}")
    m_init, m_final = build_ocpn_markings(log, merged)
    return AcceptingOCPN(ocpn, m_init, m_final)


# ---------------------------------------------------------------------------
# Binding execution


def binding_consumption(aocpn: AcceptingOCPN, binding: Binding) -> OcpnMarking:
    ocpn = aocpn.ocpn
    cons: OcpnMarking = Counter()
    for p in ocpn.net.preset(binding.transition):
        for oi in binding.objects.get(ocpn.pt[p], ()):
            cons[(p, oi)] += 1
    return cons


def binding_production(aocpn: AcceptingOCPN, binding: Binding) -> OcpnMarking:
    ocpn = aocpn.ocpn
    prod: OcpnMarking = Counter()
    for p in ocpn.net.postset(binding.transition):
        for oi in binding.objects.get(ocpn.pt[p], ()):
            prod[(p, oi)] += 1
    return prod


def _check_binding(aocpn: AcceptingOCPN, binding: Binding) -> None:
    ocpn = aocpn.ocpn
    t = binding.transition
    if t not in ocpn.net.transitions:
        raise OcpnError(f"unknown transition {t!r}")
    tpl = ocpn.types_of(t)
    if set(binding.objects) != tpl:
        raise OcpnError(
            f"binding for {t!r} must cover exactly the types {sorted(tpl)}, "
            f"got {sorted(binding.objects)}"
        )
    for ot in ocpn.nonvariable_types_of(t):
        if len(binding.objects[ot]) != 1:
            raise OcpnError(
                f"non-variable type {ot!r} of transition {t!r} requires exactly "
                f"one object, got {len(binding.objects[ot])}"
            )


def execute_binding(aocpn: AcceptingOCPN, m: OcpnMarking, binding: Binding) -> OcpnMarking:
    """m' = m - cons + prod; errors list the missing tokens."""
    _check_binding(aocpn, binding)
    cons = binding_consumption(aocpn, binding)
    missing = cons - m
    if missing:
        raise OcpnError(f"binding not enabled; missing tokens: {sorted(missing)}")
    out = Counter(m)
    out.subtract(cons)
    out.update(binding_production(aocpn, binding))
    return +out


def execute_binding_sequence(
    aocpn: AcceptingOCPN, seq: Sequence[Binding]
) -> tuple[OcpnMarking, list[tuple[str, Binding]]]:
    """Fold execute_binding from the initial marking; the visible sequence
    drops silent transitions and maps transitions to their labels."""
    m = +aocpn.m_init
    visible: list[tuple[str, Binding]] = []
    for i, binding in enumerate(seq):
        try:
            m = execute_binding(aocpn, m, binding)
        except OcpnError as exc:
            raise OcpnError(f"step {i} ({binding.transition!r}): {exc}") from exc
        label = aocpn.ocpn.net.label(binding.transition)
        if label is not None:
            visible.append((label, binding))
    return m, visible


# ---------------------------------------------------------------------------
# Simulation


@dataclass
class ObjectPopulation:
    """Synthetic object population with explicit correlation.

    counts: objects per type.  ownership maps a child type to (owner type,
    children per owner); sizes may be a constant or an explicit per-owner
    list.  batches maps a grouping type (e.g. a route) to (child type,
    batch size); batches collect children that are ready at the grouping
    transition, greedily in id order.
    """

    counts: Mapping[str, int]
    ownership: Mapping[str, tuple[str, object]] = field(default_factory=dict)
    batches: Mapping[str, tuple[str, object]] = field(default_factory=dict)

    def object_ids(self, ot: str) -> list[str]:
        return [f"{ot[:2]}{i + 1:05d}" for i in range(self.counts[ot])]


def _owner_assignment(pop: ObjectPopulation, child_ot: str, rng: random.Random) -> dict[str, list[str]]:
    owner_ot, sizes = pop.ownership[child_ot]
    owners = pop.object_ids(owner_ot)
    children = pop.object_ids(child_ot)
    if isinstance(sizes, int):
        per_owner = [sizes] * len(owners)
    else:
        per_owner = list(sizes)
    if len(per_owner) != len(owners) or sum(per_owner) != len(children):
        raise OcpnError(
            f"ownership sizes for {child_ot!r} must cover {len(owners)} owners "
            f"and {len(children)} children"
        )
    out: dict[str, list[str]] = {}
    it = iter(children)
    for owner, n in zip(owners, per_owner):
        out[owner] = [next(it) for _ in range(n)]
    return out


def simulate_log(
    aocpn: AcceptingOCPN,
    population: ObjectPopulation,
    seed: int = 0,
    start_time: Optional[datetime] = None,
    step: timedelta = timedelta(minutes=1),
) -> ObjectCentricEventLog:
    """Generate an object-centric event log by executing random enabled
    bindings of `aocpn` over the population, honoring the correlation spec.

    Deterministic for a fixed seed.  Raises OcpnError when the population
    cannot complete (tokens stuck before the final marking is reached).
    """
    rng = random.Random(seed)
    ocpn = aocpn.ocpn
    clock = start_time or datetime(2021, 3, 1, 8, 0, tzinfo=timezone.utc)

    type_of_obj: dict[str, str] = {}
    for ot in population.counts:
        for oi in population.object_ids(ot):
            type_of_obj[oi] = ot
    owners: dict[str, dict[str, list[str]]] = {
        child: _owner_assignment(population, child, rng) for child in population.ownership
    }
    owner_of: dict[str, str] = {}
    for child_ot, assignment in owners.items():
        for owner, kids in assignment.items():
            for kid in kids:
                owner_of[kid] = owner
    child_of_owner_type = {owner_ot: child for child, (owner_ot, _) in population.ownership.items()}
    batch_spec: dict[str, tuple[str, object]] = dict(population.batches)
    used_in_batch: dict[str, set[str]] = {bt: set() for bt in batch_spec}
    formed: dict[str, int] = {bt: 0 for bt in batch_spec}
    # batch membership is fixed when the batch object first fires and is
    # reused by every later transition over the same type pair
    batch_members: dict[str, frozenset[str]] = {}
    batch_of_child: dict[tuple[str, str], str] = {}  # (bt, child) -> batch obj

    # place -> set of objects with a token there (all tokens here are unit)
    place_objs: dict[str, set[str]] = defaultdict(set)
    init_by_type: dict[str, Marking] = defaultdict(Counter)
    final_by_type: dict[str, Marking] = defaultdict(Counter)
    for (p, _), n in aocpn.m_init.items():
        init_by_type[ocpn.pt[p]][p] += n
    for (p, _), n in aocpn.m_final.items():
        final_by_type[ocpn.pt[p]][p] += n
    for ot in population.counts:
        if ot not in init_by_type:
            raise OcpnError(f"population type {ot!r} has no initial place in the net")
        for oi in population.object_ids(ot):
            for p in init_by_type[ot]:
                place_objs[p].add(oi)

    consumers: dict[str, list[str]] = defaultdict(list)
    for p, t in ((s, d) for s, d in ocpn.net.arcs if s in ocpn.pt):
        consumers[p].append(t)
    pre_by_type: dict[str, dict[str, list[str]]] = {}
    for t in ocpn.net.transitions:
        by_type: dict[str, list[str]] = defaultdict(list)
        for p in ocpn.net.preset(t):
            by_type[ocpn.pt[p]].append(p)
        pre_by_type[t] = dict(by_type)

    def kind_of(t: str) -> str:
        tpl = ocpn.types_of(t)
        for bt in batch_spec:
            if bt in tpl and batch_spec[bt][0] in tpl:
                return "batch"
        for owner_ot, child_ot in child_of_owner_type.items():
            if owner_ot in tpl and child_ot in tpl:
                return "owner"
        return "single"

    t_kind = {t: kind_of(t) for t in ocpn.net.transitions}

    def ready(t: str, ot: str, oi: str) -> bool:
        pre = pre_by_type[t].get(ot)
        return bool(pre) and all(oi in place_objs[p] for p in pre)

    # candidate pool with lazy staleness: keys are re-validated when drawn
    pool: list[tuple] = []

    def push_keys_for_token(p: str, oi: str) -> None:
        ot = ocpn.pt[p]
        for t in consumers[p]:
            kind = t_kind[t]
            if kind == "single":
                pool.append(("single", t, oi))
            elif kind == "owner":
                owner = oi if ot in child_of_owner_type else owner_of.get(oi)
                if owner is not None:
                    pool.append(("owner", t, owner))
            else:  # batch
                bt = next(b for b in batch_spec if b in ocpn.types_of(t))
                if ot == bt:
                    if oi in batch_members:
                        pool.append(("batch", t, oi))
                    else:
                        pool.append(("form", t, bt))
                else:
                    b_obj = batch_of_child.get((bt, oi))
                    if b_obj is not None:
                        pool.append(("batch", t, b_obj))
                    else:
                        pool.append(("form", t, bt))

    for p, objs in place_objs.items():
        for oi in sorted(objs):
            push_keys_for_token(p, oi)

    def binding_for(key: tuple) -> Optional[Binding]:
        kind, t = key[0], key[1]
        if kind == "single":
            oi = key[2]
            ot = type_of_obj[oi]
            return Binding(t, {ot: frozenset({oi})}) if ready(t, ot, oi) else None
        if kind == "owner":
            owner = key[2]
            owner_ot = type_of_obj[owner]
            child_ot = child_of_owner_type[owner_ot]
            if not ready(t, owner_ot, owner):
                return None
            kids = owners[child_ot].get(owner, [])
            if all(ready(t, child_ot, k) for k in kids):
                return Binding(t, {owner_ot: frozenset({owner}), child_ot: frozenset(kids)})
            return None
        if kind == "batch":
            b_obj = key[2]
            bt = type_of_obj[b_obj]
            child_ot = batch_spec[bt][0]
            members = batch_members.get(b_obj)
            if members is None or not ready(t, bt, b_obj):
                return None
            if all(ready(t, child_ot, k) for k in members):
                return Binding(t, {bt: frozenset({b_obj}), child_ot: members})
            return None
        # form a new batch greedily over ready, unassigned children
        bt = key[2]
        child_ot, size_spec = batch_spec[bt]
        b_candidates = [
            oi
            for p in pre_by_type[t].get(bt, [])
            for oi in place_objs[p]
            if oi not in batch_members
        ]
        if not b_candidates:
            return None
        b_obj = min(b_candidates)
        if not ready(t, bt, b_obj):
            return None
        child_pre = pre_by_type[t].get(child_ot, [])
        if not child_pre:
            return None
        avail = set.intersection(*(place_objs[p] for p in child_pre)) - used_in_batch[bt]
        remaining_batches = population.counts[bt] - formed[bt]
        remaining_children = population.counts[child_ot] - len(used_in_batch[bt])
        if isinstance(size_spec, int):
            size = size_spec
        else:  # "greedy": spread remaining children evenly over batches
            size = -(-remaining_children // max(remaining_batches, 1))
        if size <= 0 or len(avail) < size:
            return None
        members = frozenset(sorted(avail)[:size])
        batch_members[b_obj] = members
        formed[bt] += 1
        used_in_batch[bt] |= set(members)
        for kid in members:
            batch_of_child[(bt, kid)] = b_obj
        return Binding(t, {bt: frozenset({b_obj}), child_ot: members})

    events: list[Event] = []
    n_event = 0
    while pool:
        idx = rng.randrange(len(pool))
        pool[idx], pool[-1] = pool[-1], pool[idx]
        key = pool.pop()
        binding = binding_for(key)
        if binding is None:
            continue
        t = binding.transition
        for p in ocpn.net.preset(t):
            for oi in binding.objects.get(ocpn.pt[p], ()):
                place_objs[p].discard(oi)
        for p in ocpn.net.postset(t):
            for oi in sorted(binding.objects.get(ocpn.pt[p], ())):
                place_objs[p].add(oi)
                push_keys_for_token(p, oi)
        if key[0] == "form":
            pool.append(key)  # more batches may be formable right away
        label = ocpn.net.label(t)
        if label is not None:
            n_event += 1
            events.append(
                Event(
                    ei=f"e{n_event}",
                    act=label,
                    time=clock,
                    omap={ot: objs for ot, objs in binding.objects.items() if objs},
                    vmap={},
                )
            )
            clock = clock + step
    # every object must have reached its final place
    final_objs: dict[str, set[str]] = defaultdict(set)
    for ot in population.counts:
        for oi in population.object_ids(ot):
            for p in final_by_type.get(ot, Counter()):
                final_objs[p].add(oi)
    actual = {p: objs for p, objs in place_objs.items() if objs}
    if actual != {p: objs for p, objs in final_objs.items() if objs}:
        stuck = {
            p: sorted(objs - final_objs.get(p, set()))[:3]
            for p, objs in actual.items()
            if objs - final_objs.get(p, set())
        }
        raise OcpnError(f"population cannot complete; stuck tokens (sample): {stuck}")
    return ObjectCentricEventLog(events)
