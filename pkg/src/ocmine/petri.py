"""Labeled and accepting Petri nets with marking/firing semantics.

Markings are multisets of places represented as Counters.  Language and
membership queries are bounded explorations: they raise ExplorationBound
when the configured state cap is exceeded, which is distinct from a
negative answer.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

Marking = Counter

DEFAULT_STATE_CAP = 10**6


class PetriError(ValueError):
    """Raised for structurally invalid nets or disabled firings."""


class ExplorationBound(RuntimeError):
    """Raised when a bounded state-space exploration exceeds its cap."""


@dataclass(frozen=True)
class LabeledPetriNet:
    places: frozenset[str]
    transitions: frozenset[str]
    arcs: frozenset[tuple[str, str]]
    labels: Mapping[str, str]  # partial: silent transitions are absent

    def __post_init__(self):
        if self.places & self.transitions:
            raise PetriError("places and transitions must be disjoint")
        nodes = self.places | self.transitions
        for src, dst in self.arcs:
            if src not in nodes or dst not in nodes:
                raise PetriError(f"arc ({src!r}, {dst!r}) references unknown node")
            if (src in self.places) == (dst in self.places):
                raise PetriError(f"arc ({src!r}, {dst!r}) must connect a place and a transition")
        for t in self.labels:
            if t not in self.transitions:
                raise PetriError(f"label assigned to unknown transition {t!r}")

    def preset(self, node: str) -> frozenset[str]:
        return frozenset(src for src, dst in self.arcs if dst == node)

    def postset(self, node: str) -> frozenset[str]:
        return frozenset(dst for src, dst in self.arcs if src == node)

    def label(self, t: str) -> Optional[str]:
        return self.labels.get(t)


def net_from_arcs(
    arcs: Iterable[tuple[str, str]],
    labels: Mapping[str, str],
    places: Iterable[str] = (),
    transitions: Iterable[str] = (),
) -> LabeledPetriNet:
    """Build a net from its arc list.

    Node kinds are inferred: everything appearing in `labels`, or listed in
    `transitions`, is a transition; remaining arc endpoints are places.
    """
    trans = set(transitions) | set(labels)
    place_set = set(places)
    for src, dst in arcs:
        for node in (src, dst):
            if node not in trans and node not in place_set:
                place_set.add(node)
    # nodes listed explicitly win over inference
    place_set -= trans
    return LabeledPetriNet(frozenset(place_set), frozenset(trans), frozenset(arcs), dict(labels))


@dataclass(frozen=True)
class AcceptingPetriNet:
    net: LabeledPetriNet
    m_init: Marking
    m_final: Marking

    def __post_init__(self):
        for m in (self.m_init, self.m_final):
            unknown = set(m) - self.net.places
            if unknown:
                raise PetriError(f"marking references unknown places {sorted(unknown)}")


def _marking_key(m: Marking) -> tuple:
    return tuple(sorted((p, n) for p, n in m.items() if n > 0))


def enabled_transitions(apn: AcceptingPetriNet, m: Marking) -> set[str]:
    """Transitions whose every input place holds at least one token."""
    net = apn.net
    return {t for t in net.transitions if all(m[p] >= 1 for p in net.preset(t))}


def fire(apn: AcceptingPetriNet, m: Marking, t: str) -> Marking:
    """Fire `t` in `m`: remove one token per input place, add one per output."""
    net = apn.net
    pre = net.preset(t)
    missing = sorted(p for p in pre if m[p] < 1)
    if missing:
        raise PetriError(f"transition {t!r} not enabled; missing tokens in {missing}")
    out = Counter(m)
    out.subtract({p: 1 for p in pre})
    out.update({p: 1 for p in net.postset(t)})
    return +out


def reachable_markings(apn: AcceptingPetriNet, bound: int = DEFAULT_STATE_CAP) -> set[tuple]:
    """All markings reachable from the initial marking, as canonical keys.

    Raises ExplorationBound if more than `bound` markings are found.
    """
    if bound <= 0:
        raise PetriError("bound must be positive")
    start = _marking_key(+apn.m_init)
    seen = {start}
    queue = deque([Counter(dict(start))])
    while queue:
        m = queue.popleft()
        for t in enabled_transitions(apn, m):
            m2 = fire(apn, m, t)
            key = _marking_key(m2)
            if key not in seen:
                seen.add(key)
                if len(seen) > bound:
                    raise ExplorationBound(f"more than {bound} reachable markings")
                queue.append(m2)
    return seen


def visible_language(
    apn: AcceptingPetriNet,
    max_len: int,
    max_states: int = DEFAULT_STATE_CAP,
) -> set[tuple[str, ...]]:
    """All visible traces of length <= max_len from m_init to m_final.

    Silent firings contribute no symbols.  Exploration is over
    (marking, trace) pairs; exceeding `max_states` raises ExplorationBound.
    """
    if max_len < 0 or max_states <= 0:
        raise PetriError("bounds must be positive")
    net = apn.net
    final_key = _marking_key(+apn.m_final)
    start = (+apn.m_init, ())
    seen = {(_marking_key(start[0]), ())}
    queue = deque([start])
    out: set[tuple[str, ...]] = set()
    while queue:
        m, trace = queue.popleft()
        if _marking_key(m) == final_key:
            out.add(trace)
        for t in enabled_transitions(apn, m):
            label = net.label(t)
            if label is None:
                trace2 = trace
            elif len(trace) < max_len:
                trace2 = trace + (label,)
            else:
                continue
            m2 = fire(apn, m, t)
            state = (_marking_key(m2), trace2)
            if state not in seen:
                seen.add(state)
                if len(seen) > max_states:
                    raise ExplorationBound(f"more than {max_states} exploration states")
                queue.append((m2, trace2))
    return out


def trace_accepted(
    apn: AcceptingPetriNet,
    trace: Sequence[str],
    max_states: int = DEFAULT_STATE_CAP,
) -> bool:
    """Membership of `trace` in the visible language of `apn`.

    Reachability search over (marking, position) states; the trace is
    accepted iff (m_final, len(trace)) is reachable.  Silent transitions
    keep the position fixed.  Exceeding the state cap raises
    ExplorationBound rather than returning False.
    """
    net = apn.net
    trace = tuple(trace)
    final_key = _marking_key(+apn.m_final)
    by_label: dict[str, list[str]] = {}
    silent: list[str] = []
    for t in sorted(net.transitions):
        label = net.label(t)
        if label is None:
            silent.append(t)
        else:
            by_label.setdefault(label, []).append(t)
    start = (+apn.m_init, 0)
    seen = {(_marking_key(start[0]), 0)}
    stack = [start]
    while stack:
        m, pos = stack.pop()
        if pos == len(trace) and _marking_key(m) == final_key:
            return True
        candidates = list(silent)
        if pos < len(trace):
            candidates.extend(by_label.get(trace[pos], ()))
        for t in candidates:
            if all(m[p] >= 1 for p in net.preset(t)):
                pos2 = pos if net.label(t) is None else pos + 1
                m2 = fire(apn, m, t)
                key = (_marking_key(m2), pos2)
                if key not in seen:
                    seen.add(key)
                    if len(seen) > max_states:
                        raise ExplorationBound(
                            f"membership search exceeded {max_states} states"
                        )
                    stack.append((m2, pos2))
    return False


def conformance_fraction(trace_log: Counter, apn: AcceptingPetriNet) -> float:
    """Multiset-weighted fraction of traces accepted by `apn`."""
    total = sum(trace_log.values())
    if total == 0:
        raise PetriError("conformance fraction of an empty trace log is undefined")
    ok = sum(count for trace, count in trace_log.items() if trace_accepted(apn, trace))
    return ok / total
