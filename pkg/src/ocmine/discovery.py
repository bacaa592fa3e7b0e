"""Per-case-notion discovery: trace log -> directly-follows graph ->
process tree -> accepting Petri net.

The cut detection follows the usual inductive-miner recipe over the DFG
with fixed precedence exclusive -> sequence -> parallel -> loop and a
flower-model fall-through, so the result always exists and, at noise 0,
accepts every input trace.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from ocmine.petri import AcceptingPetriNet, LabeledPetriNet, Marking


class DiscoveryError(ValueError):
    pass


@dataclass
class DirectlyFollowsGraph:
    activities: set[str]
    edges: Counter  # (a, b) -> frequency
    start_acts: Counter
    end_acts: Counter

    def successors(self, a: str) -> set[str]:
        return {b for (x, b) in self.edges if x == a}


def build_dfg(trace_log: Counter) -> DirectlyFollowsGraph:
    """Directly-follows counts plus start/end activity multisets."""
    if not trace_log:
        raise DiscoveryError("cannot build a DFG from an empty trace log")
    activities: set[str] = set()
    edges = Counter()
    starts = Counter()
    ends = Counter()
    for trace, count in trace_log.items():
        if not trace:
            raise DiscoveryError("traces must be non-empty")
        activities.update(trace)
        starts[trace[0]] += count
        ends[trace[-1]] += count
        for a, b in zip(trace, trace[1:]):
            edges[(a, b)] += count
    return DirectlyFollowsGraph(activities, edges, starts, ends)


def filter_dfg(dfg: DirectlyFollowsGraph, noise: float) -> DirectlyFollowsGraph:
    """Drop edge (a, b) when its frequency is below noise times the
    strongest outgoing edge of a.  Each node keeps its strongest outgoing
    and incoming edge so no activity gets disconnected."""
    if noise <= 0:
        return dfg
    max_out: dict[str, int] = defaultdict(int)
    max_in: dict[str, int] = defaultdict(int)
    for (a, b), f in dfg.edges.items():
        max_out[a] = max(max_out[a], f)
        max_in[b] = max(max_in[b], f)
    kept = Counter()
    for (a, b), f in dfg.edges.items():
        protected = f == max_out[a] or f == max_in[b]
        if protected or f >= noise * max_out[a]:
            kept[(a, b)] = f
    return DirectlyFollowsGraph(set(dfg.activities), kept, Counter(dfg.start_acts), Counter(dfg.end_acts))


# ---------------------------------------------------------------------------
# Process trees

XOR = "xor"
SEQ = "seq"
AND = "and"
LOOP = "loop"


@dataclass(frozen=True)
class ProcessTree:
    """leaf: kind='act' with a label; silent leaf: kind='tau';
    operators: kind in {xor, seq, and, loop} with children (loop: first
    child is the do-part, the rest are redo-parts)."""

    kind: str
    label: Optional[str] = None
    children: tuple["ProcessTree", ...] = ()

    def __str__(self) -> str:
        if self.kind == "act":
            return self.label or "?"
        if self.kind == "tau":
            return "tau"
        return f"{self.kind}({', '.join(str(c) for c in self.children)})"


def leaf(activity: str) -> ProcessTree:
    return ProcessTree("act", label=activity)


def tau() -> ProcessTree:
    return ProcessTree("tau")


def node(kind: str, children: Sequence[ProcessTree]) -> ProcessTree:
    return ProcessTree(kind, children=tuple(children))


# ---------------------------------------------------------------------------
# Cut detection

def _undirected_components(acts: set[str], pairs: Iterable[tuple[str, str]]) -> list[set[str]]:
    parent = {a: a for a in acts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict[str, set[str]] = defaultdict(set)
    for a in acts:
        groups[find(a)].add(a)
    return sorted(groups.values(), key=lambda g: min(g))


def _exclusive_cut(dfg: DirectlyFollowsGraph) -> Optional[list[set[str]]]:
    comps = _undirected_components(dfg.activities, dfg.edges.keys())
    return comps if len(comps) >= 2 else None


def _sccs(acts: set[str], edges: set[tuple[str, str]]) -> list[frozenset[str]]:
    # Tarjan, iterative
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[frozenset[str]] = []
    succ: dict[str, list[str]] = defaultdict(list)
    for a, b in edges:
        succ[a].append(b)
    counter = itertools.count()
    for root in sorted(acts):
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                out.append(frozenset(comp))
    return out


def _sequence_cut(dfg: DirectlyFollowsGraph) -> Optional[list[set[str]]]:
    edges = set(dfg.edges.keys())
    sccs = _sccs(dfg.activities, edges)
    if len(sccs) < 2:
        return None
    comp_of = {a: c for c in sccs for a in c}
    # reachability between SCCs
    succ: dict[frozenset, set[frozenset]] = defaultdict(set)
    for a, b in edges:
        ca, cb = comp_of[a], comp_of[b]
        if ca != cb:
            succ[ca].add(cb)
    reach: dict[frozenset, set[frozenset]] = {}

    def reachable(c) -> set:
        if c in reach:
            return reach[c]
        reach[c] = set()  # cycle guard; condensation is acyclic anyway
        acc = set()
        for n in succ[c]:
            acc.add(n)
            acc |= reachable(n)
        reach[c] = acc
        return acc

    for c in sccs:
        reachable(c)
    # merge pairwise-unordered SCCs until the parts are totally ordered
    parts: list[set[frozenset]] = [{c} for c in sccs]

    def ordered(p1: set, p2: set) -> Optional[bool]:
        # True: p1 strictly before p2; False: p2 before p1; None: merge
        fwd = any(c2 in reach[c1] for c1 in p1 for c2 in p2)
        bwd = any(c1 in reach[c2] for c1 in p1 for c2 in p2)
        if fwd and not bwd:
            return True
        if bwd and not fwd:
            return False
        return None

    changed = True
    while changed:
        changed = False
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                if ordered(parts[i], parts[j]) is None:
                    parts[i] |= parts[j]
                    del parts[j]
                    changed = True
                    break
            if changed:
                break
    if len(parts) < 2:
        return None
    # predecessor counts, computed before sorting (the key function must
    # not read the list being sorted)
    keyed = [
        (sum(1 for q in parts if q is not p and ordered(q, p) is True), i, p)
        for i, p in enumerate(parts)
    ]
    keyed.sort(key=lambda kp: (kp[0], kp[1]))
    return [set().union(*(set(c) for c in p)) for _, _, p in keyed]


def _parallel_cut(dfg: DirectlyFollowsGraph) -> Optional[list[set[str]]]:
    edges = set(dfg.edges.keys())
    # connect a-b when they are NOT mutually directly-following; components
    # of this graph are the candidate concurrent parts
    pairs = []
    for a, b in itertools.combinations(sorted(dfg.activities), 2):
        if not ((a, b) in edges and (b, a) in edges):
            pairs.append((a, b))
    comps = _undirected_components(dfg.activities, pairs)
    if len(comps) < 2:
        return None
    for comp in comps:
        if not (comp & set(dfg.start_acts)) or not (comp & set(dfg.end_acts)):
            return None
    return comps


def _loop_cut(dfg: DirectlyFollowsGraph) -> Optional[list[set[str]]]:
    starts = set(dfg.start_acts)
    ends = set(dfg.end_acts)
    boundary = starts | ends
    rest = dfg.activities - boundary
    if not rest:
        return None
    # remove the boundary activities; remaining components are redo
    # candidates, validated below and otherwise folded into the do-part
    pairs = [(a, b) for (a, b) in dfg.edges if a in rest and b in rest]
    comps = _undirected_components(rest, pairs)
    do = set(boundary)
    valid: list[set[str]] = []
    for redo in comps:
        # a redo part may only be entered from end activities and left
        # into start activities
        ok = True
        for a, b in dfg.edges:
            if b in redo and a not in redo and a not in ends:
                ok = False
            if a in redo and b not in redo and b not in starts:
                ok = False
        if ok:
            valid.append(redo)
        else:
            do |= redo
    if not valid:
        return None
    return [do] + valid


# ---------------------------------------------------------------------------
# Log projections per cut kind
#
# Recursing on projected trace logs (rather than projected DFGs) keeps the
# fitness guarantee at noise 0: behavior a DFG abstraction would lose, such
# as a part not occurring in some trace, reappears here as an empty trace
# in the sub-log and turns into a skip.


def _part_index(parts: Sequence[set[str]]) -> dict[str, int]:
    index: dict[str, int] = {}
    for i, part in enumerate(parts):
        for a in part:
            index[a] = i
    return index


def _xor_split(log: Counter, parts: Sequence[set[str]]) -> list[Counter]:
    index = _part_index(parts)
    out = [Counter() for _ in parts]
    for trace, count in log.items():
        k = index[trace[0]]
        out[k][tuple(a for a in trace if index[a] == k)] += count
    return out


def _seq_split(log: Counter, parts: Sequence[set[str]]) -> list[Counter]:
    index = _part_index(parts)
    out = [Counter() for _ in parts]
    for trace, count in log.items():
        segments: list[list[str]] = [[] for _ in parts]
        for a in trace:
            segments[index[a]].append(a)
        for k, seg in enumerate(segments):
            out[k][tuple(seg)] += count
    return out


def _and_split(log: Counter, parts: Sequence[set[str]]) -> list[Counter]:
    out = [Counter() for _ in parts]
    for trace, count in log.items():
        for k, part in enumerate(parts):
            out[k][tuple(a for a in trace if a in part)] += count
    return out


def _loop_split(log: Counter, parts: Sequence[set[str]]) -> list[Counter]:
    index = _part_index(parts)
    out = [Counter() for _ in parts]
    for trace, count in log.items():
        seg: list[str] = [trace[0]]
        cur = index[trace[0]]
        for a in trace[1:]:
            k = index[a]
            if k == cur:
                seg.append(a)
            else:
                out[cur][tuple(seg)] += count
                seg, cur = [a], k
        out[cur][tuple(seg)] += count
        # a trace ending in a redo part still needs a do round to exit
        if cur != 0:
            out[0][()] += count
    return out


def _flower(acts: set[str]) -> ProcessTree:
    return node(LOOP, [tau()] + [leaf(a) for a in sorted(acts)])


def discover_process_tree(trace_log: Counter, noise: float = 0.0) -> ProcessTree:
    """Recursive cut detection with precedence xor -> seq -> and -> loop
    and a flower-model fall-through."""
    log = Counter(trace_log)
    empties = log.pop((), 0)
    if not log:
        return tau()

    def wrap(tree: ProcessTree) -> ProcessTree:
        if not empties:
            return tree
        if tree.kind == XOR:
            return node(XOR, list(tree.children) + [tau()])
        return node(XOR, [tree, tau()])

    acts = {a for trace in log for a in trace}
    if len(acts) == 1:
        a = next(iter(acts))
        if all(len(trace) == 1 for trace in log):
            return wrap(leaf(a))
        return wrap(node(LOOP, [leaf(a), tau()]))

    dfg = filter_dfg(build_dfg(log), noise)

    cut = _exclusive_cut(dfg)
    if cut:
        subs = _xor_split(log, cut)
        return wrap(node(XOR, [discover_process_tree(s, noise) for s in subs]))

    cut = _sequence_cut(dfg)
    if cut:
        subs = _seq_split(log, cut)
        return wrap(node(SEQ, [discover_process_tree(s, noise) for s in subs]))

    cut = _parallel_cut(dfg)
    if cut:
        subs = _and_split(log, cut)
        return wrap(node(AND, [discover_process_tree(s, noise) for s in subs]))

    cut = _loop_cut(dfg)
    if cut:
        subs = _loop_split(log, cut)
        return wrap(node(LOOP, [discover_process_tree(s, noise) for s in subs]))

    return wrap(_flower(acts))


# ---------------------------------------------------------------------------
# Tree -> accepting Petri net

class _NetBuilder:
    def __init__(self, prefix: str):
        self.prefix = prefix
        self.place_n = 0
        self.silent_n = 0
        self.arcs: list[tuple[str, str]] = []
        self.labels: dict[str, str] = {}
        self.transitions: list[str] = []

    def place(self) -> str:
        self.place_n += 1
        return f"{self.prefix}:p{self.place_n}"

    def silent(self) -> str:
        self.silent_n += 1
        t = f"{self.prefix}:tau{self.silent_n}"
        self.transitions.append(t)
        return t

    def labeled(self, activity: str) -> str:
        t = f"{self.prefix}:t:{activity}"
        if t in self.labels:
            raise DiscoveryError(f"duplicate activity label {activity!r}")
        self.transitions.append(t)
        self.labels[t] = activity
        return t

    def arc(self, src: str, dst: str) -> None:
        self.arcs.append((src, dst))

    def build(self, tree: ProcessTree, pin: str, pout: str) -> None:
        if tree.kind == "act":
            t = self.labeled(tree.label)
            self.arc(pin, t)
            self.arc(t, pout)
        elif tree.kind == "tau":
            t = self.silent()
            self.arc(pin, t)
            self.arc(t, pout)
        elif tree.kind == SEQ:
            cur = pin
            for child in tree.children[:-1]:
                nxt = self.place()
                self.build(child, cur, nxt)
                cur = nxt
            self.build(tree.children[-1], cur, pout)
        elif tree.kind == XOR:
            for child in tree.children:
                self.build(child, pin, pout)
        elif tree.kind == AND:
            split = self.silent()
            join = self.silent()
            self.arc(pin, split)
            self.arc(join, pout)
            for child in tree.children:
                cin = self.place()
                cout = self.place()
                self.arc(split, cin)
                self.arc(cout, join)
                self.build(child, cin, cout)
        elif tree.kind == LOOP:
            enter = self.silent()
            leave = self.silent()
            body_in = self.place()
            body_out = self.place()
            self.arc(pin, enter)
            self.arc(enter, body_in)
            self.arc(body_out, leave)
            self.arc(leave, pout)
            self.build(tree.children[0], body_in, body_out)
            for redo in tree.children[1:]:
                self.build(redo, body_out, body_in)
        else:
            raise DiscoveryError(f"unknown tree node kind {tree.kind!r}")


def tree_to_accepting_net(tree: ProcessTree, prefix: str = "net") -> AcceptingPetriNet:
    """Workflow net with single-token source/sink markings."""
    b = _NetBuilder(prefix)
    source = b.place()
    sink = b.place()
    b.build(tree, source, sink)
    places = {source, sink}
    for src, dst in b.arcs:
        for n in (src, dst):
            if n not in b.transitions:
                places.add(n)
    net = LabeledPetriNet(
        frozenset(places), frozenset(b.transitions), frozenset(b.arcs), dict(b.labels)
    )
    return AcceptingPetriNet(net, Marking({source: 1}), Marking({sink: 1}))


def discover_accepting_net(
    trace_log: Counter, noise: float = 0.0, prefix: str = "net"
) -> AcceptingPetriNet:
    """Full per-case-notion pipeline: trace log to tree to net."""
    if not trace_log:
        raise DiscoveryError("cannot discover from an empty trace log")
    tree = discover_process_tree(trace_log, noise)
    return tree_to_accepting_net(tree, prefix=prefix)
