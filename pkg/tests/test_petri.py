"""Petri net structure, firing semantics, reachability and language."""

from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ocmine.petri import (
    AcceptingPetriNet,
    ExplorationBound,
    LabeledPetriNet,
    Marking,
    PetriError,
    conformance_fraction,
    enabled_transitions,
    fire,
    net_from_arcs,
    reachable_markings,
    trace_accepted,
    visible_language,
)


class TestStructure:
    def test_arcs_must_be_bipartite(self):
        with pytest.raises(PetriError, match="connect a place and a transition"):
            LabeledPetriNet(frozenset({"p", "q"}), frozenset({"t"}),
                            frozenset({("p", "q")}), {})

    def test_unknown_arc_endpoint(self):
        with pytest.raises(PetriError, match="unknown node"):
            LabeledPetriNet(frozenset({"p"}), frozenset({"t"}),
                            frozenset({("p", "x")}), {})

    def test_marking_over_unknown_place(self):
        net = net_from_arcs([("p", "t"), ("t", "q")], {"t": "a"})
        with pytest.raises(PetriError, match="unknown places"):
            AcceptingPetriNet(net, Marking({"zzz": 1}), Marking({"q": 1}))

    def test_net_from_arcs_infers_kinds(self):
        net = net_from_arcs([("p", "t"), ("t", "q")], {"t": "a"})
        assert net.places == {"p", "q"}
        assert net.transitions == {"t"}
        assert net.label("t") == "a"


class TestFiring:
    @pytest.fixture
    def seq_net(self):
        net = net_from_arcs(
            [("p1", "t1"), ("t1", "p2"), ("p2", "t2"), ("t2", "p3")],
            {"t1": "a", "t2": "b"},
        )
        return AcceptingPetriNet(net, Marking({"p1": 1}), Marking({"p3": 1}))

    def test_enabled(self, seq_net):
        assert enabled_transitions(seq_net, Marking({"p1": 1})) == {"t1"}

    def test_fire_moves_token(self, seq_net):
        m = fire(seq_net, Marking({"p1": 1}), "t1")
        assert m == Marking({"p2": 1})

    def test_fire_disabled_raises(self, seq_net):
        with pytest.raises(PetriError, match="missing tokens"):
            fire(seq_net, Marking({"p1": 1}), "t2")

    def test_fire_keeps_extra_tokens(self, seq_net):
        m = fire(seq_net, Marking({"p1": 2, "p2": 1}), "t1")
        assert m == Marking({"p1": 1, "p2": 2})


class TestOrderProcessNet:
    def test_reachable_markings(self, order_process_net):
        assert len(reachable_markings(order_process_net)) == 11

    def test_named_markings_present(self, order_process_net):
        keys = reachable_markings(order_process_net)
        assert (("p1", 1),) in keys
        assert (("p2", 1), ("p3", 1)) in keys
        assert (("p4", 1), ("p7", 1)) in keys
        assert (("p8", 1),) in keys

    def test_loop_free_language_has_six_traces(self, order_process_net):
        # drop the reminder loop; the two branches interleave freely
        net = order_process_net.net
        arcs = {(a, b) for a, b in net.arcs if "sr" not in (a, b)}
        labels = {t: l for t, l in net.labels.items() if t != "sr"}
        loop_free = AcceptingPetriNet(
            LabeledPetriNet(net.places, net.transitions - {"sr"},
                            frozenset(arcs), labels),
            order_process_net.m_init,
            order_process_net.m_final,
        )
        lang = visible_language(loop_free, max_len=7)
        assert len(lang) == 6

    def test_example_traces_accepted(self, order_process_net):
        assert trace_accepted(order_process_net,
                              ["po", "in", "pi", "sr", "sh", "pa", "co"])
        assert trace_accepted(order_process_net,
                              ["po", "pi", "sh", "in", "pa", "co"])
        assert trace_accepted(
            order_process_net,
            ["po", "in", "sr", "sr", "pi", "sr", "pa", "sh", "co"])

    def test_swapped_trace_rejected(self, order_process_net):
        assert not trace_accepted(order_process_net,
                                  ["po", "sh", "pi", "in", "pa", "co"])

    def test_conformance_fraction(self, order_process_net):
        log = Counter({
            ("po", "pi", "sh", "in", "pa", "co"): 8,
            ("po", "sh", "pi", "in", "pa", "co"): 2,
        })
        assert conformance_fraction(log, order_process_net) == 0.8

    def test_conformance_of_empty_log_rejected(self, order_process_net):
        with pytest.raises(PetriError):
            conformance_fraction(Counter(), order_process_net)


class TestSilentTransitions:
    @pytest.fixture
    def skip_net(self):
        # a, then optionally b (a silent transition skips it)
        net = net_from_arcs(
            [("p1", "ta"), ("ta", "p2"), ("p2", "tb"), ("tb", "p3"),
             ("p2", "tau"), ("tau", "p3")],
            {"ta": "a", "tb": "b"},
            transitions=["tau"],
        )
        return AcceptingPetriNet(net, Marking({"p1": 1}), Marking({"p3": 1}))

    def test_language_includes_skip(self, skip_net):
        assert visible_language(skip_net, max_len=3) == {("a",), ("a", "b")}

    def test_membership_with_silent_moves(self, skip_net):
        assert trace_accepted(skip_net, ["a"])
        assert trace_accepted(skip_net, ["a", "b"])
        assert not trace_accepted(skip_net, ["b"])
        assert not trace_accepted(skip_net, [])

    def test_silent_loop_terminates(self):
        net = net_from_arcs(
            [("p1", "tau1"), ("tau1", "p2"), ("p2", "tau2"), ("tau2", "p1"),
             ("p2", "ta"), ("ta", "p3")],
            {"ta": "a"},
            transitions=["tau1", "tau2"],
        )
        apn = AcceptingPetriNet(net, Marking({"p1": 1}), Marking({"p3": 1}))
        assert trace_accepted(apn, ["a"])
        assert not trace_accepted(apn, ["a", "a"])


class TestBounds:
    def test_reachability_bound(self, order_process_net):
        with pytest.raises(ExplorationBound):
            reachable_markings(order_process_net, bound=3)

    def test_membership_bound_is_error_not_false(self, order_process_net):
        with pytest.raises(ExplorationBound):
            trace_accepted(order_process_net,
                           ["po", "pi", "sh", "in", "pa", "co"], max_states=2)


class TestFiringProperties:
    @given(st.integers(min_value=0, max_value=3),
           st.integers(min_value=1, max_value=3))
    @settings(max_examples=50, deadline=None)
    def test_fire_conserves_untouched_places(self, extra, tokens):
        net = net_from_arcs(
            [("p1", "t"), ("t", "p2")], {"t": "a"},
            places=["p_idle"],
        )
        apn = AcceptingPetriNet(net, Marking({"p1": 1}), Marking({"p2": 1}))
        m = Marking({"p1": tokens, "p_idle": extra})
        m2 = fire(apn, m, "t")
        assert m2["p_idle"] == extra
        assert sum(m2.values()) == sum(m.values())
