"""Object-centric Petri nets: merging, variable arcs, well-formedness,
binding execution and the simulator."""

from collections import Counter
from datetime import datetime, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ocmine.examples import (
    generate_order_item_route_log,
    order_item_route_model,
    order_item_route_population,
)
from ocmine.log import ObjectCentricEventLog, make_event
from ocmine.ocpn import (
    AcceptingOCPN,
    Binding,
    DiscoveryParams,
    ObjectCentricPetriNet,
    ObjectPopulation,
    OcpnError,
    binding_consumption,
    binding_production,
    discover_ocpn,
    execute_binding,
    execute_binding_sequence,
    is_well_formed,
    merge_nets,
    simulate_log,
)
from ocmine.petri import AcceptingPetriNet, Marking, net_from_arcs

T0 = datetime(2021, 1, 1, 8, 0)


def ev(ei, act, minutes, omap):
    return make_event(ei, act, T0 + timedelta(minutes=minutes), omap)


def small_population():
    return order_item_route_population(
        n_orders=4, items_per_order=2, n_routes=2, batch_size=4
    )


@pytest.fixture
def small_model():
    return order_item_route_model(small_population())


class TestWellFormedness:
    def test_example_model_is_well_formed(self, small_model):
        ok, violations = is_well_formed(small_model.ocpn)
        assert ok and violations == []

    def test_mixed_arcs_detected(self):
        net = net_from_arcs(
            [("p1", "t"), ("p2", "t"), ("t", "p3"), ("t", "p4")], {"t": "a"}
        )
        pt = {"p1": "items", "p2": "items", "p3": "items", "p4": "items"}
        ocpn = ObjectCentricPetriNet(net, pt, frozenset({("p1", "t")}))
        ok, violations = is_well_formed(ocpn)
        assert not ok
        assert violations == [("t", "items")]

    def test_pt_must_cover_places(self):
        net = net_from_arcs([("p1", "t"), ("t", "p2")], {"t": "a"})
        with pytest.raises(OcpnError, match="pt must assign"):
            ObjectCentricPetriNet(net, {"p1": "items"}, frozenset())

    def test_variable_arcs_must_exist(self):
        net = net_from_arcs([("p1", "t"), ("t", "p2")], {"t": "a"})
        with pytest.raises(OcpnError, match="variable arcs"):
            ObjectCentricPetriNet(
                net, {"p1": "items", "p2": "items"}, frozenset({("p2", "t")})
            )


class TestMerge:
    def test_label_unification_and_renaming(self):
        net_a = net_from_arcs([("src", "t1"), ("t1", "snk")], {"t1": "go"})
        net_b = net_from_arcs([("src", "t9"), ("t9", "snk")], {"t9": "go"})
        merged = merge_nets({
            "orders": AcceptingPetriNet(net_a, Marking({"src": 1}), Marking({"snk": 1})),
            "items": AcceptingPetriNet(net_b, Marking({"src": 1}), Marking({"snk": 1})),
        })
        assert merged.net.transitions == {"t:go"}
        assert merged.net.places == {
            "orders@src", "orders@snk", "items@src", "items@snk",
        }
        assert merged.pt["orders@src"] == "orders"
        assert merged.net.preset("t:go") == {"orders@src", "items@src"}

    def test_duplicate_label_within_one_type_rejected(self):
        net = net_from_arcs(
            [("p1", "t1"), ("t1", "p2"), ("p2", "t2"), ("t2", "p3")],
            {"t1": "go", "t2": "go"},
        )
        with pytest.raises(OcpnError, match="duplicate label"):
            merge_nets({
                "orders": AcceptingPetriNet(net, Marking({"p1": 1}), Marking({"p3": 1})),
            })


class TestDiscoverOcpn:
    def test_variable_arcs_follow_scores(self, fragment_log):
        aocpn = discover_ocpn(fragment_log, DiscoveryParams(tau=0.98))
        ocpn = aocpn.ocpn
        for arc in ocpn.f_var:
            t = arc[1] if arc[1] in ocpn.net.transitions else arc[0]
            assert ocpn.net.label(t) is not None
        variable_pairs = {
            (ocpn.net.label(arc[1] if arc[1] in ocpn.net.transitions else arc[0]),
             ocpn.pt[ocpn.place_of_arc(arc)])
            for arc in ocpn.f_var
        }
        # every activity of the fragment touches several items at once
        assert variable_pairs == {
            ("place order", "item"),
            ("mark as completed", "item"),
            ("start route", "item"),
            ("end route", "item"),
        }

    def test_tau_zero_removes_all_variable_arcs(self, fragment_log):
        aocpn = discover_ocpn(fragment_log, DiscoveryParams(tau=0.0))
        assert aocpn.ocpn.f_var == frozenset()

    def test_type_view_restricts_places(self, fragment_log):
        aocpn = discover_ocpn(fragment_log, DiscoveryParams(types={"order", "route"}))
        assert set(aocpn.ocpn.pt.values()) == {"order", "route"}

    def test_unknown_type_view_rejected(self, fragment_log):
        with pytest.raises(Exception, match="unknown object types"):
            discover_ocpn(fragment_log, DiscoveryParams(types={"nope"}))

    def test_markings_replicated_per_object(self, fragment_log):
        aocpn = discover_ocpn(fragment_log, DiscoveryParams(types={"order"}))
        init_objects = {oi for (_, oi) in aocpn.m_init}
        assert init_objects == {"99001", "99002"}

    def test_invalid_params(self):
        with pytest.raises(OcpnError):
            DiscoveryParams(noise=1.5)
        with pytest.raises(OcpnError):
            DiscoveryParams(tau=-0.1)


class TestBindingExecution:
    def test_consumption_production(self, small_model):
        b = Binding("po", {
            "orders": frozenset({"or00001"}),
            "items": frozenset({"it00001", "it00002"}),
        })
        cons = binding_consumption(small_model, b)
        prod = binding_production(small_model, b)
        assert cons == Counter({
            ("o1", "or00001"): 1, ("i1", "it00001"): 1, ("i1", "it00002"): 1,
        })
        assert prod == Counter({
            ("o2", "or00001"): 1, ("i2", "it00001"): 1, ("i2", "it00002"): 1,
        })

    def test_execute_moves_tokens(self, small_model):
        b = Binding("po", {
            "orders": frozenset({"or00001"}),
            "items": frozenset({"it00001", "it00002"}),
        })
        m = execute_binding(small_model, small_model.m_init, b)
        assert m[("o2", "or00001")] == 1
        assert m[("o1", "or00001")] == 0
        assert m[("o1", "or00002")] == 1  # untouched order

    def test_missing_token_detected(self, small_model):
        b = Binding("pi", {"items": frozenset({"it00001"})})
        with pytest.raises(OcpnError, match="missing tokens"):
            execute_binding(small_model, small_model.m_init, b)

    def test_nonvariable_type_needs_exactly_one_object(self, small_model):
        b = Binding("po", {
            "orders": frozenset({"or00001", "or00002"}),
            "items": frozenset({"it00001"}),
        })
        with pytest.raises(OcpnError, match="exactly"):
            execute_binding(small_model, small_model.m_init, b)

    def test_binding_type_cover_enforced(self, small_model):
        b = Binding("po", {"orders": frozenset({"or00001"})})
        with pytest.raises(OcpnError, match="cover exactly"):
            execute_binding(small_model, small_model.m_init, b)

    def test_variable_arc_may_bind_empty_set(self, small_model):
        b = Binding("po", {
            "orders": frozenset({"or00001"}),
            "items": frozenset(),
        })
        m = execute_binding(small_model, small_model.m_init, b)
        assert m[("o2", "or00001")] == 1

    def test_sequence_reports_failing_step(self, small_model):
        good = Binding("po", {
            "orders": frozenset({"or00001"}),
            "items": frozenset({"it00001", "it00002"}),
        })
        bad = Binding("co", {
            "orders": frozenset({"or00001"}),
            "items": frozenset({"it00001", "it00002"}),
        })
        with pytest.raises(OcpnError, match="step 1"):
            execute_binding_sequence(small_model, [good, bad])

    def test_sequence_visible_labels(self, small_model):
        b = Binding("po", {
            "orders": frozenset({"or00001"}),
            "items": frozenset({"it00001", "it00002"}),
        })
        _, visible = execute_binding_sequence(small_model, [b])
        assert [label for label, _ in visible] == ["place order"]


class TestSimulator:
    def test_deterministic_for_seed(self):
        log1 = generate_order_item_route_log(
            seed=7, n_orders=6, items_per_order=2, n_routes=2, batch_size=6)
        log2 = generate_order_item_route_log(
            seed=7, n_orders=6, items_per_order=2, n_routes=2, batch_size=6)
        assert [(e.act, e.omap) for e in log1] == [(e.act, e.omap) for e in log2]

    def test_different_seeds_differ(self):
        log1 = generate_order_item_route_log(
            seed=1, n_orders=6, items_per_order=2, n_routes=2, batch_size=6)
        log2 = generate_order_item_route_log(
            seed=2, n_orders=6, items_per_order=2, n_routes=2, batch_size=6)
        assert [e.act for e in log1] != [e.act for e in log2]

    def test_event_counts(self):
        log = generate_order_item_route_log(
            seed=0, n_orders=6, items_per_order=2, n_routes=2, batch_size=6)
        acts = Counter(e.act for e in log)
        assert acts == Counter({
            "place order": 6, "pick item": 12, "start route": 2,
            "end route": 2, "mark as completed": 6,
        })

    def test_ownership_respected(self):
        log = generate_order_item_route_log(
            seed=0, n_orders=6, items_per_order=2, n_routes=2, batch_size=6)
        for e in log:
            if e.act == "place order":
                assert len(e.objects("orders")) == 1
                assert len(e.objects("items")) == 2

    def test_batches_respected(self):
        log = generate_order_item_route_log(
            seed=0, n_orders=6, items_per_order=2, n_routes=2, batch_size=6)
        for e in log:
            if e.act == "start route":
                assert len(e.objects("routes")) == 1
                assert len(e.objects("items")) == 6

    def test_impossible_population_rejected(self):
        # items need routes to move past start route, but there are none
        pop = ObjectPopulation(
            counts={"orders": 2, "items": 4, "routes": 0},
            ownership={"items": ("orders", 2)},
            batches={"routes": ("items", 4)},
        )
        model = order_item_route_model(small_population())
        with pytest.raises(OcpnError, match="cannot complete"):
            simulate_log(model, pop, seed=0)

    def test_replayable_per_type(self, small_model):
        from ocmine.log import flatten, to_trace_log
        from ocmine.petri import trace_accepted
        from ocmine.replay import project_type

        pop = small_population()
        log = simulate_log(small_model, pop, seed=3)
        for ot in ("orders", "items", "routes"):
            apn = project_type(small_model, ot)
            for trace in to_trace_log(flatten(log, ot)):
                assert trace_accepted(apn, trace)


class TestMultisetLaws:
    def test_union(self):
        assert Counter("ab") + Counter("bc") == Counter({"a": 1, "b": 2, "c": 1})

    def test_difference(self):
        assert Counter({"a": 1, "b": 2, "c": 1}) - Counter("bc") == Counter("ab")

    def test_containment(self):
        assert Counter("ab") <= Counter({"a": 1, "b": 2, "c": 1})
        assert not Counter({"a": 2}) <= Counter({"a": 1, "b": 2, "c": 1})

    @given(st.dictionaries(st.sampled_from("abc"), st.integers(0, 5)),
           st.dictionaries(st.sampled_from("abc"), st.integers(0, 5)))
    @settings(max_examples=60, deadline=None)
    def test_union_then_difference_roundtrip(self, x, y):
        mx, my = Counter(x), Counter(y)
        assert +((mx + my) - my) == +mx
