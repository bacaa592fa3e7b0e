"""Bundled example models and synthetic log generators.

Two shapes of order-fulfilment processes:

* orders / items / routes: items are picked per order and delivered in
  routes that batch items across orders (fixed batch size).
* orders / items / packages: items are packaged and the packages shipped;
  package sizes are spread greedily over the item population.

Both come with hand-built object-centric Petri nets and population
builders so logs of any size can be generated deterministically.
"""

from __future__ import annotations

import random
from collections import Counter

from ocmine.ocpn import AcceptingOCPN, ObjectCentricPetriNet, ObjectPopulation, simulate_log
from ocmine.petri import LabeledPetriNet


def _populated_markings(pt, init_places, final_places, population):
    m_init = Counter()
    m_final = Counter()
    for ot, count in population.counts.items():
        for oi in population.object_ids(ot):
            for p in init_places[ot]:
                m_init[(p, oi)] += 1
            for p in final_places[ot]:
                m_final[(p, oi)] += 1
    return m_init, m_final


def order_item_route_model(population: ObjectPopulation) -> AcceptingOCPN:
    """Three-type process: orders placed with their items, items picked,
    then delivered in routes; finally each order is marked completed."""
    labels = {
        "po": "place order",
        "pi": "pick item",
        "st": "start route",
        "en": "end route",
        "co": "mark as completed",
    }
    arcs = [
        ("o1", "po"), ("po", "o2"), ("o2", "co"), ("co", "o3"),
        ("i1", "po"), ("po", "i2"), ("i2", "pi"), ("pi", "i3"),
        ("i3", "st"), ("st", "i4"), ("i4", "en"), ("en", "i5"),
        ("i5", "co"), ("co", "i6"),
        ("r1", "st"), ("st", "r2"), ("r2", "en"), ("en", "r3"),
    ]
    pt = {p: {"o": "orders", "i": "items", "r": "routes"}[p[0]]
          for p in {a for arc in arcs for a in arc if a not in labels}}
    net = LabeledPetriNet(frozenset(pt), frozenset(labels), frozenset(arcs), labels)
    f_var = frozenset(
        arc for arc in arcs
        if (arc[0].startswith("i") or arc[1].startswith("i"))
        and ("po" in arc or "st" in arc or "en" in arc or "co" in arc)
    )
    ocpn = ObjectCentricPetriNet(net, pt, f_var)
    init_places = {"orders": ["o1"], "items": ["i1"], "routes": ["r1"]}
    final_places = {"orders": ["o3"], "items": ["i6"], "routes": ["r3"]}
    m_init, m_final = _populated_markings(pt, init_places, final_places, population)
    return AcceptingOCPN(ocpn, m_init, m_final)


def order_item_route_population(
    n_orders: int = 100,
    items_per_order: int = 5,
    n_routes: int = 10,
    batch_size: int = 50,
) -> ObjectPopulation:
    return ObjectPopulation(
        counts={
            "orders": n_orders,
            "items": n_orders * items_per_order,
            "routes": n_routes,
        },
        ownership={"items": ("orders", items_per_order)},
        batches={"routes": ("items", batch_size)},
    )


def generate_order_item_route_log(seed: int = 0, **population_kwargs):
    pop = order_item_route_population(**population_kwargs)
    return simulate_log(order_item_route_model(pop), pop, seed=seed)


# ---------------------------------------------------------------------------
# orders / items / packages


def order_item_package_model(population: ObjectPopulation) -> AcceptingOCPN:
    labels = {
        "po": "place order",
        "pa": "pay order",
        "pi": "pick item",
        "cp": "create package",
        "sp": "send package",
        "pd": "package delivered",
    }
    arcs = [
        ("O1", "po"), ("po", "O2"), ("O2", "pa"), ("pa", "O3"),
        ("I1", "po"), ("po", "I2"), ("I2", "pi"), ("pi", "I3"),
        ("I3", "cp"), ("cp", "I4"),
        ("P1", "cp"), ("cp", "P2"), ("P2", "sp"), ("sp", "P3"),
        ("P3", "pd"), ("pd", "P4"),
    ]
    pt = {p: {"O": "orders", "I": "items", "P": "packages"}[p[0]]
          for p in {a for arc in arcs for a in arc if a not in labels}}
    net = LabeledPetriNet(frozenset(pt), frozenset(labels), frozenset(arcs), labels)
    f_var = frozenset(
        arc for arc in arcs
        if (arc[0].startswith("I") or arc[1].startswith("I"))
        and ("po" in arc or "cp" in arc)
    )
    ocpn = ObjectCentricPetriNet(net, pt, f_var)
    init_places = {"orders": ["O1"], "items": ["I1"], "packages": ["P1"]}
    final_places = {"orders": ["O3"], "items": ["I4"], "packages": ["P4"]}
    m_init, m_final = _populated_markings(pt, init_places, final_places, population)
    return AcceptingOCPN(ocpn, m_init, m_final)


def items_per_order_sizes(
    n_orders: int,
    n_items: int,
    seed: int = 42,
    lo: int = 1,
    hi: int = 15,
) -> list[int]:
    """A deterministic list of per-order item counts in [lo, hi] summing to
    exactly n_items, skewed toward small orders."""
    if not n_orders * lo <= n_items <= n_orders * hi:
        raise ValueError(
            f"cannot split {n_items} items over {n_orders} orders within [{lo}, {hi}]"
        )
    rng = random.Random(seed)
    mean = n_items / n_orders
    sizes = [
        min(hi, max(lo, lo + int(rng.expovariate(1.0 / max(mean - lo, 0.5)))))
        for _ in range(n_orders)
    ]
    # hit the extremes when the budget allows, then repair the sum
    if n_orders >= 2 and n_items - (n_orders - 1) * lo >= hi:
        sizes[0] = hi
        sizes[1] = lo
    diff = n_items - sum(sizes)
    while diff != 0:
        i = rng.randrange(n_orders)
        if diff > 0 and sizes[i] < hi:
            sizes[i] += 1
            diff -= 1
        elif diff < 0 and sizes[i] > lo:
            sizes[i] -= 1
            diff += 1
    return sizes


def order_item_package_population(
    n_orders: int = 2000,
    n_items: int = 8159,
    n_packages: int = 1325,
    seed: int = 42,
) -> ObjectPopulation:
    sizes = items_per_order_sizes(n_orders, n_items, seed=seed)
    return ObjectPopulation(
        counts={"orders": n_orders, "items": n_items, "packages": n_packages},
        ownership={"items": ("orders", sizes)},
        batches={"packages": ("items", "greedy")},
    )


def generate_order_item_package_log(seed: int = 42, **population_kwargs):
    pop = order_item_package_population(seed=seed, **population_kwargs)
    return simulate_log(order_item_package_model(pop), pop, seed=seed)


def scaled_order_item_package_log(target_events: int, seed: int = 42):
    """A log of roughly `target_events` events with the same shape and
    per-order/per-package ratios as the full-size population."""
    n_orders = max(4, round(target_events / 8.07))
    n_items = max(n_orders, round(n_orders * 8159 / 2000))
    n_packages = max(1, round(n_orders * 1325 / 2000))
    return generate_order_item_package_log(
        seed=seed, n_orders=n_orders, n_items=n_items, n_packages=n_packages
    )
