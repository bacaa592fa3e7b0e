"""Shared fixtures: the three-object-type log fragment, the classical
order-process accepting Petri net, and small helper builders."""

from __future__ import annotations

from datetime import datetime

import pytest

from ocmine.log import ObjectCentricEventLog, make_event
from ocmine.petri import AcceptingPetriNet, Marking, net_from_arcs


def ts(text: str) -> datetime:
    """Timestamps written in the DD-MM-YYYY:HH.MM style."""
    return datetime.strptime(text, "%d-%m-%Y:%H.%M")


@pytest.fixture
def fragment_log() -> ObjectCentricEventLog:
    """Eight events over orders 99001/99002, items 88124..88128 and routes
    66222/66223: two orders placed, two routes driven, both orders
    completed."""
    rows = [
        ("e1", "place order", "25-11-2019:09.35",
         {"order": ["99001"], "item": ["88124", "88125", "88126"]}),
        ("e2", "place order", "25-11-2019:11.35",
         {"order": ["99002"], "item": ["88127", "88128"]}),
        ("e3", "start route", "27-11-2019:08.15",
         {"item": ["88124", "88127"], "route": ["66222"]}),
        ("e4", "end route", "27-11-2019:17.30",
         {"item": ["88124", "88127"], "route": ["66222"]}),
        ("e5", "start route", "28-11-2019:08.15",
         {"item": ["88125", "88126", "88128"], "route": ["66223"]}),
        ("e6", "end route", "28-11-2019:16.45",
         {"item": ["88125", "88126", "88128"], "route": ["66223"]}),
        ("e7", "mark as completed", "01-12-2019:09.35",
         {"order": ["99001"], "item": ["88124", "88125", "88126"]}),
        ("e8", "mark as completed", "04-12-2019:11.05",
         {"order": ["99002"], "item": ["88127", "88128"]}),
    ]
    return ObjectCentricEventLog(
        [make_event(ei, act, ts(when), omap) for ei, act, when, omap in rows]
    )


@pytest.fixture
def order_process_net() -> AcceptingPetriNet:
    """Classical single-case order process: after placing the order, the
    item branch (pick, ship) and the invoice branch (invoice, reminders,
    pay) run concurrently, then the order is completed."""
    labels = {
        "po": "po", "pi": "pi", "sh": "sh", "in": "in",
        "sr": "sr", "pa": "pa", "co": "co",
    }
    arcs = [
        ("p1", "po"), ("po", "p2"), ("po", "p3"),
        ("p2", "pi"), ("pi", "p4"), ("p4", "sh"), ("sh", "p6"),
        ("p3", "in"), ("in", "p5"),
        ("p5", "sr"), ("sr", "p5"),
        ("p5", "pa"), ("pa", "p7"),
        ("p6", "co"), ("p7", "co"), ("co", "p8"),
    ]
    net = net_from_arcs(arcs, labels)
    return AcceptingPetriNet(net, Marking({"p1": 1}), Marking({"p8": 1}))
