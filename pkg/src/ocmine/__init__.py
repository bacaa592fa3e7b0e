"""Toolkit for discovering and annotating object-centric Petri nets from
object-centric event logs."""

from ocmine.log import (
    Event,
    FilterSpec,
    FlatteningDiagnostics,
    ObjectCentricEventLog,
    filter_log,
    flatten,
    flattening_diagnostics,
    object_type_stats,
    score,
    to_trace_log,
)
from ocmine.petri import (
    AcceptingPetriNet,
    LabeledPetriNet,
    conformance_fraction,
    enabled_transitions,
    fire,
    reachable_markings,
    trace_accepted,
    visible_language,
)
from ocmine.discovery import discover_accepting_net
from ocmine.ocpn import (
    AcceptingOCPN,
    DiscoveryParams,
    ObjectCentricPetriNet,
    ObjectPopulation,
    discover_ocpn,
    simulate_log,
)
from ocmine.replay import annotate, token_replay

__all__ = [
    "Event",
    "FilterSpec",
    "FlatteningDiagnostics",
    "ObjectCentricEventLog",
    "filter_log",
    "flatten",
    "flattening_diagnostics",
    "object_type_stats",
    "score",
    "to_trace_log",
    "AcceptingPetriNet",
    "LabeledPetriNet",
    "conformance_fraction",
    "enabled_transitions",
    "fire",
    "reachable_markings",
    "trace_accepted",
    "visible_language",
    "discover_accepting_net",
    "AcceptingOCPN",
    "DiscoveryParams",
    "ObjectCentricPetriNet",
    "ObjectPopulation",
    "discover_ocpn",
    "simulate_log",
    "annotate",
    "token_replay",
]
