"""Minimum-latency forwarding in opportunistic networks with exponential contacts."""

from .centralized import CentralizedResult, centralized_minlat, convergence_time_bound
from .contact_model import (
    ContactEvent,
    ContactGraph,
    ContactTrace,
    DisconnectedGraphError,
    TraceParseError,
    generate_preferential_attachment,
    parse_trace,
)
from .latency import brute_force_optimal, expected_latencies, utility
from .protocol import ESTIMATED, EXACT, init_states, on_meeting, run_protocol
from .relay import RelayCandidate, best_relay_subset, solve_lfp
from .simulator import Constraints, Scenario, Workload, compare_protocols, run_simulation

__version__ = "0.1.0"

__all__ = [
    "CentralizedResult",
    "centralized_minlat",
    "convergence_time_bound",
    "ContactEvent",
    "ContactGraph",
    "ContactTrace",
    "DisconnectedGraphError",
    "TraceParseError",
    "generate_preferential_attachment",
    "parse_trace",
    "brute_force_optimal",
    "expected_latencies",
    "utility",
    "ESTIMATED",
    "EXACT",
    "init_states",
    "on_meeting",
    "run_protocol",
    "RelayCandidate",
    "best_relay_subset",
    "solve_lfp",
    "Constraints",
    "Scenario",
    "Workload",
    "compare_protocols",
    "run_simulation",
]
