"""Availability analysis of redundant and replicated services.

Compiles a high-level service description (components, fault
dependencies, network, deployment, quorum rule) into a discrete Bayesian
network and computes the probability that the service is reachable and
operational, accounting for cascading, common-cause and
network-partitioning failures.
"""

from .compiler import (ChannelRef, CompileOptions, InvalidModelError, Route,
                       create_fault_graph, create_service_model, enumerate_routes)
from .inference import (InferenceInfeasible, MarginalResult, availability,
                        exact_marginal, forward_sample_marginal, service_marginal)
from .model import (Component, FaultDependencyGraph, Gate, NetworkGraph,
                    QuorumSpec, SystemModel, Violation, majority_quorum,
                    quorum_holds, validate)
from .oracle import (EnumerationLimit, OracleError, World, enumerate_availability,
                     evaluate_world, mc_availability, service_up)
from .scenarios import (SweepRecord, large_infrastructure, place_round_robin,
                        records_to_csv, small_infrastructure, sweep, with_instances)

__all__ = [
    "ChannelRef", "CompileOptions", "Component", "EnumerationLimit",
    "FaultDependencyGraph", "Gate", "InferenceInfeasible", "InvalidModelError",
    "MarginalResult", "NetworkGraph", "OracleError", "QuorumSpec", "Route",
    "SweepRecord", "SystemModel", "Violation", "World", "availability",
    "create_fault_graph", "create_service_model", "enumerate_availability",
    "enumerate_routes", "evaluate_world", "exact_marginal",
    "forward_sample_marginal", "large_infrastructure", "majority_quorum",
    "mc_availability", "place_round_robin", "quorum_holds", "records_to_csv",
    "service_marginal", "service_up", "small_infrastructure", "sweep",
    "validate", "with_instances",
]

__version__ = "0.1.0"
