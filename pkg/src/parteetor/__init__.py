"""Simulation of partial TEE deployments among Tor relays."""

from .consensus import (
    SyntheticNetworkSpec,
    generate_synthetic,
    load_network,
    parse_consensus,
    save_network,
)
from .deployment import (
    BandwidthWeighted,
    CircuitPositionWeighted,
    Distribution,
    InverseBandwidthWeighted,
    Random,
    assign_tees,
    weighted_sample_without_replacement,
)
from .metrics import (
    circuit_load,
    count_unique_circuits,
    enumerate_circuits,
    expected_bandwidth,
    median,
    security_compliance,
)
from .model import Circuit, NetworkModel, Position, Relay, eligible
from .selection import SecurityPolicy, build_circuit, complies, mitigated_attacks, select_weighted

__version__ = "0.1.0"

__all__ = [
    "BandwidthWeighted",
    "Circuit",
    "CircuitPositionWeighted",
    "Distribution",
    "InverseBandwidthWeighted",
    "NetworkModel",
    "Position",
    "Random",
    "Relay",
    "SecurityPolicy",
    "SyntheticNetworkSpec",
    "assign_tees",
    "build_circuit",
    "circuit_load",
    "complies",
    "count_unique_circuits",
    "eligible",
    "enumerate_circuits",
    "expected_bandwidth",
    "generate_synthetic",
    "load_network",
    "median",
    "mitigated_attacks",
    "parse_consensus",
    "save_network",
    "security_compliance",
    "select_weighted",
    "weighted_sample_without_replacement",
]
