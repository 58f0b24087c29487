"""Deterministic federated-datacenter simulator.

Compares five workload-allocation schemes (first-fit descending,
best-fit descending, binary-search best-fit, stable-roommate matching
and a genetic bit-encoding) under co-operative and competitive cloud
federation models, reporting delay, utilization, energy, SLA and
migration metrics.
"""

from .model import (
    AllocationPlan,
    COMPETITIVE,
    COOPERATIVE,
    ConfigurationError,
    CspSpec,
    FederationConfig,
    PhysicalMachine,
    Placement,
    PmSpec,
    PowerModel,
    ProcessingElement,
    VmRequest,
    admissibility,
    fits,
    placement_utility,
)
from .engine import MigrationEvent, SimulationClock, run_simulation
from .metrics import SimulationReport
from .traces import UtilizationTrace, WorkloadMix

__version__ = "0.1.0"

__all__ = [
    "AllocationPlan",
    "COMPETITIVE",
    "COOPERATIVE",
    "ConfigurationError",
    "CspSpec",
    "FederationConfig",
    "MigrationEvent",
    "PhysicalMachine",
    "Placement",
    "PmSpec",
    "PowerModel",
    "ProcessingElement",
    "SimulationClock",
    "SimulationReport",
    "UtilizationTrace",
    "VmRequest",
    "WorkloadMix",
    "admissibility",
    "fits",
    "placement_utility",
    "run_simulation",
    "__version__",
]
