"""Core domain model: hosts, workloads, power models and the federation rules.

A datacenter is a pool of two-core physical machines (PMs) owned by cloud
service providers (CSPs). Workloads are single-core VM requests with a CPU
demand in MIPS and an attached utilization trace. Two collaboration modes
exist: in a *cooperative* federation every scheduler sees every PM; in a
*competitive* federation a VM may only land on PMs of its owner CSP. The
admissibility gate and the placement utility implement that distinction.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from typing import NamedTuple


COOPERATIVE = "cooperative"
COMPETITIVE = "competitive"
FEDERATION_MODELS = (COOPERATIVE, COMPETITIVE)

PM_ACTIVE = "active"
PM_IDLE = "idle"
PM_OFF = "off"

ALLOCATOR_NAMES = ("ffd", "bfd", "bsbf", "sra", "gava")

# Single-core VM sizes used by the replication presets (MIPS).
VM_MIPS_CLASSES = (500, 1000, 2000, 2500)


class ConfigurationError(ValueError):
    """Raised when a configuration cannot be resolved before simulation."""


class CapacityError(RuntimeError):
    """Raised when a placement would overcommit a processing element."""


class PowerModel:
    """Wattage lookup table sampled at 0%, 10%, ..., 100% utilization.

    Entries must be positive (an active server draws idle power) and
    monotone non-decreasing. Queries between grid points interpolate
    linearly; queries exactly on a grid point return the table value.
    """

    GRID_POINTS = 11

    def __init__(self, watts):
        watts = tuple(float(w) for w in watts)
        if len(watts) != self.GRID_POINTS:
            raise ConfigurationError(
                f"power table needs {self.GRID_POINTS} entries, got {len(watts)}"
            )
        if any(w <= 0.0 for w in watts):
            raise ConfigurationError("power table entries must be positive")
        if any(a > b for a, b in zip(watts, watts[1:])):
            raise ConfigurationError("power table must be monotone non-decreasing")
        self.watts = watts

    def power_at(self, utilization: float) -> float:
        """Wattage at a utilization fraction in [0, 1]."""
        if not 0.0 <= utilization <= 1.0:
            raise ValueError(f"utilization {utilization} outside [0, 1]")
        scaled = utilization * (self.GRID_POINTS - 1)
        lo = int(scaled)
        if lo == scaled:
            return self.watts[lo]
        frac = scaled - lo
        return self.watts[lo] + (self.watts[lo + 1] - self.watts[lo]) * frac

    def __repr__(self):
        return f"PowerModel({list(self.watts)})"


def load_power_models(path) -> list[PowerModel]:
    """Read power tables from a file, one 11-value line per PM category.

    Blank lines and lines starting with '#' are skipped; values are
    whitespace separated. The list index is the category index.
    """
    models = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            models.append(PowerModel(line.split()))
    if not models:
        raise ConfigurationError(f"no power tables found in {path}")
    return models


def default_power_models() -> list[PowerModel]:
    """Bundled tables for the two host categories (benchmark-sourced)."""
    ref = importlib.resources.files("fedcloudsim").joinpath("data/power_models.txt")
    with importlib.resources.as_file(ref) as path:
        return load_power_models(path)


class ProcessingElement:
    """One CPU core with a MIPS capacity and a reservation ledger."""

    __slots__ = ("mips_capacity", "mips_allocated")

    def __init__(self, mips_capacity: int):
        if mips_capacity <= 0:
            raise ConfigurationError("PE capacity must be positive")
        self.mips_capacity = int(mips_capacity)
        self.mips_allocated = 0

    @property
    def residual(self) -> int:
        return self.mips_capacity - self.mips_allocated

    def reserve(self, mips: int):
        if mips > self.residual:
            raise CapacityError(
                f"reserve {mips} exceeds residual {self.residual}"
            )
        self.mips_allocated += mips

    def release(self, mips: int):
        if mips > self.mips_allocated:
            raise CapacityError(f"release {mips} exceeds allocated {self.mips_allocated}")
        self.mips_allocated -= mips


class PhysicalMachine:
    """A two-core host with a capacity ledger, CSP owner and power model.

    The ledger tracks which VM sits on which processing element and how
    much RAM is reserved. State transitions are automatic: hosting at
    least one VM makes the machine active, removing the last one powers
    it off. ``mark_idle`` keeps an empty machine powered.
    """

    N_PES = 2

    def __init__(self, pm_id: str, csp_id: str, pe_mips: int, ram_mb: int,
                 power_model: PowerModel):
        self.pm_id = pm_id
        self.csp_id = csp_id
        self.pes = [ProcessingElement(pe_mips) for _ in range(self.N_PES)]
        self.ram_mb = int(ram_mb)
        self.power_model = power_model
        self.state = PM_OFF
        self.placements: dict[str, int] = {}   # vm_id -> pe index
        self.ram_allocated = 0
        self._residents: dict[str, VmRequest] = {}

    @property
    def capacity_mips(self) -> int:
        return sum(pe.mips_capacity for pe in self.pes)

    @property
    def residual_mips(self) -> int:
        return sum(pe.residual for pe in self.pes)

    @property
    def residual_ram(self) -> int:
        return self.ram_mb - self.ram_allocated

    @property
    def is_powered(self) -> bool:
        return self.state != PM_OFF

    @property
    def is_active(self) -> bool:
        return bool(self.placements)

    def pe_residual(self, index: int) -> int:
        return self.pes[index].residual

    def resident_vms(self):
        return list(self._residents.values())

    def place(self, vm: "VmRequest", pe_index: int):
        if vm.vm_id in self.placements:
            raise CapacityError(f"{vm.vm_id} already placed on {self.pm_id}")
        if vm.ram_mb > self.residual_ram:
            raise CapacityError(f"{vm.vm_id} exceeds residual RAM on {self.pm_id}")
        self.pes[pe_index].reserve(vm.mips_demand)
        self.ram_allocated += vm.ram_mb
        self.placements[vm.vm_id] = pe_index
        self._residents[vm.vm_id] = vm
        self.state = PM_ACTIVE

    def remove(self, vm: "VmRequest"):
        pe_index = self.placements.pop(vm.vm_id, None)
        if pe_index is None:
            raise CapacityError(f"{vm.vm_id} not resident on {self.pm_id}")
        self.pes[pe_index].release(vm.mips_demand)
        self.ram_allocated -= vm.ram_mb
        del self._residents[vm.vm_id]
        if not self.placements:
            self.state = PM_OFF

    def mark_idle(self):
        if self.placements:
            raise CapacityError("cannot idle a host with residents")
        self.state = PM_IDLE

    def __repr__(self):
        return (f"PhysicalMachine({self.pm_id}, csp={self.csp_id}, "
                f"residual={self.residual_mips}, state={self.state})")


class VmRequest:
    """A single-core workload unit: MIPS demand, RAM and a utilization trace."""

    __slots__ = ("vm_id", "owner_csp", "mips_demand", "ram_mb", "trace")

    def __init__(self, vm_id: str, owner_csp: str, mips_demand: int, ram_mb: int,
                 trace=None):
        if mips_demand <= 0:
            raise ConfigurationError("VM demand must be positive")
        if ram_mb < 0:
            raise ConfigurationError("VM RAM must be non-negative")
        self.vm_id = vm_id
        self.owner_csp = owner_csp
        self.mips_demand = int(mips_demand)
        self.ram_mb = int(ram_mb)
        self.trace = trace

    def __repr__(self):
        return f"VmRequest({self.vm_id}, {self.mips_demand} MIPS, csp={self.owner_csp})"


def fits(vm: VmRequest, pm: PhysicalMachine) -> bool:
    """Feasibility of placing ``vm`` on ``pm``.

    The demand is single-core, so one processing element must carry it
    whole; residual RAM is a secondary check.
    """
    if pm.residual_ram < vm.ram_mb:
        return False
    return any(pe.residual >= vm.mips_demand for pe in pm.pes)


def admissibility(vm: VmRequest, pm: PhysicalMachine, model: str) -> int:
    """The 0/1 gate separating cooperation from competition.

    Cooperative federations admit every (vm, pm) pair; competitive ones
    admit only pairs whose owner CSP matches the host CSP.
    """
    if model == COOPERATIVE:
        return 1
    if model == COMPETITIVE:
        return 1 if vm.owner_csp == pm.csp_id else 0
    raise ConfigurationError(f"unknown federation model {model!r}")


def placement_utility(vm: VmRequest, pm: PhysicalMachine, model: str) -> float:
    """Signed MIPS headroom of a candidate placement, gated by admissibility."""
    return admissibility(vm, pm, model) * (pm.residual_mips - vm.mips_demand)


def admissibility_matrix(vms, pms, model) -> dict[tuple[str, str], int]:
    return {
        (vm.vm_id, pm.pm_id): admissibility(vm, pm, model)
        for vm in vms for pm in pms
    }


class Placement(NamedTuple):
    pm_id: str
    pe_index: int


@dataclass
class AllocationPlan:
    """The VM-to-PM mapping plus the admissibility matrix that gated it."""

    assignments: dict[str, Placement] = field(default_factory=dict)
    rejected: list[str] = field(default_factory=list)
    admissibility: dict[tuple[str, str], int] | None = None
    placement_ns: dict[str, int] = field(default_factory=dict)
    preprocessing_ns: int = 0

    @property
    def pms_used(self) -> int:
        return len({p.pm_id for p in self.assignments.values()})

    def merge(self, other: "AllocationPlan"):
        self.assignments.update(other.assignments)
        self.rejected.extend(other.rejected)
        self.placement_ns.update(other.placement_ns)
        self.preprocessing_ns += other.preprocessing_ns


def validate_plan(plan: AllocationPlan, vms, pms, model: str):
    """Re-play a plan against fresh ledgers and check every invariant.

    Returns silently on success, raises AssertionError with the first
    violation otherwise. Used by tests as the shared post-hoc validator.
    """
    vms_by_id = {vm.vm_id: vm for vm in vms}
    clones = {pm.pm_id: PhysicalMachine(pm.pm_id, pm.csp_id,
                                        pm.pes[0].mips_capacity, pm.ram_mb,
                                        pm.power_model)
              for pm in pms}
    assert set(plan.assignments).isdisjoint(plan.rejected), \
        "a VM is both placed and rejected"
    for vm_id, placement in plan.assignments.items():
        vm = vms_by_id[vm_id]
        pm = clones[placement.pm_id]
        assert admissibility(vm, pm, model) == 1, \
            f"{vm_id} -> {pm.pm_id} violates the {model} admissibility gate"
        assert fits(vm, pm), f"{vm_id} does not fit {pm.pm_id} at assignment time"
        assert pm.pe_residual(placement.pe_index) >= vm.mips_demand, \
            f"{vm_id} overflows PE {placement.pe_index} of {pm.pm_id}"
        pm.place(vm, placement.pe_index)
    for pm in clones.values():
        for pe in pm.pes:
            assert 0 <= pe.mips_allocated <= pe.mips_capacity


@dataclass
class PmSpec:
    """Declarative description of one host, materialized per simulation."""
    pe_mips: int
    ram_mb: int
    power_category: int = 0


@dataclass
class CspSpec:
    csp_id: str
    pms: list[PmSpec] = field(default_factory=list)


@dataclass
class FederationConfig:
    """Everything one simulation run needs, resolvable up front."""

    model: str
    csps: list[CspSpec]
    allocator: str
    rng_seed: int = 0
    scheduling_interval_s: int = 300
    horizon_s: int = 86400
    overload_threshold: float = 0.8
    saturation_fraction: float = 0.95
    timing_repetitions: int = 11
    allocator_params: dict = field(default_factory=dict)
    power_models: list[PowerModel] | None = None

    def validate(self):
        if self.model not in FEDERATION_MODELS:
            raise ConfigurationError(f"unknown federation model {self.model!r}")
        if self.allocator not in ALLOCATOR_NAMES:
            raise ConfigurationError(f"unknown allocator {self.allocator!r}")
        if not self.csps:
            raise ConfigurationError("at least one CSP required")
        if self.scheduling_interval_s <= 0:
            raise ConfigurationError("scheduling interval must be positive")
        if self.horizon_s % self.scheduling_interval_s != 0:
            raise ConfigurationError("horizon must be a multiple of the interval")
        if not 0.0 < self.overload_threshold <= 1.0:
            raise ConfigurationError("overload threshold must be in (0, 1]")
        if not 0.0 < self.saturation_fraction <= 1.0:
            raise ConfigurationError("saturation fraction must be in (0, 1]")
        if self.timing_repetitions < 1:
            raise ConfigurationError("timing repetitions must be >= 1")
        seen = set()
        for csp in self.csps:
            if csp.csp_id in seen:
                raise ConfigurationError(f"duplicate CSP id {csp.csp_id}")
            seen.add(csp.csp_id)
            if not csp.pms:
                raise ConfigurationError(f"CSP {csp.csp_id} has no PMs")
            for spec in csp.pms:
                if spec.pe_mips <= 0 or spec.ram_mb <= 0:
                    raise ConfigurationError("PM specs must be positive")

    @property
    def ticks(self) -> int:
        return self.horizon_s // self.scheduling_interval_s

    def materialize_pms(self) -> list[PhysicalMachine]:
        """Build fresh hosts with deterministic ids (csp prefix + index)."""
        tables = self.power_models or default_power_models()
        pms = []
        for csp in self.csps:
            for i, spec in enumerate(csp.pms):
                if spec.power_category >= len(tables):
                    raise ConfigurationError(
                        f"power category {spec.power_category} has no table"
                    )
                pms.append(PhysicalMachine(
                    pm_id=f"{csp.csp_id}-pm{i:04d}",
                    csp_id=csp.csp_id,
                    pe_mips=spec.pe_mips,
                    ram_mb=spec.ram_mb,
                    power_model=tables[spec.power_category],
                ))
        return pms
