"""The simulation loop: allocate, monitor, migrate, consolidate.

One run executes the configured allocator over the admissible host view,
then steps the clock. Each tick applies the per-VM trace utilizations,
lets the monitor flag hosts demanding more than the overload threshold,
and re-places victim workloads through the scheduler that owns them:
under the cooperative model victims may land anywhere, under the
competitive model only on hosts of their own provider. Migration targets
are drawn from powered hosts only; the energy policy keeps empty hosts
switched off and never wakes one to absorb a load burst. At the horizon
a single consolidation pass re-packs everything and powers emptied hosts
down, unless the re-pack would strand a workload, occupy more hosts, or
burn more energy than the placement it replaces.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import allocators, metrics
from .allocators import AllocatorInput
from .model import (
    AllocationPlan,
    COMPETITIVE,
    ConfigurationError,
    FederationConfig,
    admissibility,
    admissibility_matrix,
)

CAUSE_OVERLOAD = "overload"
CAUSE_CONSOLIDATION = "consolidation"


@dataclass(frozen=True)
class MigrationEvent:
    vm_id: str
    from_pm: str
    to_pm: str
    tick: int
    cause: str

    def as_line(self) -> str:
        return f"{self.tick},{self.vm_id},{self.from_pm},{self.to_pm},{self.cause}"

    @classmethod
    def from_line(cls, line: str) -> "MigrationEvent":
        tick, vm_id, from_pm, to_pm, cause = line.strip().split(",")
        return cls(vm_id, from_pm, to_pm, int(tick), cause)


class SimulationClock:
    """Discrete clock: fixed interval, horizon a whole number of ticks."""

    def __init__(self, interval_s: int, horizon_s: int):
        if interval_s <= 0 or horizon_s % interval_s != 0:
            raise ConfigurationError("horizon must be a positive multiple of the interval")
        self.interval_s = interval_s
        self.horizon_s = horizon_s
        self.now_s = 0

    @property
    def ticks(self) -> int:
        return self.horizon_s // self.interval_s

    def advance(self):
        self.now_s += self.interval_s


def demanded_mips(pm, tick: int) -> float:
    """MIPS the residents of a host request at one tick of their traces."""
    total = 0.0
    for vm in pm.resident_vms():
        total += vm.mips_demand * vm.trace.samples[tick] / 100.0
    return total


def pe_demands(pm, tick: int) -> list[float]:
    """Per-core demanded MIPS of a host at one tick."""
    demands = [0.0] * len(pm.pes)
    for vm in pm.resident_vms():
        demands[pm.placements[vm.vm_id]] += \
            vm.mips_demand * vm.trace.samples[tick] / 100.0
    return demands


def monitor_detect(pm, tick: int, threshold: float) -> bool:
    """Overload test: demanded MIPS above threshold x rated capacity."""
    return demanded_mips(pm, tick) > threshold * pm.capacity_mips


def select_victims(pm, tick: int, threshold: float):
    """Smallest-demand-first workloads whose removal ends the overload.

    The prefix over ascending current demand is pruned to an
    inclusion-minimal set, so no chosen victim is redundant.
    """
    total = demanded_mips(pm, tick)
    limit = threshold * pm.capacity_mips
    if total <= limit:
        return []
    residents = sorted(
        pm.resident_vms(),
        key=lambda vm: (vm.mips_demand * vm.trace.samples[tick] / 100.0, vm.vm_id),
    )
    victims = []
    shed = 0.0
    need = total - limit
    for vm in residents:
        if shed >= need:
            break
        victims.append(vm)
        shed += vm.mips_demand * vm.trace.samples[tick] / 100.0
    pruned = []
    for i, vm in enumerate(victims):
        d = vm.mips_demand * vm.trace.samples[tick] / 100.0
        if shed - d >= need:
            shed -= d
        else:
            pruned.append(vm)
    return pruned


def route_candidates(vm, source_pm, pms, model):
    """Hosts eligible to receive a migrating workload.

    Powered hosts other than the source, filtered by the admissibility
    gate; the power policy never wakes a sleeping host for a migration.
    """
    return [
        pm for pm in pms
        if pm is not source_pm and pm.is_powered and admissibility(vm, pm, model) == 1
    ]


def _allocation_groups(config: FederationConfig, vms, pms):
    """(vms, pms) per scheduler: one global view or one view per CSP."""
    if config.model == COMPETITIVE:
        by_csp = {csp.csp_id: [] for csp in config.csps}
        for vm in vms:
            if vm.owner_csp not in by_csp:
                raise ConfigurationError(
                    f"{vm.vm_id} owned by unknown CSP {vm.owner_csp!r}"
                )
            by_csp[vm.owner_csp].append(vm)
        return [
            (by_csp[csp.csp_id], [pm for pm in pms if pm.csp_id == csp.csp_id])
            for csp in config.csps
        ]
    return [(list(vms), list(pms))]


def _clone_pms(config: FederationConfig):
    return config.materialize_pms()


def _time_preprocessing(config: FederationConfig, vms) -> tuple[int, int]:
    """Median-of-N cold pre-processing time across the scheduler groups."""

    def run_cold():
        pms = _clone_pms(config)
        groups = _allocation_groups(config, vms, pms)
        total = 0
        for g_vms, g_pms in groups:
            inp = AllocatorInput(g_vms, g_pms, dict(config.allocator_params))
            total += metrics.time_call(allocators.run_preprocessing,
                                       config.allocator, inp)
        return total

    return metrics.time_preprocessing(run_cold, config.timing_repetitions)


def _replay_series(assignments, vms_by_id, pms_by_id, ticks):
    """Per-tick, per-core demand series of a fixed placement.

    ``assignments`` maps vm_id -> (pm_id, pe_index); the traces replay
    against that static placement.
    """
    residents: dict[str, list] = {}
    for vm_id, (pm_id, pe_index) in assignments.items():
        residents.setdefault(pm_id, []).append((vms_by_id[vm_id], pe_index))
    series = []
    for tick in range(ticks):
        entry = {}
        for pm_id in sorted(residents):
            demands = [0.0] * len(pms_by_id[pm_id].pes)
            for vm, pe_index in residents[pm_id]:
                demands[pe_index] += vm.mips_demand * vm.trace.samples[tick] / 100.0
            entry[pm_id] = demands
        series.append(entry)
    return series


def consolidate(config: FederationConfig, vms_placed, pms, tick: int):
    """End-of-run re-pack through the configured allocator.

    Returns (new assignment map vm_id -> (pm_id, pe_index), events) or
    (None, []) when the re-pack is discarded. Discard conditions: a
    running VM left unplaced, more hosts in use than before, or higher
    replayed energy than the placement it would replace.
    """
    if not vms_placed:
        return None, []
    vms_by_id = {vm.vm_id: vm for vm in vms_placed}
    ticks = config.ticks
    pms_by_id = {pm.pm_id: pm for pm in pms}
    current = {
        vm.vm_id: (pm.pm_id, pm.placements[vm.vm_id])
        for pm in pms for vm in pm.resident_vms()
    }
    active_before = len({pm_id for pm_id, _ in current.values()})

    clones = _clone_pms(config)
    groups = _allocation_groups(config, list(vms_placed), clones)
    plan = AllocationPlan()
    for g_vms, g_pms in groups:
        plan.merge(allocators.allocate(
            config.allocator, AllocatorInput(g_vms, g_pms, dict(config.allocator_params))
        ))

    if set(plan.assignments) != set(vms_by_id):
        return None, []
    if plan.pms_used > active_before:
        return None, []
    candidate = {vm_id: (p.pm_id, p.pe_index)
                 for vm_id, p in plan.assignments.items()}
    energy_candidate = metrics.compute_energy(
        _replay_series(candidate, vms_by_id, pms_by_id, ticks),
        pms_by_id, config.scheduling_interval_s)
    energy_current = metrics.compute_energy(
        _replay_series(current, vms_by_id, pms_by_id, ticks),
        pms_by_id, config.scheduling_interval_s)
    if energy_candidate > energy_current:
        return None, []

    events = [
        MigrationEvent(vm_id, current[vm_id][0], candidate[vm_id][0], tick,
                       CAUSE_CONSOLIDATION)
        for vm_id in sorted(candidate)
        if candidate[vm_id][0] != current[vm_id][0]
    ]
    return candidate, events


def replay_migration_log(initial_assignments: dict, events) -> dict:
    """Apply a migration log to an initial vm -> pm map; returns the final map."""
    state = dict(initial_assignments)
    for ev in events:
        if state.get(ev.vm_id) != ev.from_pm:
            raise ValueError(
                f"replay mismatch: {ev.vm_id} expected on {ev.from_pm}, "
                f"found {state.get(ev.vm_id)}"
            )
        state[ev.vm_id] = ev.to_pm
    return state


def run_simulation(config: FederationConfig, vms,
                   workload_class: str = "custom") -> metrics.SimulationReport:
    """Execute one experiment cell and return its metric record."""
    config.validate()
    ticks = config.ticks
    for vm in vms:
        if vm.trace is None:
            raise ConfigurationError(f"{vm.vm_id} has no utilization trace")
        if len(vm.trace.samples) < ticks:
            raise ConfigurationError(
                f"{vm.vm_id}: trace covers {len(vm.trace.samples)} ticks, "
                f"horizon needs {ticks}"
            )

    pms = config.materialize_pms()
    pms_by_id = {pm.pm_id: pm for pm in pms}
    vms_by_id = {vm.vm_id: vm for vm in vms}

    report = metrics.SimulationReport(
        model=config.model,
        allocator=config.allocator,
        workload_class=workload_class,
        seed=config.rng_seed,
        vms_total=len(vms),
        preprocessing_reps=config.timing_repetitions,
    )

    params = dict(config.allocator_params)
    params.setdefault("rng_seed", config.rng_seed)
    plan = AllocationPlan()
    for g_vms, g_pms in _allocation_groups(config, vms, pms):
        plan.merge(allocators.allocate(config.allocator,
                                       AllocatorInput(g_vms, g_pms, params)))
    plan.admissibility = admissibility_matrix(vms, pms, config.model)

    # The evolutionary scheme runs its whole pre-processing offline; a
    # single measured pass stands in for the median-of-N protocol used
    # for the cheap schemes.
    if not vms:
        report.preprocessing_ns, report.preprocessing_reps = 0, 1
    elif config.allocator == "gava":
        report.preprocessing_ns = plan.preprocessing_ns
        report.preprocessing_reps = 1
    else:
        report.preprocessing_ns, report.preprocessing_reps = \
            _time_preprocessing(config, vms)

    report.vms_placed = len(plan.assignments)
    report.vms_rejected = len(plan.rejected)
    report.pms_used_before = plan.pms_used
    report.avg_allocation_ns = metrics.avg_allocation_delay(plan.placement_ns)
    report.initial_assignments = {
        vm_id: p.pm_id for vm_id, p in plan.assignments.items()
    }

    events: list[MigrationEvent] = []
    failures = 0
    series = []
    clock = SimulationClock(config.scheduling_interval_s, config.horizon_s)
    for tick in range(ticks):
        overloaded = [
            pm for pm in sorted(pms, key=lambda p: p.pm_id)
            if pm.is_active and monitor_detect(pm, tick, config.overload_threshold)
        ]
        for pm in overloaded:
            for vm in select_victims(pm, tick, config.overload_threshold):
                candidates = route_candidates(vm, pm, pms, config.model)
                target = allocators.place_single(config.allocator, vm,
                                                 candidates, params)
                if target is None:
                    failures += 1
                    continue
                target_pm, pe_index = target
                pm.remove(vm)
                target_pm.place(vm, pe_index)
                events.append(MigrationEvent(vm.vm_id, pm.pm_id,
                                             target_pm.pm_id, tick,
                                             CAUSE_OVERLOAD))
        entry = {
            pm.pm_id: pe_demands(pm, tick)
            for pm in sorted(pms, key=lambda p: p.pm_id) if pm.is_active
        }
        series.append(entry)
        clock.advance()

    placed_vms = [vms_by_id[vm_id] for vm_id in sorted(plan.assignments)]
    new_assignments, consolidation_events = consolidate(config, placed_vms, pms, ticks)
    if new_assignments is not None:
        events.extend(consolidation_events)
        for pm in pms:
            for vm in pm.resident_vms():
                pm.remove(vm)
        for vm_id in sorted(new_assignments):
            pm_id, pe_index = new_assignments[vm_id]
            pms_by_id[pm_id].place(vms_by_id[vm_id], pe_index)

    final_assignments = {
        vm.vm_id: (pm.pm_id, pm.placements[vm.vm_id])
        for pm in pms for vm in pm.resident_vms()
    }
    after_series = _replay_series(final_assignments, vms_by_id, pms_by_id, ticks)

    report.migration_count = metrics.count_migrations(events)
    report.migration_failures = failures
    report.migration_events = events
    report.final_assignments = {vm_id: pm_id for vm_id, (pm_id, _)
                                in final_assignments.items()}
    report.pms_used_after = len({pm_id for pm_id, _ in final_assignments.values()})
    report.energy_before_kwh = metrics.compute_energy(
        series, pms_by_id, config.scheduling_interval_s)
    report.energy_after_kwh = metrics.compute_energy(
        after_series, pms_by_id, config.scheduling_interval_s)
    report.sla_violation_pct = metrics.sla_violation_pct(
        series, pms_by_id, config.saturation_fraction)
    report.utilization_before = [
        metrics.federation_utilization(entry, pms_by_id) for entry in series
    ]
    report.utilization_after = [
        metrics.federation_utilization(entry, pms_by_id) for entry in after_series
    ]
    report.execution_time_s = float(config.horizon_s) if plan.assignments else 0.0
    return report
