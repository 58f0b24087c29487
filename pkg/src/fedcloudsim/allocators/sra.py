"""Stable-roommate workload allocation.

Hosts play the proposing side, workloads the accepting side, and a host
may end up with several tenants. Admissibility is asymmetric on purpose:
a host is acceptable to a VM only when its spare CPU strictly exceeds the
demand. Preference orders follow best-fit pressure: VMs rank hosts by
ascending residual gap (tightest first), hosts rank VMs by descending
demand. Ties break on ids for determinism.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..model import AllocationPlan, Placement, fits


@dataclass
class PreferenceState:
    pm_pref: dict[str, list[str]] = field(default_factory=dict)
    vm_pref: dict[str, list[str]] = field(default_factory=dict)
    suitors: dict[str, list[str]] = field(default_factory=dict)
    vms_by_id: dict = field(default_factory=dict)
    pms_by_id: dict = field(default_factory=dict)


def is_admissible(vm, pm) -> bool:
    """Host acceptable for a VM: spare CPU on one PE strictly above demand."""
    if pm.residual_ram < vm.ram_mb:
        return False
    return any(pe.residual > vm.mips_demand for pe in pm.pes)


def sra_build_preferences(inp) -> PreferenceState:
    state = PreferenceState(
        vms_by_id={vm.vm_id: vm for vm in inp.vms},
        pms_by_id={pm.pm_id: pm for pm in inp.pms},
    )
    for vm in inp.vms:
        ranked = [pm for pm in inp.pms if is_admissible(vm, pm)]
        ranked.sort(key=lambda pm: (pm.residual_mips - vm.mips_demand, pm.pm_id))
        state.vm_pref[vm.vm_id] = [pm.pm_id for pm in ranked]
    for pm in inp.pms:
        wanted = [vm for vm in inp.vms if is_admissible(vm, pm)]
        wanted.sort(key=lambda vm: (-vm.mips_demand, vm.vm_id))
        state.pm_pref[pm.pm_id] = [vm.vm_id for vm in wanted]
    return state


def proposal_round(state: PreferenceState):
    """Each host proposes to every workload on its list; VMs collect suitors.

    Suitor lists come back ordered by the receiving VM's own preference.
    """
    proposed: dict[str, set] = {vm_id: set() for vm_id in state.vm_pref}
    for pm_id, wanted in state.pm_pref.items():
        for vm_id in wanted:
            proposed[vm_id].add(pm_id)
    for vm_id, pms in proposed.items():
        state.suitors[vm_id] = [p for p in state.vm_pref[vm_id] if p in pms]
    return state.suitors


def sra_match(state: PreferenceState) -> AllocationPlan:
    """Repeated propose/accept rounds until no admissible pair remains.

    Per round every unmatched VM picks the best host on its list whose
    current residual still admits it; hosts admit their pickers in
    preference order while capacity lasts. Each round either matches a
    VM or terminates, so the loop is finite.
    """
    plan = AllocationPlan()
    unmatched = sorted(state.vm_pref)
    while unmatched:
        started = {vm_id: time.perf_counter_ns() for vm_id in unmatched}
        picks: dict[str, list[str]] = {}
        for vm_id in unmatched:
            vm = state.vms_by_id[vm_id]
            for pm_id in state.vm_pref[vm_id]:
                if is_admissible(vm, state.pms_by_id[pm_id]):
                    picks.setdefault(pm_id, []).append(vm_id)
                    break
        if not picks:
            break
        admitted = []
        for pm_id in sorted(picks):
            pm = state.pms_by_id[pm_id]
            rank = {v: i for i, v in enumerate(state.pm_pref[pm_id])}
            for vm_id in sorted(picks[pm_id], key=lambda v: rank.get(v, len(rank))):
                vm = state.vms_by_id[vm_id]
                if not fits(vm, pm):
                    continue
                best, best_r = None, None
                for i, pe in enumerate(pm.pes):
                    if pe.residual >= vm.mips_demand and (best is None or pe.residual < best_r):
                        best, best_r = i, pe.residual
                pm.place(vm, best)
                plan.assignments[vm_id] = Placement(pm_id, best)
                plan.placement_ns[vm_id] = time.perf_counter_ns() - started[vm_id]
                admitted.append(vm_id)
        if not admitted:
            break
        unmatched = [v for v in unmatched if v not in plan.assignments]
    plan.rejected.extend(unmatched)
    return plan


def sra_allocate(inp) -> AllocationPlan:
    t0 = time.perf_counter_ns()
    state = sra_build_preferences(inp)
    proposal_round(state)
    preprocessing_ns = time.perf_counter_ns() - t0
    plan = sra_match(state)
    plan.preprocessing_ns = preprocessing_ns
    return plan


def place_single(vm, candidate_pms):
    """Single-VM rule: tightest admissible host, strict-gap admissibility."""
    best, best_key = None, None
    for pm in candidate_pms:
        if not is_admissible(vm, pm):
            continue
        key = (pm.residual_mips - vm.mips_demand, pm.pm_id)
        if best_key is None or key < best_key:
            best, best_key = pm, key
    if best is None:
        return None
    choice, choice_r = None, None
    for i, pe in enumerate(best.pes):
        if pe.residual >= vm.mips_demand and (choice is None or pe.residual < choice_r):
            choice, choice_r = i, pe.residual
    return best, choice


def find_blocking_pairs(state: PreferenceState, plan: AllocationPlan):
    """Quadratic post-hoc scan used by the stability tests.

    A pair blocks when the host could still admit the VM right now and
    the VM strictly prefers that host to its outcome (any admissible
    host beats being unmatched).
    """
    blocking = []
    for vm_id, prefs in state.vm_pref.items():
        vm = state.vms_by_id[vm_id]
        assigned = plan.assignments.get(vm_id)
        current_rank = prefs.index(assigned.pm_id) if assigned else len(prefs)
        for rank, pm_id in enumerate(prefs):
            if rank >= current_rank:
                break
            if is_admissible(vm, state.pms_by_id[pm_id]):
                blocking.append((vm_id, pm_id))
    return blocking
