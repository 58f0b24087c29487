"""The five workload-allocation schemes behind a single contract.

Every allocator consumes an :class:`AllocatorInput` (a VM batch plus the
admissible host view) and produces an :class:`~fedcloudsim.model.AllocationPlan`
with per-VM placement timings and a pre-processing timing for the work done
before the first placement.

Placement discipline shared by the fit family:

* Hosts are sorted once, descending by residual capacity (ties by id).
* FFD walks that order and takes the first host that fits.
* BFD takes the tightest fit **among hosts already in use**; when no
  powered-up host fits, it opens the first fitting host in sorted order.
  On heterogeneous hosts this is the consolidation-friendly reading of
  best-fit: a fresh host is opened by order, not by size.
* BSBF reproduces BFD's choices via a red-black tree keyed by residual.

Within a chosen host the tightest sufficient processing element wins.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..model import (
    AllocationPlan,
    Placement,
    fits,
)
from .rbtree import CapacityTree
from . import sra as _sra
from . import genetic as _genetic


@dataclass
class AllocatorInput:
    vms: list
    pms: list
    params: dict = field(default_factory=dict)


# Work each scheme performs before its first placement.
PREPROCESS_PHASES = {
    "ffd": ("sort",),
    "bfd": ("sort", "residual-ledger"),
    "bsbf": ("sort", "tree-build"),
    "sra": ("preferences", "proposal-round"),
    "gava": ("encode", "population", "generations"),
}


def sort_pms_descending(pms):
    """Stable sort by residual capacity, descending; ties by pm_id."""
    return sorted(pms, key=lambda pm: (-pm.residual_mips, pm.pm_id))


def vms_descending(vms):
    return sorted(vms, key=lambda vm: (-vm.mips_demand, vm.vm_id))


def choose_pe(pm, vm):
    """Index of the tightest processing element that can carry the demand."""
    best, best_residual = None, None
    for i, pe in enumerate(pm.pes):
        r = pe.residual
        if r >= vm.mips_demand and (best is None or r < best_residual):
            best, best_residual = i, r
    return best


def _place(plan, vm, pm, started_ns):
    pe_index = choose_pe(pm, vm)
    pm.place(vm, pe_index)
    plan.assignments[vm.vm_id] = Placement(pm.pm_id, pe_index)
    plan.placement_ns[vm.vm_id] = time.perf_counter_ns() - started_ns


# ---------------------------------------------------------------------------
# first-fit descending

def ffd_preprocess(pms):
    return sort_pms_descending(pms)


def ffd_allocate(inp: AllocatorInput) -> AllocationPlan:
    plan = AllocationPlan()
    t0 = time.perf_counter_ns()
    order = ffd_preprocess(inp.pms)
    plan.preprocessing_ns = time.perf_counter_ns() - t0
    for vm in vms_descending(inp.vms):
        t0 = time.perf_counter_ns()
        for pm in order:
            if fits(vm, pm):
                _place(plan, vm, pm, t0)
                break
        else:
            plan.rejected.append(vm.vm_id)
    return plan


# ---------------------------------------------------------------------------
# best-fit descending

def bfd_preprocess(pms):
    """Descending sort plus the residual ledger the per-VM scans read."""
    order = sort_pms_descending(pms)
    residuals = [pm.residual_mips for pm in order]
    return order, residuals


def _bfd_pick(vm, order, residuals):
    """Tightest fitting in-use host, else first fitting unused host in order."""
    best_i, best_key = None, None
    for i, pm in enumerate(order):
        if not pm.is_active:
            continue
        if fits(vm, pm):
            key = (residuals[i], pm.pm_id)
            if best_key is None or key < best_key:
                best_i, best_key = i, key
    if best_i is not None:
        return best_i
    for i, pm in enumerate(order):
        if not pm.is_active and fits(vm, pm):
            return i
    return None


def bfd_allocate(inp: AllocatorInput) -> AllocationPlan:
    plan = AllocationPlan()
    t0 = time.perf_counter_ns()
    order, residuals = bfd_preprocess(inp.pms)
    plan.preprocessing_ns = time.perf_counter_ns() - t0
    for vm in vms_descending(inp.vms):
        t0 = time.perf_counter_ns()
        i = _bfd_pick(vm, order, residuals)
        if i is None:
            plan.rejected.append(vm.vm_id)
            continue
        _place(plan, vm, order[i], t0)
        residuals[i] = order[i].residual_mips
    return plan


# ---------------------------------------------------------------------------
# binary-search best-fit

def bsbf_preprocess(pms):
    """Descending sort plus a capacity tree over every candidate host."""
    order = sort_pms_descending(pms)
    tree = CapacityTree()
    for pm in order:
        tree.insert(pm.residual_mips, pm.pm_id)
    return order, tree


def bsbf_find(tree: CapacityTree, demand: int):
    """pm_id at the smallest tree key >= demand (successor query), or None."""
    hit = tree.find_min_at_least(demand)
    return None if hit is None else hit[1]


def _bsbf_pick(vm, tree, pms_by_id, order):
    """Walk keys upward for the tightest fitting in-use host; else fall back."""
    node = tree.successor_node(vm.mips_demand)
    while node is not None:
        for pm_id in node.pm_ids:
            pm = pms_by_id[pm_id]
            if pm.is_active and fits(vm, pm):
                return pm
        node = tree.next_node(node)
    for pm in order:
        if not pm.is_active and fits(vm, pm):
            return pm
    return None


def bsbf_allocate(inp: AllocatorInput) -> AllocationPlan:
    plan = AllocationPlan()
    t0 = time.perf_counter_ns()
    order, tree = bsbf_preprocess(inp.pms)
    plan.preprocessing_ns = time.perf_counter_ns() - t0
    pms_by_id = {pm.pm_id: pm for pm in order}
    for vm in vms_descending(inp.vms):
        t0 = time.perf_counter_ns()
        pm = _bsbf_pick(vm, tree, pms_by_id, order)
        if pm is None:
            plan.rejected.append(vm.vm_id)
            continue
        old_key = pm.residual_mips
        pe_index = choose_pe(pm, vm)
        pm.place(vm, pe_index)
        tree.move(old_key, pm.residual_mips, pm.pm_id)
        plan.assignments[vm.vm_id] = Placement(pm.pm_id, pe_index)
        plan.placement_ns[vm.vm_id] = time.perf_counter_ns() - t0
    return plan


# ---------------------------------------------------------------------------
# dispatch

_ALLOCATE = {
    "ffd": ffd_allocate,
    "bfd": bfd_allocate,
    "bsbf": bsbf_allocate,
    "sra": _sra.sra_allocate,
    "gava": _genetic.gava_allocate,
}


def allocate(name: str, inp: AllocatorInput) -> AllocationPlan:
    try:
        fn = _ALLOCATE[name]
    except KeyError:
        raise ValueError(f"unknown allocator {name!r}") from None
    return fn(inp)


def run_preprocessing(name: str, inp: AllocatorInput):
    """Execute exactly the pre-placement phases of one scheme (for timing)."""
    if name == "ffd":
        ffd_preprocess(inp.pms)
    elif name == "bfd":
        bfd_preprocess(inp.pms)
    elif name == "bsbf":
        bsbf_preprocess(inp.pms)
    elif name == "sra":
        state = _sra.sra_build_preferences(inp)
        _sra.proposal_round(state)
    elif name == "gava":
        _genetic.gava_evolve(inp)
    else:
        raise ValueError(f"unknown allocator {name!r}")


def place_single(name: str, vm, candidate_pms, params=None):
    """Single-VM placement rule of one scheme over an explicit candidate set.

    Used for migration re-placement. Returns (pm, pe_index) or None.
    """
    if name == "ffd":
        for pm in sort_pms_descending(candidate_pms):
            if fits(vm, pm):
                return pm, choose_pe(pm, vm)
        return None
    if name in ("bfd", "bsbf"):
        order = sort_pms_descending(candidate_pms)
        residuals = [pm.residual_mips for pm in order]
        i = _bfd_pick(vm, order, residuals)
        if i is None:
            return None
        return order[i], choose_pe(order[i], vm)
    if name == "sra":
        return _sra.place_single(vm, candidate_pms)
    if name == "gava":
        ceiling = (params or {}).get("target_utilization",
                                     _genetic.DEFAULT_TARGET_UTILIZATION)
        return _genetic.place_single(vm, candidate_pms, ceiling)
    raise ValueError(f"unknown allocator {name!r}")
