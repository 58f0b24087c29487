"""Independent oracles the tests check production code against.

Kept deliberately simple and separate from the implementations they
verify: exhaustive optimal packing, linear-scan best-fit, and a direct
ceiling-respecting best-fit for the genetic decode.
"""

import itertools
from collections import Counter


def _feasible(vms, hosts):
    """Backtracking: can every (mips, ram) demand land on one host core?

    ``hosts`` is a list of [pe0_residual, pe1_residual, ram_residual].
    Symmetric states are deduplicated, so identical empty hosts do not
    blow up the search.
    """
    if not vms:
        return True
    mips, ram = vms[0]
    rest = vms[1:]
    tried = set()
    for host in hosts:
        if host[2] < ram:
            continue
        for pe in (0, 1):
            if host[pe] < mips:
                continue
            key = (host[0], host[1], host[2], host[pe])
            if key in tried:
                continue
            tried.add(key)
            host[pe] -= mips
            host[2] -= ram
            if _feasible(rest, hosts):
                host[pe] += mips
                host[2] += ram
                return True
            host[pe] += mips
            host[2] += ram
    return False


def optimal_pm_count(vms, pms):
    """Minimum number of hosts that can carry the whole VM set, or None.

    Exhaustive search over host-type multisets plus backtracking
    assignment; only sensible at desk scale.
    """
    demands = sorted(((vm.mips_demand, vm.ram_mb) for vm in vms), reverse=True)
    if not demands:
        return 0
    specs = [(pm.pes[0].mips_capacity, pm.ram_mb) for pm in pms]
    type_counts = Counter(specs)
    types = sorted(type_counts)
    total_demand = sum(m for m, _ in demands)
    for k in range(1, len(specs) + 1):
        ranges = [range(0, min(type_counts[t], k) + 1) for t in types]
        for counts in itertools.product(*ranges):
            if sum(counts) != k:
                continue
            capacity = sum(2 * t[0] * c for t, c in zip(types, counts))
            if capacity < total_demand:
                continue
            if demands[0][0] > max(t[0] for t, c in zip(types, counts) if c):
                continue
            hosts = []
            for t, c in zip(types, counts):
                hosts.extend([t[0], t[0], t[1]] for _ in range(c))
            if _feasible(demands, hosts):
                return k
    return None


def linear_best_fit_residual(entries, demand):
    """Smallest residual >= demand over (residual, pm_id) pairs, or None."""
    fitting = [r for r, _ in entries if r >= demand]
    return min(fitting) if fitting else None


def best_fit_with_ceiling(vms, pms, ceiling):
    """Direct tightest-core placement with the utilization ceiling.

    Mirrors the genetic decode over an all-flagged gene string:
    a core at or above the ceiling takes no additional workload, but a
    single workload may claim an empty core outright.
    """
    pms = sorted(pms, key=lambda pm: pm.pm_id)
    caps, alloc = [], []
    ram_free = []
    for pm in pms:
        for pe in pm.pes:
            caps.append(pe.mips_capacity)
            alloc.append(pe.mips_allocated)
        ram_free.append(pm.residual_ram)
    assignments, unplaced = {}, []
    for vm in sorted(vms, key=lambda v: (-v.mips_demand, v.vm_id)):
        d = vm.mips_demand
        best, best_res = None, None
        for i in range(len(caps)):
            if ram_free[i // 2] < vm.ram_mb:
                continue
            if alloc[i] + d > ceiling * caps[i] and not (alloc[i] == 0 and d <= caps[i]):
                continue
            res = caps[i] - alloc[i]
            if res >= d and (best is None or res < best_res):
                best, best_res = i, res
        if best is None:
            unplaced.append(vm.vm_id)
            continue
        alloc[best] += d
        ram_free[best // 2] -= vm.ram_mb
        assignments[vm.vm_id] = (best // 2, best % 2)
    return assignments, unplaced
