"""Genetic-algorithm workload allocation over a per-core bit encoding.

A chromosome carries one gene per processing element (two per host, host
order fixed by id). A set bit flags the core as usable; fitness is the
count of zero bits, so evolution pushes toward plans that leave cores
unflagged. Decoding is greedy: workloads in descending demand each take
the flagged core with the smallest sufficient residual, subject to a
target-utilization ceiling. A core already loaded to the ceiling accepts
nothing more, but a single workload may claim an empty core outright,
which keeps the large VM classes placeable.

Mutation only flips zeros to ones; unflagging a core would strand every
tenant already decoded onto it, so infeasible children are repaired by
further zero-to-one flips instead.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from ..model import AllocationPlan, Placement

DEFAULT_GENERATIONS = 200
DEFAULT_TARGET_UTILIZATION = 0.65
DEFAULT_POPULATION = 50
DEFAULT_MUTATION_RATE = 0.01
REPAIR_ATTEMPTS = 8
REPAIR_BATCH = 8


@dataclass
class Chromosome:
    genes: list[int]
    decode_cache: dict | None = None

    @property
    def fitness(self) -> int:
        return self.genes.count(0)


@dataclass
class EvolutionResult:
    best: Chromosome
    assignments: dict[str, tuple[int, int]]   # vm_id -> (pm index, pe index)
    unplaced: list[str]
    history: list[int] = field(default_factory=list)
    generations: int = 0


def _pe_tables(pms):
    caps, alloc, ram_free = [], [], []
    for pm in pms:
        for pe in pm.pes:
            caps.append(pe.mips_capacity)
            alloc.append(pe.mips_allocated)
        ram_free.append(pm.residual_ram)
    return caps, alloc, ram_free


def gava_decode(genes, vms, pms, target_utilization=DEFAULT_TARGET_UTILIZATION):
    """Greedy decode of a chromosome into vm -> (pm, pe) index pairs.

    Returns (assignments, unplaced); a chromosome is feasible when
    unplaced is empty.
    """
    if len(genes) != 2 * len(pms):
        raise ValueError("gene string must carry two genes per host")
    caps, alloc, ram_free = _pe_tables(pms)
    flagged = [i for i, g in enumerate(genes) if g]
    limits = [target_utilization * caps[i] for i in flagged]
    assignments, unplaced = {}, []
    order = sorted(vms, key=lambda vm: (-vm.mips_demand, vm.vm_id))
    for vm in order:
        d = vm.mips_demand
        ram = vm.ram_mb
        best, best_res = None, None
        for pos, i in enumerate(flagged):
            a = alloc[i]
            if a + d > limits[pos] and not (a == 0 and d <= caps[i]):
                continue
            res = caps[i] - a
            if res >= d and (best is None or res < best_res) and ram_free[i // 2] >= ram:
                best, best_res = i, res
        if best is None:
            unplaced.append(vm.vm_id)
            continue
        alloc[best] += d
        ram_free[best // 2] -= ram
        assignments[vm.vm_id] = (best // 2, best % 2)
    return assignments, unplaced


def mutate(genes, rng, rate=DEFAULT_MUTATION_RATE):
    """Partial mutation: flips zeros to ones only, never the reverse."""
    child = list(genes)
    for i, g in enumerate(child):
        if g == 0 and rng.random() < rate:
            child[i] = 1
    return child


def _crossover(a, b, rng):
    point = rng.randrange(1, len(a))
    return a[:point] + b[point:]


def _flip_random_zeros(genes, rng, count):
    zeros = [i for i, g in enumerate(genes) if g == 0]
    if not zeros:
        return False
    for i in rng.sample(zeros, min(count, len(zeros))):
        genes[i] = 1
    return True


def _grow_until_feasible(genes, vms, pms, ceiling, rng, batch):
    while True:
        _, unplaced = gava_decode(genes, vms, pms, ceiling)
        if not unplaced:
            return True
        if not _flip_random_zeros(genes, rng, batch):
            return False


def _tournament(pop, fitnesses, rng):
    i = rng.randrange(len(pop))
    j = rng.randrange(len(pop))
    return pop[i] if fitnesses[i] >= fitnesses[j] else pop[j]


def gava_evolve(inp, generations=None, target_utilization=None, population=None,
                rng_seed=None) -> EvolutionResult:
    """Evolve a population of feasible chromosomes and decode the fittest.

    Workloads that even the all-ones chromosome cannot place are reported
    as unplaced up front; evolution runs over the remainder.
    """
    params = inp.params or {}
    generations = generations if generations is not None else params.get(
        "generations", DEFAULT_GENERATIONS)
    ceiling = target_utilization if target_utilization is not None else params.get(
        "target_utilization", DEFAULT_TARGET_UTILIZATION)
    population = population if population is not None else params.get(
        "population", DEFAULT_POPULATION)
    rng_seed = rng_seed if rng_seed is not None else params.get("rng_seed", 0)
    mutation_rate = params.get("mutation_rate", DEFAULT_MUTATION_RATE)
    if generations < 1:
        raise ValueError("generations must be >= 1")
    if population < 2:
        raise ValueError("population must be >= 2")

    pms = sorted(inp.pms, key=lambda pm: pm.pm_id)
    rng = random.Random(rng_seed)
    n_genes = 2 * len(pms)

    all_ones = [1] * n_genes
    _, hopeless = gava_decode(all_ones, inp.vms, pms, ceiling)
    vms = [vm for vm in inp.vms if vm.vm_id not in hopeless]
    if not vms or n_genes == 0:
        return EvolutionResult(Chromosome([0] * n_genes), {}, list(hopeless))

    batch = max(1, n_genes // 8)
    pop = []
    for _ in range(population):
        genes = [0] * n_genes
        if not _grow_until_feasible(genes, vms, pms, ceiling, rng, batch):
            # joint capacity exhausted even at all ones
            assignments, unplaced = gava_decode(all_ones, vms, pms, ceiling)
            return EvolutionResult(Chromosome(all_ones), assignments,
                                   list(hopeless) + unplaced)
        pop.append(genes)

    fitnesses = [g.count(0) for g in pop]
    history = []
    for _ in range(generations):
        best_i = max(range(len(pop)), key=lambda i: fitnesses[i])
        next_pop = [list(pop[best_i])]
        while len(next_pop) < population:
            p1 = _tournament(pop, fitnesses, rng)
            p2 = _tournament(pop, fitnesses, rng)
            child = mutate(_crossover(p1, p2, rng), rng, mutation_rate)
            ok = False
            for _ in range(REPAIR_ATTEMPTS):
                _, unplaced = gava_decode(child, vms, pms, ceiling)
                if not unplaced:
                    ok = True
                    break
                if not _flip_random_zeros(child, rng, REPAIR_BATCH):
                    break
            if not ok:
                child = list(p1 if p1.count(0) >= p2.count(0) else p2)
            next_pop.append(child)
        pop = next_pop
        fitnesses = [g.count(0) for g in pop]
        history.append(max(fitnesses))

    best_i = max(range(len(pop)), key=lambda i: fitnesses[i])
    best = Chromosome(list(pop[best_i]))
    assignments, unplaced = gava_decode(best.genes, vms, pms, ceiling)
    best.decode_cache = assignments
    return EvolutionResult(best, assignments, list(hopeless) + unplaced,
                           history, generations)


def gava_allocate(inp) -> AllocationPlan:
    """Full scheme: evolve offline, then apply the winning decode."""
    t0 = time.perf_counter_ns()
    result = gava_evolve(inp)
    preprocessing_ns = time.perf_counter_ns() - t0

    plan = AllocationPlan(preprocessing_ns=preprocessing_ns)
    plan.rejected.extend(result.unplaced)
    pms = sorted(inp.pms, key=lambda pm: pm.pm_id)
    vms_by_id = {vm.vm_id: vm for vm in inp.vms}
    order = sorted(result.assignments,
                   key=lambda vm_id: (-vms_by_id[vm_id].mips_demand, vm_id))
    for vm_id in order:
        t0 = time.perf_counter_ns()
        pm_index, pe_index = result.assignments[vm_id]
        pm = pms[pm_index]
        pm.place(vms_by_id[vm_id], pe_index)
        plan.assignments[vm_id] = Placement(pm.pm_id, pe_index)
        plan.placement_ns[vm_id] = time.perf_counter_ns() - t0
    return plan


def place_single(vm, candidate_pms, target_utilization=DEFAULT_TARGET_UTILIZATION):
    """Single-VM rule: tightest core under the ceiling, empty cores exempt."""
    best = None
    for pm in sorted(candidate_pms, key=lambda p: p.pm_id):
        if pm.residual_ram < vm.ram_mb:
            continue
        for i, pe in enumerate(pm.pes):
            limit = target_utilization * pe.mips_capacity
            ok = (pe.mips_allocated + vm.mips_demand <= limit
                  or (pe.mips_allocated == 0 and vm.mips_demand <= pe.mips_capacity))
            if not ok or pe.residual < vm.mips_demand:
                continue
            key = (pe.residual, pm.pm_id, i)
            if best is None or key < best[0]:
                best = (key, pm, i)
    if best is None:
        return None
    return best[1], best[2]
