import math
import random

from fedcloudsim.allocators import (
    AllocatorInput,
    allocate,
    bfd_allocate,
    bsbf_allocate,
    bsbf_find,
    bsbf_preprocess,
    ffd_allocate,
    sort_pms_descending,
)
from fedcloudsim.allocators.rbtree import CapacityTree
from fedcloudsim.model import validate_plan, COOPERATIVE

from conftest import make_pm, make_vm
from oracles import linear_best_fit_residual, optimal_pm_count


def desk_pms():
    return [make_pm("pm-a", pe_mips=2600), make_pm("pm-b", pe_mips=1860)]


def desk_vms():
    return [make_vm("vm-1", mips=2500), make_vm("vm-2", mips=2000),
            make_vm("vm-3", mips=1000), make_vm("vm-4", mips=500)]


def by_pm(plan):
    out = {}
    for vm_id, placement in plan.assignments.items():
        out.setdefault(placement.pm_id, set()).add(vm_id)
    return out


# ---------------------------------------------------------------------------
# sorting

def test_sort_pms_descending_by_residual():
    pms = [make_pm("a", pe_mips=1860), make_pm("b", pe_mips=2600),
           make_pm("c", pe_mips=2600)]
    assert [p.residual_mips for p in sort_pms_descending(pms)] == [5200, 5200, 3720]


def test_sort_pms_empty():
    assert sort_pms_descending([]) == []


def test_sort_pms_paper_scale_matches_reference():
    pms = [make_pm(f"s{i}", pe_mips=1860) for i in range(150)]
    pms += [make_pm(f"f{i}", pe_mips=2600) for i in range(150)]
    random.Random(5).shuffle(pms)
    ordered = sort_pms_descending(pms)
    reference = sorted(pms, key=lambda pm: (-pm.residual_mips, pm.pm_id))
    assert ordered == reference
    assert all(pm.pes[0].mips_capacity == 2600 for pm in ordered[:150])
    assert all(pm.pes[0].mips_capacity == 1860 for pm in ordered[150:])


# ---------------------------------------------------------------------------
# first-fit descending

def test_ffd_desk_example_placement():
    pms, vms = desk_pms(), desk_vms()
    plan = ffd_allocate(AllocatorInput(vms, pms))
    assert by_pm(plan) == {"pm-a": {"vm-1", "vm-2", "vm-4"}, "pm-b": {"vm-3"}}
    assert not plan.rejected
    validate_plan(plan, vms, pms, COOPERATIVE)


def test_ffd_single_vm_single_pm():
    pm = make_pm("only")
    vm = make_vm(mips=1000)
    plan = ffd_allocate(AllocatorInput([vm], [pm]))
    assert plan.assignments[vm.vm_id].pm_id == "only"


def test_ffd_rejects_heavy_vm_on_slow_hosts():
    pms = [make_pm(f"s{i}", pe_mips=1860) for i in range(3)]
    plan = ffd_allocate(AllocatorInput([make_vm(mips=2500)], pms))
    assert plan.rejected == ["vm0"]
    assert not plan.assignments


def test_ffd_deterministic():
    def run():
        return ffd_allocate(AllocatorInput(desk_vms(), desk_pms())).assignments
    assert run() == run()


def test_ffd_empty_pms_rejects_everything():
    plan = ffd_allocate(AllocatorInput(desk_vms(), []))
    assert sorted(plan.rejected) == sorted(vm.vm_id for vm in desk_vms())


# ---------------------------------------------------------------------------
# best-fit descending

def test_bfd_prefers_tightest_in_use_host():
    # an in-use fast host down to 3720 residual vs an untouched one at 5200
    busy = make_pm("busy", pe_mips=2600)
    busy.place(make_vm("seed", mips=1480), 0)
    assert busy.residual_mips == 3720
    idle = make_pm("idle", pe_mips=2600)
    plan = bfd_allocate(AllocatorInput([make_vm("new", mips=1000)], [idle, busy]))
    assert plan.assignments["new"].pm_id == "busy"


def test_bfd_opens_first_sorted_host_when_nothing_in_use():
    slow = make_pm("slow", pe_mips=1860)
    fast = make_pm("fast", pe_mips=2600)
    plan = bfd_allocate(AllocatorInput([make_vm("new", mips=1000)], [slow, fast]))
    assert plan.assignments["new"].pm_id == "fast"


def test_bfd_empty_vm_list():
    plan = bfd_allocate(AllocatorInput([], desk_pms()))
    assert not plan.assignments and not plan.rejected


def test_bfd_bound_vs_exhaustive_optimum():
    rng = random.Random(99)
    sizes = (500, 1000, 2000, 2500)
    checked = 0
    while checked < 25:
        pms = [make_pm(f"pm{i}", pe_mips=rng.choice((1860, 2600)))
               for i in range(rng.randint(2, 6))]
        vms = [make_vm(f"vm{i}", mips=rng.choice(sizes))
               for i in range(rng.randint(3, 10))]
        opt = optimal_pm_count(vms, pms)
        if opt is None:
            continue
        checked += 1
        plan = bfd_allocate(AllocatorInput(vms, pms))
        assert not plan.rejected
        assert plan.pms_used <= math.ceil(11 / 9 * opt) + 1
        validate_plan(plan, vms, pms, COOPERATIVE)


# ---------------------------------------------------------------------------
# binary-search best-fit

def test_bsbf_find_successor_examples():
    tree = CapacityTree()
    tree.insert(3720, "pm-s")
    tree.insert(5200, "pm-f1")
    tree.insert(5200, "pm-f2")
    assert bsbf_find(tree, 4000) == "pm-f1"
    assert bsbf_find(tree, 6000) is None


def test_bsbf_find_matches_linear_scan_on_random_queries():
    rng = random.Random(7)
    tree = CapacityTree()
    entries = []
    for i in range(200):
        key = rng.randrange(0, 5300)
        tree.insert(key, f"pm{i:03d}")
        entries.append((key, f"pm{i:03d}"))
    for _ in range(500):
        demand = rng.randrange(0, 5500)
        got = bsbf_find(tree, demand)
        want = linear_best_fit_residual(entries, demand)
        if want is None:
            assert got is None
        else:
            key = next(k for k, p in entries if p == got)
            assert key == want


def test_bsbf_matches_bfd_on_desk_example():
    vms = desk_vms()
    bfd_plan = bfd_allocate(AllocatorInput(vms, desk_pms()))
    bsbf_plan = bsbf_allocate(AllocatorInput(desk_vms(), desk_pms()))
    assert bsbf_plan.pms_used <= bfd_plan.pms_used
    assert {v: p.pm_id for v, p in bsbf_plan.assignments.items()} == \
           {v: p.pm_id for v, p in bfd_plan.assignments.items()}


def test_bsbf_forced_sequential_fill_decrements_key():
    pm = make_pm("solo", pe_mips=2600)
    order, tree = bsbf_preprocess([pm])
    assert tree.items() == [(5200, ["solo"])]
    vms = [make_vm(f"vm{i}", mips=500) for i in range(3)]
    plan = bsbf_allocate(AllocatorInput(vms, [pm]))
    assert all(p.pm_id == "solo" for p in plan.assignments.values())
    assert pm.residual_mips == 5200 - 1500


def test_bsbf_tree_valid_throughout_paper_scale_run(monkeypatch):
    pms = [make_pm(f"f{i:03d}", pe_mips=2600) for i in range(150)]
    pms += [make_pm(f"s{i:03d}", pe_mips=1860) for i in range(150)]
    sizes = [2500] * 14 + [2000] * 14 + [1000] * 14 + [500] * 14
    vms = [make_vm(f"vm{i:03d}", mips=sizes[i]) for i in range(56)]

    checked = []
    original = CapacityTree.move

    def checked_move(self, old_key, new_key, pm_id):
        original(self, old_key, new_key, pm_id)
        self.assert_valid()
        checked.append(pm_id)

    monkeypatch.setattr(CapacityTree, "move", checked_move)
    plan = bsbf_allocate(AllocatorInput(vms, pms))
    assert len(checked) == 56
    assert not plan.rejected
    validate_plan(plan, vms, pms, COOPERATIVE)


# ---------------------------------------------------------------------------
# cross-scheme plan validity

def test_all_schemes_produce_feasible_plans_on_random_instances():
    rng = random.Random(321)
    for trial in range(5):
        pms = [make_pm(f"pm{i}", pe_mips=rng.choice((1860, 2600)))
               for i in range(rng.randint(3, 8))]
        vms = [make_vm(f"vm{i}", mips=rng.choice((500, 1000, 2000, 2500)))
               for i in range(rng.randint(4, 12))]
        for name in ("ffd", "bfd", "bsbf", "sra", "gava"):
            fresh_pms = [make_pm(pm.pm_id, pe_mips=pm.pes[0].mips_capacity)
                         for pm in pms]
            plan = allocate(name, AllocatorInput(
                vms, fresh_pms, {"population": 6, "generations": 5}))
            validate_plan(plan, vms, fresh_pms, COOPERATIVE)
            assert set(plan.assignments) | set(plan.rejected) == \
                   {vm.vm_id for vm in vms}
