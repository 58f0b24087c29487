import pytest
from hypothesis import given, settings, strategies as st

from fedcloudsim.model import (
    COMPETITIVE,
    COOPERATIVE,
    CapacityError,
    ConfigurationError,
    CspSpec,
    FederationConfig,
    PhysicalMachine,
    PmSpec,
    PowerModel,
    VmRequest,
    admissibility,
    default_power_models,
    fits,
    load_power_models,
    placement_utility,
    validate_plan,
)
from fedcloudsim.allocators import AllocatorInput, allocate

from conftest import make_pm, make_vm


# ---------------------------------------------------------------------------
# power model

def test_power_at_grid_points_exact():
    watts = [86, 89.4, 92.6, 96, 99.5, 102, 106, 108, 112, 114, 117]
    model = PowerModel(watts)
    for k in range(11):
        assert model.power_at(k / 10) == watts[k]


def test_power_at_midpoint_interpolates():
    model = PowerModel([100] + [200] * 10)
    assert model.power_at(0.05) == pytest.approx(150.0)


def test_power_at_rejects_out_of_domain():
    model = PowerModel([100] * 11)
    with pytest.raises(ValueError):
        model.power_at(-0.01)
    with pytest.raises(ValueError):
        model.power_at(1.01)


def test_power_table_validation():
    with pytest.raises(ConfigurationError):
        PowerModel([100] * 10)                      # wrong length
    with pytest.raises(ConfigurationError):
        PowerModel([0] + [100] * 10)                # non-positive entry
    with pytest.raises(ConfigurationError):
        PowerModel([100, 90] + [100] * 9)           # decreasing


@st.composite
def monotone_tables(draw):
    base = draw(st.floats(min_value=1, max_value=500))
    steps = draw(st.lists(st.floats(min_value=0, max_value=50),
                          min_size=10, max_size=10))
    table = [base]
    for s in steps:
        table.append(table[-1] + s)
    return table


@settings(max_examples=60)
@given(monotone_tables(),
       st.floats(min_value=0, max_value=1),
       st.floats(min_value=0, max_value=1))
def test_power_at_monotone(table, u1, u2):
    model = PowerModel(table)
    lo, hi = sorted((u1, u2))
    assert model.power_at(lo) <= model.power_at(hi) + 1e-9


def test_load_power_models(tmp_path):
    path = tmp_path / "tables.txt"
    path.write_text("# comment\n100 100 100 100 100 100 100 100 100 100 100\n"
                    "50 60 70 80 90 100 110 120 130 140 150\n")
    models = load_power_models(path)
    assert len(models) == 2
    assert models[1].power_at(0.0) == 50


def test_default_power_models_ship_two_categories():
    models = default_power_models()
    assert len(models) == 2
    for m in models:
        assert m.power_at(0.0) > 0
        assert m.power_at(1.0) < 2 * m.power_at(0.0)


# ---------------------------------------------------------------------------
# hosts and ledger

def test_pm_has_two_pes_and_residual_math():
    pm = make_pm(pe_mips=2600)
    assert len(pm.pes) == 2
    assert pm.capacity_mips == 5200
    assert pm.residual_mips == 5200
    vm = make_vm(mips=2500)
    pm.place(vm, 0)
    assert pm.pe_residual(0) == 100
    assert pm.pe_residual(1) == 2600
    assert pm.residual_mips == 2700


def test_pm_state_transitions():
    pm = make_pm()
    assert pm.state == "off"
    vm = make_vm()
    pm.place(vm, 0)
    assert pm.state == "active"
    pm.remove(vm)
    assert pm.state == "off"
    assert pm.residual_mips == pm.capacity_mips
    pm.mark_idle()
    assert pm.is_powered and not pm.is_active


def test_pm_rejects_overcommit_and_double_place():
    pm = make_pm(pe_mips=1860)
    with pytest.raises(CapacityError):
        pm.place(make_vm(mips=2000), 0)
    vm = make_vm(mips=1000)
    pm.place(vm, 0)
    with pytest.raises(CapacityError):
        pm.place(vm, 1)


def test_pm_ram_ledger_blocks_placement():
    pm = make_pm(ram_mb=1024)
    pm.place(make_vm("a", mips=500, ram_mb=800), 0)
    with pytest.raises(CapacityError):
        pm.place(make_vm("b", mips=500, ram_mb=512), 1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(min_value=1, max_value=1300),
                          st.integers(min_value=0, max_value=1)),
                max_size=12),
       st.data())
def test_capacity_conservation_under_churn(ops, data):
    pm = make_pm(pe_mips=2600, ram_mb=100000)
    residents = {}
    for n, (mips, pe) in enumerate(ops):
        vm = make_vm(f"vm{n}", mips=mips)
        if pm.pes[pe].residual >= mips:
            pm.place(vm, pe)
            residents[vm.vm_id] = vm
        if residents and data.draw(st.booleans()):
            victim = residents.pop(sorted(residents)[0])
            pm.remove(victim)
        total_alloc = sum(pe.mips_allocated for pe in pm.pes)
        assert total_alloc == sum(vm.mips_demand for vm in residents.values())
        for pe_obj in pm.pes:
            assert 0 <= pe_obj.mips_allocated <= pe_obj.mips_capacity
    assert (pm.state == "off") == (not residents)


# ---------------------------------------------------------------------------
# fits / admissibility / utility

def test_fits_heavy_vm_needs_fast_pe():
    assert not fits(make_vm(mips=2500), make_pm(pe_mips=1860))
    assert fits(make_vm(mips=500), make_pm(pe_mips=2600))


def test_fits_is_per_pe_not_aggregate():
    pm = make_pm(pe_mips=2600)
    pm.place(make_vm("a", mips=1600), 0)   # residual 1000
    pm.place(make_vm("b", mips=1200), 1)   # residual 1400
    assert pm.residual_mips == 2400
    assert not fits(make_vm("c", mips=1500), pm)


def test_fits_checks_ram():
    pm = make_pm(ram_mb=512)
    assert not fits(make_vm(mips=500, ram_mb=1024), pm)


def test_admissibility_gate():
    vm_a = make_vm(owner="csp-a")
    pm_b = make_pm(csp_id="csp-b")
    pm_a = make_pm(csp_id="csp-a")
    assert admissibility(vm_a, pm_b, COOPERATIVE) == 1
    assert admissibility(vm_a, pm_b, COMPETITIVE) == 0
    assert admissibility(vm_a, pm_a, COMPETITIVE) == 1


def test_admissibility_unknown_model():
    with pytest.raises(ConfigurationError):
        admissibility(make_vm(), make_pm(), "anarchy")


def test_placement_utility_values():
    vm = make_vm(owner="csp-a", mips=2500)
    pm_other = make_pm(csp_id="csp-b", pe_mips=2600)
    assert placement_utility(vm, pm_other, COMPETITIVE) == 0
    assert placement_utility(vm, pm_other, COOPERATIVE) == 5200 - 2500


def test_placement_utility_argmax_prefers_larger_residual():
    vm = make_vm(mips=1000)
    slow = make_pm("slow", pe_mips=1860)    # residual 3720
    fast = make_pm("fast", pe_mips=2600)    # residual 5200
    utilities = {pm.pm_id: placement_utility(vm, pm, COOPERATIVE)
                 for pm in (slow, fast)}
    assert max(utilities, key=utilities.get) == "fast"
    assert utilities == {"slow": 2720, "fast": 4200}


# ---------------------------------------------------------------------------
# plan validation

def test_validate_plan_flags_cross_csp_assignment():
    vm = make_vm(owner="csp-a", mips=500)
    pm = make_pm(csp_id="csp-b")
    plan = allocate("ffd", AllocatorInput([vm], [pm]))
    validate_plan(plan, [vm], [pm], COOPERATIVE)
    with pytest.raises(AssertionError):
        validate_plan(plan, [vm], [pm], COMPETITIVE)


# ---------------------------------------------------------------------------
# federation config

def _config(**kw):
    base = dict(
        model=COOPERATIVE,
        csps=[CspSpec("csp1", [PmSpec(2600, 4096, 0)])],
        allocator="ffd",
    )
    base.update(kw)
    return FederationConfig(**base)


def test_config_validates_model_and_allocator():
    with pytest.raises(ConfigurationError):
        _config(model="chaotic").validate()
    with pytest.raises(ConfigurationError):
        _config(allocator="wfd").validate()


def test_config_validates_horizon_multiple():
    with pytest.raises(ConfigurationError):
        _config(horizon_s=1000, scheduling_interval_s=300).validate()


def test_config_rejects_duplicate_csp_and_empty_pm_list():
    with pytest.raises(ConfigurationError):
        _config(csps=[CspSpec("a", [PmSpec(100, 100)]),
                      CspSpec("a", [PmSpec(100, 100)])]).validate()
    with pytest.raises(ConfigurationError):
        _config(csps=[CspSpec("a", [])]).validate()


def test_materialize_pms_ids_and_categories():
    cfg = _config(csps=[CspSpec("csp1", [PmSpec(2600, 4096, 1),
                                         PmSpec(1860, 4096, 0)])])
    pms = cfg.materialize_pms()
    assert [pm.pm_id for pm in pms] == ["csp1-pm0000", "csp1-pm0001"]
    assert pms[0].power_model.watts != pms[1].power_model.watts
    assert all(pm.state == "off" for pm in pms)
