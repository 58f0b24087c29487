import pytest

from fedcloudsim.model import PhysicalMachine, PowerModel, VmRequest
from fedcloudsim.traces import SAMPLES_PER_TRACE, UtilizationTrace


FLAT_WATTS = [100.0] * 11
RISING_WATTS = [86, 89.4, 92.6, 96, 99.5, 102, 106, 108, 112, 114, 117]


def make_power(watts=None):
    return PowerModel(watts or RISING_WATTS)


def make_pm(pm_id="pm0", csp_id="csp1", pe_mips=2600, ram_mb=4096, watts=None):
    return PhysicalMachine(pm_id, csp_id, pe_mips, ram_mb, make_power(watts))


def constant_trace(level, name="t0"):
    return UtilizationTrace((level,) * SAMPLES_PER_TRACE, "synthetic", name)


def make_vm(vm_id="vm0", owner="csp1", mips=1000, ram_mb=256, level=50):
    return VmRequest(vm_id, owner, mips, ram_mb, constant_trace(level, f"tr-{vm_id}"))


@pytest.fixture
def pm2600():
    return make_pm("pm-fast", pe_mips=2600)


@pytest.fixture
def pm1860():
    return make_pm("pm-slow", pe_mips=1860)
