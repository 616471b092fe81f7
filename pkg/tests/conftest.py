import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dhrom import control, network, presets, rom  # noqa: E402


@pytest.fixture(scope="session")
def table2():
    return presets.table2_pipe()


@pytest.fixture(scope="session")
def table2_responses(table2):
    return rom.step_responses(table2)


@pytest.fixture(scope="session")
def table2_tfs(table2_responses):
    return rom.identify_pair(table2_responses, 48, 16)


@pytest.fixture(scope="session")
def system2_plant():
    resp = rom.step_responses(presets.system2_pipe())
    F1, F2 = rom.identify_pair(resp, 48, 16)
    return control.Plant(F1, F2)


@pytest.fixture(scope="session")
def system1_identified():
    top = network.system1()
    tfs, orders = network.identify_network(top)
    return top, tfs, orders


@pytest.fixture(scope="session")
def system1_fom_reference(system1_identified):
    top = system1_identified[0]
    plan = network.SimulationPlan(2.0, 86400.0, "fom", network.daily_supply_profile(), T_g=10.0)
    return network.simulate_network(top, plan)


SYSTEM1_DTS = (2.0, 60.0, 120.0, 360.0)


@pytest.fixture(scope="session")
def system1_rmse_table(system1_identified, system1_fom_reference):
    """Per-pipe RMSE of the ROM backend against the FOM reference, keyed by the ROM step."""
    top, tfs, _ = system1_identified
    ref = system1_fom_reference
    table = {}
    for dt in SYSTEM1_DTS:
        plan = network.SimulationPlan(dt, 86400.0, "rom", network.daily_supply_profile(), T_g=10.0,
                                      transfer_functions=tfs)
        res = network.simulate_network(top, plan)
        table[dt] = {name: rom.rmse(network.project_linear(res.t, res.outlets[name], ref.t), ref.outlets[name])
                     for name in ("P1", "P2", "P3")}
    return table


@pytest.fixture(scope="session")
def system2_tuning(system2_plant):
    """Ultimate gain, ultimate period and the optimized integral gain at K_p = 0.211."""
    K_u, tau_u = control.find_ultimate_gain(system2_plant)
    K_i = control.optimize_ki(system2_plant, 0.211)
    return K_u, tau_u, K_i
