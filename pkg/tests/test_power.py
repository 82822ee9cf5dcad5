import math

import pytest
from hypothesis import given, strategies as st

from ucgna.conic.solve import solve_conic
from ucgna.model import INFEASIBLE, OPTIMAL, ConicProgram, ModelError
from ucgna.power import (Bid, Bus, Generator, Line, PowerSystem, build_ed_block, build_power_program,
                         build_uc_block, check_horizon, dc_flow, trajectory_violations, validate_network)
from ucgna.solver.bnb import branch_and_bound


def one_unit(**kw):
    g = Generator("g", "b1", bids=[Bid(10.0, 5.0)], p_max=5.0, **kw)
    return PowerSystem([Bus("b1", load=[0.0] * 4)], [], [g], reference_bus="b1")


def commitment_program(net, T, u):
    P = ConicProgram()
    uc = build_uc_block(P, net, T)
    for t, val in enumerate(u, start=1):
        P.fix(uc.u[("g", t)], val)
    return P, uc


def test_startup_cost_after_two_periods_offline(frozen):
    net = one_unit(startup=[(1, 100.0), (2, 200.0)])
    P, uc = commitment_program(net, 3, [0, 0, 1])
    sol = branch_and_bound(P)
    assert sol.status == OPTIMAL
    assert sol.value(uc.r[("g", 3)]) == pytest.approx(frozen["startup_after_2_off"], abs=1e-6)
    assert sol.value(uc.r[("g", 3)]) == pytest.approx(200.0, abs=1e-6)


def test_unit_kept_off_has_no_startup_cost():
    net = one_unit(startup=[(1, 100.0), (2, 200.0)])
    P, uc = commitment_program(net, 3, [0, 0, 0])
    sol = branch_and_bound(P)
    assert all(sol.value(uc.r[("g", t)]) == pytest.approx(0.0, abs=1e-7) for t in (1, 2, 3))


def test_initial_status_window_fixes_commitment():
    net = one_unit(initial_status=1, forced_on=2)
    P = ConicProgram()
    uc = build_uc_block(P, net, 3)
    sf = P.to_standard_form()
    for t in (1, 2):
        j = sf.col(uc.u[("g", t)])
        assert sf.lower[j] == sf.upper[j] == 1.0
    j = sf.col(uc.u[("g", 3)])
    assert (sf.lower[j], sf.upper[j]) == (0.0, 1.0)


def test_forced_window_reaching_horizon_rejected():
    with pytest.raises(ModelError, match="horizon"):
        check_horizon(one_unit(initial_status=1, forced_on=2), 2)
    with pytest.raises(ModelError):
        check_horizon(one_unit(), 0)


def test_dc_flow():
    assert dc_flow(10.0, 0.3, 0.3) == 0.0
    assert dc_flow(10.0, 0.1, 0.0) == pytest.approx(-1.0)


def test_single_bus_dispatch_meets_load():
    g = Generator("g", "b1", bids=[Bid(10.0, 5.0)], p_min=1.0, p_max=5.0, initial_status=1)
    net = PowerSystem([Bus("b1", load=[3.0])], [], [g], reference_bus="b1")
    P, uc, ed = build_power_program(net)
    sol = branch_and_bound(P)
    assert sol.value(ed.p[("g", 1)]) == pytest.approx(3.0, abs=1e-7)
    assert sol.objective == pytest.approx(30.0, abs=1e-6)


def test_line_flow_follows_angles():
    gens = [Generator("g", "b1", bids=[Bid(5.0, 50.0)], p_max=50.0, initial_status=1)]
    net = PowerSystem([Bus("b1", load=[0.0]), Bus("b2", load=[20.0])],
                      [Line("l", "b1", "b2", susceptance=100.0, limit=30.0)], gens, reference_bus="b1")
    P, uc, ed = build_power_program(net)
    sol = branch_and_bound(P)
    f = sol.value(ed.f[("l", 1)])
    th1, th2 = sol.value(ed.theta[("b1", 1)]), sol.value(ed.theta[("b2", 1)])
    assert f == pytest.approx(dc_flow(100.0, th1, th2), abs=1e-7)
    assert abs(f) == pytest.approx(20.0, abs=1e-6)


def test_thermal_limit_makes_dispatch_infeasible():
    gens = [Generator("g", "b1", bids=[Bid(5.0, 50.0)], p_max=50.0, initial_status=1)]
    net = PowerSystem([Bus("b1", load=[0.0]), Bus("b2", load=[20.0])],
                      [Line("l", "b1", "b2", susceptance=100.0, limit=10.0)], gens, reference_bus="b1")
    P, _, _ = build_power_program(net)
    assert branch_and_bound(P).status == INFEASIBLE


def test_toy_power_only_commitment(toy, frozen):
    P, uc, ed = build_power_program(toy.power, toy.T)
    sol = branch_and_bound(P)
    ref = frozen["toy_power"]
    assert sol.objective == pytest.approx(ref["objective"], rel=1e-6)
    assert [round(sol.value(uc.u[(g, 1)])) for g in ("gas1", "oil1")] == ref["u"]
    assert sol.value(ed.p[("gas1", 1)]) == pytest.approx(ref["p_gas"], abs=1e-5)


def test_validator_messages(toy):
    assert validate_network(toy.power) == []
    g = Generator("g", "b1", bids=[Bid(20.0, 5.0), Bid(10.0, 5.0)], p_max=10.0)
    net = PowerSystem([Bus("b1")], [], [g])
    assert any("bids not sorted" in d for d in validate_network(net))
    g2 = Generator("h", "b1", bids=[Bid(10.0, 5.0)], p_min=6.0, p_max=5.0)
    assert any("p_min > p_max" in d for d in validate_network(PowerSystem([Bus("b1")], [], [g2])))


def test_validator_flags_unknown_bus_and_island():
    g = Generator("g", "nowhere", bids=[Bid(1.0, 1.0)], p_max=1.0)
    net = PowerSystem([Bus("b1"), Bus("b2")], [], [g])
    out = validate_network(net)
    assert any("unknown bus" in d for d in out)
    assert any("not connected" in d for d in out)


def test_missing_bids_rejected_by_builder():
    g = Generator("g", "b1", p_max=1.0)
    net = PowerSystem([Bus("b1", load=[0.0])], [], [g])
    P = ConicProgram()
    uc = build_uc_block(P, net, 1)
    with pytest.raises(ModelError, match="bid ladder"):
        build_ed_block(P, net, 1, uc)


@given(st.lists(st.integers(0, 1), min_size=4, max_size=4), st.integers(1, 3), st.integers(1, 3),
       st.integers(0, 1))
def test_commitment_rows_agree_with_trajectory_checker(u, min_up, min_down, u0):
    g = Generator("g", "b1", bids=[Bid(1.0, 5.0)], p_max=5.0, min_up=min_up, min_down=min_down,
                  initial_status=u0, startup=[(1, 10.0)])
    net = PowerSystem([Bus("b1", load=[0.0] * 4)], [], [g], reference_bus="b1")
    P, _ = commitment_program(net, 4, u)
    feasible = branch_and_bound(P).status == OPTIMAL
    assert feasible == (trajectory_violations(g, u) == [])


def test_ramp_rows_limit_output_change():
    g = Generator("g", "b1", bids=[Bid(1.0, 50.0)], p_max=50.0, initial_status=1, initial_output=10.0,
                  ramp_up=5.0)
    cheap = Generator("c", "b1", bids=[Bid(100.0, 50.0)], p_max=50.0, initial_status=1)
    net = PowerSystem([Bus("b1", load=[30.0])], [], [g, cheap], reference_bus="b1")
    P, uc, ed = build_power_program(net)
    sol = branch_and_bound(P)
    assert sol.value(ed.p[("g", 1)]) == pytest.approx(15.0, abs=1e-6)
    assert math.isclose(sol.value(ed.p[("c", 1)]), 15.0, abs_tol=1e-6)
