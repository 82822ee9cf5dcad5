import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from ucgna.cli import main
from ucgna.config import Config
from ucgna.coupling import validity_slack
from ucgna.data import DataError, bundled_path, load_system, parse_system, scale_loads
from ucgna.gas import gas_cost, solve_gas
from ucgna.harness.report import CostBreakdown, RunReport, ValidityEntry, csv_columns
from ucgna.harness.runs import marginal_output_price, run_baseline, run_gna, run_scenario
from ucgna.harness.sweep import grid, sweep
from ucgna.power import Bid, Generator


def toy_doc():
    return json.loads(bundled_path("toy2x2").read_text())


def gas_on(rep, gid="gas1"):
    return next(r["u"] for r in rep.commitment if r["unit"] == gid and r["t"] == 1) > 0.5


# -- data ---------------------------------------------------------------------

def test_bundled_toy_loads_clean(toy):
    assert toy.diagnostics() == []
    assert toy.T == 1


def test_missing_file_and_bad_link(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_system(tmp_path / "nope.json")
    doc = toy_doc()
    doc["coupling"]["gfpps"][0]["junction"] = "j9"
    with pytest.raises(DataError, match="gas1"):
        parse_system(doc)


def test_unsorted_bids_rejected():
    doc = toy_doc()
    doc["power"]["generators"][0]["bids"] = [[40.0, 10.0], [20.0, 10.0]]
    with pytest.raises(DataError, match="bids not sorted"):
        parse_system(doc)


def test_scale_identity_and_gas_doubling(toy):
    same = scale_loads(toy, 1.0, 1.0)
    assert same.power.buses[1].load == toy.power.buses[1].load
    assert same.gas.junctions[1].demand == toy.gas.junctions[1].demand
    doc = toy_doc()
    doc["gas"]["junctions"][1]["demand"] = [4.0]
    assert scale_loads(parse_system(doc), 1.0, 2.0).gas.junctions[1].demand == [8.0]


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_scaling_commutes(a, b):
    toy = load_system("toy2x2")
    x = scale_loads(scale_loads(toy, a, 1.0), 1.0, b)
    y = scale_loads(scale_loads(toy, 1.0, b), a, 1.0)
    assert x.power.buses[1].load == pytest.approx(y.power.buses[1].load, rel=1e-12)
    assert x.gas.junctions[1].demand == pytest.approx(y.gas.junctions[1].demand, rel=1e-12)
    assert x.power.buses[1].load[0] == pytest.approx(25.0 * a, rel=1e-12)


def test_bad_multiplier_rejected(toy):
    with pytest.raises(ValueError):
        scale_loads(toy, 0.0, 1.0)


# -- mode A ---------------------------------------------------------------------

def test_marginal_output_price():
    g = Generator("g", "b", bids=[Bid(10.0, 5.0), Bid(20.0, 5.0)], p_max=10.0)
    assert marginal_output_price(g, [5.0, 0.0]) == 10.0
    assert marginal_output_price(g, [5.0, 2.0]) == 20.0
    assert marginal_output_price(g, [0.0, 0.0]) == 0.0


def test_baseline_uncongested(toy, frozen):
    rep = run_baseline(toy)
    assert rep.costs.loss == 0.0
    assert rep.zone_price("demand_zone") == pytest.approx(1.5, abs=1e-5)
    assert rep.costs.power == pytest.approx(frozen["toy_power"]["objective"], rel=1e-6)
    assert rep.costs.gas == pytest.approx(frozen["toy_gas_mode_a"]["1"]["cost"], rel=1e-6)


def test_baseline_shedding_prices_and_losses(toy, frozen):
    rep = run_scenario(toy, "A", 1.0, 3.0)
    assert rep.total_shed == pytest.approx(frozen["toy_gas_mode_a"]["3"]["shed"], abs=1e-5)
    assert rep.zone_price("demand_zone") == pytest.approx(130.0, abs=1e-4)
    assert rep.costs.loss > 0
    (entry,) = rep.validity
    assert entry.slack < 0
    assert rep.costs.loss == pytest.approx(-entry.slack * entry.p, rel=1e-9)


def test_baseline_without_gfpps_has_no_loss():
    doc = toy_doc()
    doc["coupling"]["gfpps"] = []
    doc["coupling"]["zones"] = []
    rep = run_baseline(parse_system(doc))
    assert rep.validity == [] and rep.costs.loss == 0.0


@settings(max_examples=8)
@given(st.sampled_from([1.0, 1.5, 2.0, 3.0, 5.0]))
def test_baseline_loss_recomputes(eta_g):
    toy = load_system("toy2x2")
    rep = run_scenario(toy, "A", 1.0, eta_g)
    c = toy.coupling.curves["gas1"]
    total = 0.0
    for e in rep.validity:
        assert e.slack == pytest.approx(validity_slack(1.0, e.rho, e.p, c, e.psi), abs=1e-9)
        total += max(0.0, -e.slack) * e.p
    assert rep.costs.loss == pytest.approx(total, abs=1e-9)


# -- mode B ---------------------------------------------------------------------

def test_gna_matches_baseline_when_uncongested(toy):
    a, b = run_baseline(toy), run_gna(scale_loads(toy))
    assert b.status == "optimal"
    assert [r["u"] > 0.5 for r in a.commitment] == [r["u"] > 0.5 for r in b.commitment]
    assert a.costs.loss == b.costs.loss == 0.0


def test_gna_drops_gfpp_under_congestion(toy):
    a, b = run_scenario(toy, "A", 1.0, 3.0), run_scenario(toy, "B", 1.0, 3.0)
    assert gas_on(a) and not gas_on(b)
    assert b.costs.loss == 0.0
    assert b.costs.total <= a.costs.total
    assert b.method in ("benders", "branch_and_bound")


def test_gna_gas_cost_matches_standalone_clearing(toy):
    # with gas1 off the gas program sees only firm demand
    S = scale_loads(toy, 1.0, 3.0)
    b = run_gna(S)
    sol, gv, _ = solve_gas(S.gas)
    assert b.costs.gas == pytest.approx(gas_cost(sol, gv, S.gas), rel=1e-6)


def test_gna_without_preprocessing_agrees(toy):
    on = run_scenario(toy, "B", 1.0, 4.0)
    off = run_scenario(toy, "B", 1.0, 4.0, Config().with_overrides(preprocess=False))
    assert on.eliminated and not off.eliminated
    assert on.objective == pytest.approx(off.objective, rel=1e-6)


def test_unknown_mode(toy):
    with pytest.raises(ValueError, match="unknown mode"):
        run_scenario(toy, "C")


# -- reports and sweeps -------------------------------------------------------

def test_table_row_format():
    rep = RunReport("s", "B", 1.0, 1.0, 0.99, "optimal", objective=13028.76, gap=0.0012)
    assert rep.table_row() == "13028.8 / 0.1"


def test_cost_breakdown_total():
    c = CostBreakdown(10.0, 5.0, 2.5)
    assert c.total == 17.5
    assert c.to_dict()["total"] == 17.5
    assert ValidityEntry("g", 1, "z", 130.0, 20.0, 10.0, -3.0).loss == 30.0


def test_grid_order_and_errors():
    cells = grid([1.0, 2.0], [1.0], ["A", "B"])
    assert [(c.eta_p, c.mode) for c in cells] == [(1.0, "A"), (1.0, "B"), (2.0, "A"), (2.0, "B")]
    with pytest.raises(ValueError):
        grid([], [1.0], ["A"])
    with pytest.raises(ValueError):
        grid([1.0], [-1.0], ["A"])


def test_single_cell_sweep(toy, tmp_path):
    results, text = sweep(toy, [1.0], [1.0], ("A", "B"), out_dir=tmp_path)
    assert len(results) == 2
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == csv_columns(["demand_zone"])
    assert [r[2] for r in rows[1:]] == ["A", "B"]
    assert all(r[rows[0].index("wall_s")] == "" for r in rows[1:])
    assert (tmp_path / "sweep.csv").read_text() == text
    assert (tmp_path / "reports" / "B_1_1.json").exists()


def test_gas_cost_monotone_along_sweep(toy):
    results, _ = sweep(toy, [1.0], [1.0, 2.0, 3.0, 4.0], ("A", "B"))
    for mode in "AB":
        reps = [r.report for r in results if r.cell.mode == mode]
        # decommitting a GFPP removes its gas use, so compare equal commitments only
        for a, b in zip(reps, reps[1:]):
            if [c["u"] for c in a.commitment] == [c["u"] for c in b.commitment]:
                assert b.costs.gas >= a.costs.gas - 1e-6, mode
    shed = {r.cell.eta_g: r.report for r in results if r.cell.mode == "A"}
    for r in results:
        if r.cell.mode == "B" and shed[r.cell.eta_g].total_shed > 1e-6:
            assert r.report.costs.total <= shed[r.cell.eta_g].costs.total + 1e-6


# -- CLI ------------------------------------------------------------------------

def test_cli_validate(capsys, tmp_path):
    assert main(["validate", "--system", "toy2x2"]) == 0
    assert "ok: toy2x2" in capsys.readouterr().out
    doc = toy_doc()
    doc["power"]["generators"][0]["p_min"] = 50.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--system", str(bad)]) == 2
    assert "p_min > p_max" in capsys.readouterr().out


def test_cli_run_and_sweep(capsys, tmp_path):
    assert main(["run", "--system", "toy2x2", "--mode", "B", "--eta-g", "3", "--out", str(tmp_path)]) == 0
    assert "status optimal" in capsys.readouterr().out
    assert (tmp_path / "report_B_1_3.json").exists()
    assert main(["sweep", "--system", "toy2x2", "--eta-g", "1,3", "--modes", "A"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("eta_p,eta_g,mode") and len(out) == 3


def test_cli_infeasible_exit_code(tmp_path):
    doc = toy_doc()
    doc["power"]["buses"][1]["load"] = [500.0]
    path = tmp_path / "big.json"
    path.write_text(json.dumps(doc))
    assert main(["run", "--system", str(path), "--mode", "A"]) == 4


def test_cli_oracle(capsys):
    assert main(["oracle", "--alphas", "0.99"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc[0]["gap"] < 1e-6
