"""Recompute the frozen reference values in ``frozen.json``.

Every value here comes from a hand-written model solved with cvxpy (or
from plain enumeration), not from the package's own builders or solvers.
The tri-level reference objectives use the enumeration oracle, which
shares no solver code with branch-and-bound or Benders.

    python3 tests/oracles/derive.py

cvxpy reports equality multipliers with the opposite sign to the package
convention (derivative of the optimal value in the right-hand side), hence
the negations below.  Values are rounded to 1e-7; tests compare with
tolerances well above that.
"""
from __future__ import annotations

import itertools
import json
from pathlib import Path

import cvxpy as cp
import numpy as np

KAPPA = 130.0
HERE = Path(__file__).resolve().parent


def two_node_gas(demand, cap=10.0, slope=1.5, weymouth=1.0, pmax=1000.0):
    """Supply at j1, demand at j2, one pipe j1 -> j2."""
    s, phi, q = cp.Variable(nonneg=True), cp.Variable(nonneg=True), cp.Variable(nonneg=True)
    pi1, pi2 = cp.Variable(), cp.Variable()
    bal2 = phi + q == demand
    cons = [s <= cap, s == phi, bal2, q <= demand, pi1 - pi2 >= weymouth * cp.square(phi),
            pi1 >= 0, pi1 <= pmax, pi2 >= 0, pi2 <= pmax]
    prob = cp.Problem(cp.Minimize(slope * s + KAPPA * q), cons)
    prob.solve(solver="CLARABEL")
    return {"flow": float(phi.value), "shed": float(q.value), "cost": float(prob.value),
            "price_j2": -float(bal2.dual_value)}


def toy_gas(eta_g, gfpp_use):
    """The toy gas network with the GFPP consumption as unsheddable demand at j2."""
    d = 10.0 * eta_g
    s, phi, q = cp.Variable(nonneg=True), cp.Variable(nonneg=True), cp.Variable(nonneg=True)
    pi1, pi2 = cp.Variable(), cp.Variable()
    bal2 = phi + q == d + gfpp_use
    cons = [s <= 40.0, s == phi, bal2, q <= d, pi1 - pi2 >= 0.05 * cp.square(phi),
            pi1 >= 0, pi1 <= 100, pi2 >= 50, pi2 <= 100]
    prob = cp.Problem(cp.Minimize(1.5 * s + KAPPA * q), cons)
    prob.solve(solver="CLARABEL")
    return {"cost": float(prob.value), "shed": float(q.value), "price_j2": -float(bal2.dual_value)}


def toy_power():
    """Enumerate the two commitments of the toy and solve each dispatch LP."""
    best = None
    for ug, uo in itertools.product((0, 1), repeat=2):
        s1, s2, so = (cp.Variable(nonneg=True) for _ in range(3))
        pg, po = s1 + s2, so
        cons = [s1 <= 10 * ug, s2 <= 10 * ug, so <= 40 * uo, pg >= 2 * ug, pg <= 20 * ug,
                pg + po == 25.0, cp.abs(pg) <= 50.0]
        cost = 20 * s1 + 40 * s2 + 40.1 * so + 50 * ug + 30 * uo + 100 * ug
        prob = cp.Problem(cp.Minimize(cost), cons)
        prob.solve(solver="CLARABEL")
        if prob.status != "optimal":
            continue
        if best is None or prob.value < best["objective"]:
            best = {"objective": float(prob.value), "u": [ug, uo], "p_gas": float(pg.value)}
    return best


def startup_cost(table, offline):
    """Start-up cost after ``offline`` periods down: the entry with the largest threshold not above it."""
    cost = 0.0
    for thr, c in table:
        if offline >= thr:
            cost = c
    return cost


def trilevel_references(etas):
    from ucgna.data import load_system, scale_loads
    from ucgna.oracle import enumerate_trilevel
    from ucgna.reformulation import assemble_trilevel

    out = {}
    for eg in etas:
        S = scale_loads(load_system("toy2x2"), 1.0, eg)
        tri = assemble_trilevel(S.power, S.gas, S.coupling, S.T)
        res = enumerate_trilevel(tri)
        out[f"{eg:g}"] = {"objective": res.objective, "gas_committed": int(round(res.best.z[0]))}
    return out


def _rounded(obj, digits=7):
    if isinstance(obj, float):
        return round(obj, digits)
    if isinstance(obj, dict):
        return {k: _rounded(v, digits) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_rounded(v, digits) for v in obj]
    return obj


def main():
    gas1_use = 0.5 + 0.8 * 20.0 + 0.002 * 20.0 ** 2
    doc = {
        "two_node_gas": {"4": two_node_gas(4.0), "12": two_node_gas(12.0)},
        "toy_power": toy_power(),
        "toy_gas_mode_a": {f"{eg:g}": toy_gas(eg, gas1_use) for eg in (1.0, 2.0, 3.0)},
        "gas1_use_at_pmax": gas1_use,
        "startup_after_2_off": startup_cost([(1, 100.0), (2, 200.0)], 2),
        "toy_trilevel": trilevel_references((1.0, 1.5, 2.0, 3.0, 4.0)),
    }
    doc = _rounded(doc)
    (HERE / "frozen.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(json.dumps(doc, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
