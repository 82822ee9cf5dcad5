"""The two operating modes compared by the harness.

Mode A (current practice): commit and dispatch the power system without
gas, derive GFPP gas use from the dispatch, clear the gas system with that
use as firm demand, then value the bids that fail the validity test.

Mode B (gas-network aware): solve the weighted single-level program by
Benders decomposition (branch-and-bound when Benders fails) and report the
dispatch and the gas prices that certify validity.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..config import Config
from ..conic.solve import solve_conic
from ..coupling import validity_slack, zonal_price
from ..data import TestSystem, scale_loads
from ..gas import gas_cost, nodal_prices, shed_amounts, solve_gas
from ..model import INFEASIBLE, LIMIT, OPTIMAL
from ..power import build_power_program
from ..reformulation import assemble_trilevel, reformulate
from ..solver.benders import BendersError, BendersSolver
from ..solver.bnb import BranchError, branch_and_bound
from ..solver.preprocess import preprocess_invalid_bids
from .report import CostBreakdown, RunReport, ValidityEntry

log = logging.getLogger(__name__)

ON = 0.5


def _key(*parts) -> str:
    return ":".join(str(p) for p in parts)


def marginal_output_price(g, s_values) -> float:
    """Price of the highest bid with positive output (0 when nothing is produced)."""
    rho = 0.0
    for bid, s in zip(g.bids, s_values):
        if s > 1e-9:
            rho = bid.price
    return rho


def invalid_bid_loss(entries) -> float:
    return float(sum(e.loss for e in entries))


def _commitment_table(system: TestSystem, u, p) -> list:
    zone_of = {lk.generator: lk.zone for lk in system.coupling.links}
    rows = []
    for g in system.power.generators:
        for t in range(1, system.T + 1):
            rows.append({"unit": g.id, "t": t, "fuel": g.fuel, "zone": zone_of.get(g.id, ""),
                         "u": int(round(u[(g.id, t)])), "p": float(p[(g.id, t)])})
    return rows


def _zonal(system: TestSystem, nodal: dict) -> dict:
    return {_key(z.id, t): zonal_price(nodal, z, t) for z in system.coupling.zones for t in range(1, system.T + 1)}


def _validity_entries(system: TestSystem, u, p, rho, zonal) -> list:
    out = []
    for lk in system.coupling.links:
        c = system.coupling.curves[lk.generator]
        au = system.coupling.params(lk.generator).alpha_u
        for t in range(1, system.T + 1):
            if u[(lk.generator, t)] < ON:
                continue
            psi = zonal[_key(lk.zone, t)]
            pt = p[(lk.generator, t)]
            r = rho[(lk.generator, t)]
            out.append(ValidityEntry(lk.generator, t, lk.zone, psi, r, pt, validity_slack(au, r, pt, c, psi)))
    return out


def run_baseline(system: TestSystem, config: Config | None = None, eta_p: float = 1.0,
                 eta_g: float = 1.0) -> RunReport:
    """Mode A on ``system`` (loads already scaled)."""
    cfg = config or Config()
    start = time.perf_counter()
    rep = RunReport(system.name, "A", eta_p, eta_g, None, LIMIT, method="branch_and_bound")
    P, uc, ed = build_power_program(system.power, system.T)
    sol = branch_and_bound(P, cfg.limits, cfg.tolerances)
    rep.objective, rep.gap = sol.objective, (0.0 if sol.status == OPTIMAL else sol.gap)
    rep.iterations = int(sol.info.get("nodes", 0))
    if sol.status not in (OPTIMAL, LIMIT):
        rep.status = sol.status
        rep.diagnostics.append(f"power program {sol.status}")
        rep.wall = time.perf_counter() - start
        return rep
    u = {k: sol.value(v) for k, v in uc.u.items()}
    p = {k: sol.value(v) for k, v in ed.p.items()}
    rho = {}
    gamma: dict = {}
    for lk in system.coupling.links:
        g = system.power.generator(lk.generator)
        c = system.coupling.curves[lk.generator]
        for t in range(1, system.T + 1):
            on = 1.0 if u[(g.id, t)] > ON else 0.0
            rho[(g.id, t)] = marginal_output_price(g, [sol.value(ed.s[(g.id, b, t)]) for b in range(len(g.bids))])
            gamma[(lk.junction, t)] = gamma.get((lk.junction, t), 0.0) + c.gas_use(p[(g.id, t)], on)
    gsol, gv, _ = solve_gas(system.gas, gamma, system.T, cfg.tolerances)
    rep.commitment = _commitment_table(system, u, p)
    if gsol.status != OPTIMAL:
        rep.status = INFEASIBLE
        rep.diagnostics.append(f"gas program {gsol.status} at the scheduled GFPP use")
        rep.wall = time.perf_counter() - start
        return rep
    nodal = nodal_prices(gsol, system.gas, system.T)
    rep.nodal_prices = {_key(j, t): v for (j, t), v in nodal.items()}
    rep.zonal_prices = _zonal(system, nodal)
    rep.shed = {_key(j, t): v for (j, t), v in shed_amounts(gsol, gv).items()}
    rep.validity = _validity_entries(system, u, p, rho, rep.zonal_prices)
    rep.costs = CostBreakdown(sol.objective, gas_cost(gsol, gv, system.gas), invalid_bid_loss(rep.validity))
    rep.status = sol.status
    rep.wall = time.perf_counter() - start
    return rep


def _solve_gna(tri, cfg: Config, log_path=None, dump_dir=None):
    """Leader point, objective, gap, iterations and method for mode B."""
    try:
        st = BendersSolver(tri, cfg, log_path=log_path, dump_dir=dump_dir).solve()
        if st.z is not None:
            return st.z, st.upper, st.gap, st.iteration, "benders", st.status
        log.warning("Benders ended without an incumbent; falling back to branch-and-bound")
    except BendersError as exc:
        log.warning("Benders failed (%s); falling back to branch-and-bound", exc)
    if len(tri.free_binaries) > cfg.limits.max_binaries:
        return None, math.inf, math.inf, 0, "none", INFEASIBLE
    sf = reformulate(tri, cfg.alpha)
    try:
        sol = branch_and_bound(sf, cfg.limits, cfg.tolerances)
    except BranchError:
        return None, math.inf, math.inf, 0, "none", LIMIT
    if sol.status not in (OPTIMAL, LIMIT) or sol.x is None:
        return None, math.inf, math.inf, int(sol.info.get("nodes", 0)), "branch_and_bound", sol.status
    z = sol.x[sf.block_slice("z")].copy()
    return z, sol.objective, (0.0 if sol.status == OPTIMAL else sol.gap), int(sol.info.get("nodes", 0)), \
        "branch_and_bound", sol.status


def run_gna(system: TestSystem, config: Config | None = None, eta_p: float = 1.0, eta_g: float = 1.0,
            log_path=None, dump_dir=None) -> RunReport:
    """Mode B on ``system`` (loads already scaled)."""
    cfg = config or Config()
    start = time.perf_counter()
    rep = RunReport(system.name, "B", eta_p, eta_g, cfg.alpha, LIMIT)
    coupling = system.coupling
    if cfg.price_cap is not None:
        for gid in coupling.gfpp_ids:
            coupling.validity[gid] = replace(coupling.params(gid), price_cap=cfg.price_cap)
    tri = assemble_trilevel(system.power, system.gas, coupling, system.T, cfg.ybar_factor)
    if cfg.preprocess and coupling.links:
        pre = preprocess_invalid_bids(tri, cfg.tolerances)
        tri = pre.program
        rep.eliminated = [list(e) for e in pre.eliminated]
    z, obj, gap, iters, method, status = _solve_gna(tri, cfg, log_path, dump_dir)
    rep.objective, rep.gap, rep.iterations, rep.method = obj, gap, iters, method
    if z is None:
        rep.status = status if status != OPTIMAL else INFEASIBLE
        rep.diagnostics.append("no leader point satisfies the validity rows")
        rep.wall = time.perf_counter() - start
        return rep
    ev = BendersSolver(tri, cfg)
    lo, hi = ev._fix(z)
    sol = solve_conic(ev.inner, cfg.tolerances, lo, hi)
    value, _, yg, _ = ev.dual.solve(z, cfg.tolerances)
    if sol.status != OPTIMAL or value is None:
        rep.status = INFEASIBLE
        rep.diagnostics.append("continuous part could not be re-evaluated at the reported leader point")
        rep.wall = time.perf_counter() - start
        return rep
    xp = sol.x[ev.inner.block_slice("xp")]
    xg = sol.x[ev.inner.block_slice("xg")]
    pidx = {r: k for k, r in enumerate(tri.p_cols)}
    gidx = {r: k for k, r in enumerate(tri.g_cols)}
    uc, ed, gv = tri.meta["uc"], tri.meta["ed"], tri.meta["gas"]
    zmap = {r: float(z[k]) for k, r in enumerate(tri.leader_cols)}
    u = {k: zmap[v] for k, v in uc.u.items()}
    p = {k: float(xp[pidx[v]]) for k, v in ed.p.items()}
    rho = {k: expr.evaluate(zmap) for k, expr in tri.meta["rho"].items()}
    psi_scale = 1.0 / (1.0 - cfg.alpha)
    nodal = {(j.id, t): float(yg[tri.gas_row(f"gbal:{j.id}:{t}")]) * psi_scale
             for j in system.gas.junctions for t in range(1, system.T + 1)}
    rep.nodal_prices = {_key(j, t): v for (j, t), v in nodal.items()}
    rep.zonal_prices = _zonal(system, nodal)
    rep.shed = {_key(j, t): max(0.0, float(xg[gidx[v]])) for (j, t), v in gv.q.items()}
    rep.commitment = _commitment_table(system, u, p)
    rep.validity = _validity_entries(system, u, p, rho, rep.zonal_prices)
    power_cost = float(tri.h_cost @ z + tri.c_p @ xp + tri.c0)
    rep.costs = CostBreakdown(power_cost, float(tri.c_g @ xg), invalid_bid_loss(rep.validity))
    if rep.costs.loss > 1e-6 * max(1.0, rep.costs.total):
        rep.diagnostics.append(f"invalid-bid loss {rep.costs.loss:.6g} in a gas-aware solution")
    rep.status = status
    rep.wall = time.perf_counter() - start
    return rep


def run_scenario(system: TestSystem, mode: str, eta_p: float = 1.0, eta_g: float = 1.0,
                 config: Config | None = None, log_dir=None) -> RunReport:
    """Scale loads and run one mode."""
    scaled = scale_loads(system, eta_p, eta_g)
    if mode == "A":
        return run_baseline(scaled, config, eta_p, eta_g)
    if mode == "B":
        log_path = None
        if log_dir is not None:
            Path(log_dir).mkdir(parents=True, exist_ok=True)
            log_path = Path(log_dir) / f"benders_{eta_p:g}_{eta_g:g}.jsonl"
        return run_gna(scaled, config, eta_p, eta_g, log_path=log_path, dump_dir=log_dir)
    raise ValueError(f"unknown mode {mode!r}; expected 'A' or 'B'")
