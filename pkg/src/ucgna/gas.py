"""Steady-state gas transmission program with a second-order-cone Weymouth relaxation.

Quantities are consistently scaled and dimensionless; pressures are squared
pressures.  Flow on every arc runs from ``head`` to ``tail``; a pipe needs
``pi_head - pi_tail >= W * phi**2`` and a compressor or valve bounds the
ratio ``pi_tail / pi_head``.

The balance row of junction ``j`` in period ``t`` is tagged ``gbal:{j}:{t}``
and written so that its multiplier is the marginal cost of one more unit of
consumption at ``j``, i.e. the nodal gas price.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances
from .model import (FREE_CONE, NONNEG_CONE, OPTIMAL, ConicProgram, LinearExpr, ModelError, Solution,
                    SolutionError, dual_of, soc)

log = logging.getLogger(__name__)

PIPE, COMPRESSOR, VALVE = "pipe", "compressor", "valve"


@dataclass
class Junction:
    id: str
    pressure_min: float = 0.0
    pressure_max: float = math.inf
    demand: list = field(default_factory=list)
    shed_penalty: float = 130.0
    # (capacity, slope) segments, slopes nondecreasing
    supply: list = field(default_factory=list)
    supply_min: float = 0.0

    def load(self, t: int) -> float:
        return float(self.demand[t - 1]) if t - 1 < len(self.demand) else 0.0

    @property
    def supply_max(self) -> float:
        return float(sum(c for c, _ in self.supply))


@dataclass
class GasEdge:
    id: str
    head: str
    tail: str
    kind: str = PIPE
    weymouth: float = 1.0
    ratio_min: float = 1.0
    ratio_max: float = 1.0


@dataclass
class GasSystem:
    junctions: list
    edges: list

    def junction(self, jid: str) -> Junction:
        for j in self.junctions:
            if j.id == jid:
                return j
        raise KeyError(jid)

    def scaled(self, eta: float) -> "GasSystem":
        js = [Junction(j.id, j.pressure_min, j.pressure_max, [eta * float(v) for v in j.demand], j.shed_penalty,
                       list(j.supply), j.supply_min) for j in self.junctions]
        return GasSystem(js, list(self.edges))

    @property
    def max_penalty(self) -> float:
        return max((j.shed_penalty for j in self.junctions), default=0.0)


def validate_gas(net: GasSystem) -> list[str]:
    out = []
    ids = [j.id for j in net.junctions]
    if len(set(ids)) != len(ids):
        out.append("duplicate junction ids")
    known = set(ids)
    for j in net.junctions:
        tag = f"junction {j.id}"
        if j.pressure_min > j.pressure_max:
            out.append(f"{tag}: pressure_min > pressure_max")
        if j.pressure_min < 0:
            out.append(f"{tag}: negative squared pressure bound")
        slopes = [c for _, c in j.supply]
        if any(b < a for a, b in zip(slopes, slopes[1:])):
            out.append(f"{tag}: supply slopes not nondecreasing")
        if any(cap <= 0 for cap, _ in j.supply):
            out.append(f"{tag}: supply segment with nonpositive capacity")
        if j.supply and not j.shed_penalty > max(slopes):
            out.append(f"{tag}: shed penalty must exceed the largest supply slope")
        if j.supply_min > j.supply_max + 1e-12:
            out.append(f"{tag}: supply_min exceeds total segment capacity")
        if any(d < 0 for d in j.demand):
            out.append(f"{tag}: negative demand")
    eids = [a.id for a in net.edges]
    if len(set(eids)) != len(eids):
        out.append("duplicate gas edge ids")
    for a in net.edges:
        tag = f"gas edge {a.id}"
        if a.head not in known or a.tail not in known:
            out.append(f"{tag}: unknown endpoint")
        if a.kind not in (PIPE, COMPRESSOR, VALVE):
            out.append(f"{tag}: unknown kind {a.kind!r}")
        elif a.kind == PIPE and not a.weymouth > 0:
            out.append(f"{tag}: Weymouth factor must be positive")
        elif a.kind != PIPE:
            if not (0 < a.ratio_min <= a.ratio_max):
                out.append(f"{tag}: ratio bounds must satisfy 0 < min <= max")
            if a.kind == COMPRESSOR and a.ratio_max < 1:
                out.append(f"{tag}: compressor maximum ratio below 1")
    return out


@dataclass
class GasVariables:
    T: int
    seg: dict
    sg: dict
    pi: dict
    phi: dict
    l: dict
    q: dict
    gamma: dict
    wey: dict = field(default_factory=dict)


def build_gas_program(net: GasSystem, gamma=None, T: int = 1, program: ConicProgram | None = None,
                      gfpp_junctions=(), weymouth_scale: float = 1.0) -> tuple[ConicProgram, GasVariables]:
    """Gas dispatch rows and objective.

    Parameters
    ----------
    gamma : dict or None
        Standalone mode: ``{(junction, t): gas use of power plants}`` fixed
        numbers, moved to the balance right-hand side.  Coupled mode: ``None``;
        a nonnegative variable ``gamma`` is declared at every junction in
        ``gfpp_junctions`` for the coupling rows to define.
    program : ConicProgram, optional
        Program to extend (coupled mode); a new one is created otherwise.
    weymouth_scale : float
        Multiplies every Weymouth factor in the cone rows (1 for the model
        itself; slightly above 1 when :func:`solve_gas` restores feasibility).
    """
    known = {j.id for j in net.junctions}
    gamma = dict(gamma or {})
    for (jid, _t), v in gamma.items():
        if jid not in known:
            raise ModelError(f"gas use given at unknown junction {jid!r}")
        if v < -1e-12:
            raise ModelError(f"negative gas use at junction {jid!r}")
    for jid in gfpp_junctions:
        if jid not in known:
            raise ModelError(f"power plant linked to unknown junction {jid!r}")
    P = program if program is not None else ConicProgram("gas")
    periods = range(1, T + 1)

    segkeys = [(j.id, k, t) for j in net.junctions for k in range(len(j.supply)) for t in periods]
    sgkeys = [(j.id, t) for j in net.junctions if j.supply for t in periods]
    dkeys = [(j.id, t) for j in net.junctions for t in periods if j.load(t) > 0]
    pikeys = [(j.id, t) for j in net.junctions for t in periods]
    phikeys = [(a.id, t) for a in net.edges for t in periods]
    pipes = [a for a in net.edges if a.kind == PIPE]
    gj = sorted(set(gfpp_junctions), key=[j.id for j in net.junctions].index)

    def block(name, keys, cone=NONNEG_CONE):
        if not keys:
            return {}
        b = P.add_block(name, len(keys) * (cone.dimension if cone.kind == "second-order" else 1), cone, role="gas")
        if cone.kind == "second-order":
            d = cone.dimension
            return {k: tuple(b[i * d + r] for r in range(d)) for i, k in enumerate(keys)}
        return {k: b[i] for i, k in enumerate(keys)}

    seg = block("g_seg", segkeys)
    sg = block("g_supply", sgkeys)
    pi = block("g_pi", pikeys)
    phi = block("g_phi", phikeys)
    l = block("g_served", dkeys, FREE_CONE)
    q = block("g_shed", dkeys)
    gam = block("g_gamma", [(j, t) for j in gj for t in periods])
    wey = block("g_wey", [(a.id, t) for a in pipes for t in periods], soc(3))

    for j in net.junctions:
        for t in periods:
            for k, (cap, slope) in enumerate(j.supply):
                P.add_objective(slope * seg[(j.id, k, t)])
                P.set_bounds(seg[(j.id, k, t)], 0.0, cap)
            if j.supply:
                P.set_bounds(sg[(j.id, t)], j.supply_min, j.supply_max)
                P.add_eq(f"glink:{j.id}:{t}",
                         sg[(j.id, t)] - LinearExpr.sum(seg[(j.id, k, t)] for k in range(len(j.supply))), 0.0)
            d = j.load(t)
            if d > 0:
                P.add_objective(j.shed_penalty * q[(j.id, t)])
                P.set_bounds(q[(j.id, t)], 0.0, d)
                P.add_eq(f"gshed:{j.id}:{t}", l[(j.id, t)] + q[(j.id, t)], d)
            P.set_bounds(pi[(j.id, t)], j.pressure_min, j.pressure_max)
            # supply - served - plant use = outflow - inflow
            expr = LinearExpr()
            if j.supply:
                expr.add(sg[(j.id, t)])
            if d > 0:
                expr.add(l[(j.id, t)], -1.0)
            for a in net.edges:
                if a.head == j.id:
                    expr.add(phi[(a.id, t)], -1.0)
                if a.tail == j.id:
                    expr.add(phi[(a.id, t)], 1.0)
            rhs = 0.0
            if (j.id, t) in gam:
                expr.add(gam[(j.id, t)], -1.0)
            rhs += gamma.get((j.id, t), 0.0)
            # multiplier of this row = marginal cost of extra consumption at j
            P.add_eq(f"gbal:{j.id}:{t}", expr, rhs)

    for a in net.edges:
        for t in periods:
            ph, pt = pi[(a.head, t)], pi[(a.tail, t)]
            if a.kind == PIPE:
                c0, c1, c2 = wey[(a.id, t)]
                # (d + 1, d - 1, 2 sqrt(W) phi) in SOC  <=>  d >= W phi^2, d = pi_h - pi_t
                P.add_eq(f"wey:{a.id}:{t}:0", c0 - ph + pt, 1.0)
                P.add_eq(f"wey:{a.id}:{t}:1", c1 - ph + pt, -1.0)
                P.add_eq(f"wey:{a.id}:{t}:2", c2 - 2.0 * math.sqrt(a.weymouth * weymouth_scale) * phi[(a.id, t)],
                         0.0)
            else:
                P.add_ge(f"{a.kind}:{a.id}:{t}:min", pt - a.ratio_min * ph, 0.0)
                P.add_ge(f"{a.kind}:{a.id}:{t}:max", a.ratio_max * ph - pt, 0.0)
    return P, GasVariables(T, seg, sg, pi, phi, l, q, gam, wey)


RESTORE_STEPS = (1e-8, 1e-7, 1e-6, 1e-5)


def solve_gas(net: GasSystem, gamma=None, T: int = 1, tolerances: Tolerances | None = None,
              polish: bool = True):
    """Build and solve the standalone program; returns ``(solution, variables, program)``.

    With ``polish`` the pressures are re-chosen for the solved flows (see
    :func:`polish_pressures`).  That fails when a pipe runs at its physical
    limit and the interior-point flow overshoots it by solver noise; the
    program is then re-solved with every Weymouth factor scaled by
    ``1 + eps`` for increasing ``eps`` in ``RESTORE_STEPS`` until the flows
    admit pressures with nonnegative residuals under the true factors.  The
    solution then belongs to the original program and is ``eps``-optimal;
    ``info["weymouth_restore"]`` records the step used.
    """
    from .conic.solve import solve_conic

    P, gv = build_gas_program(net, gamma, T)
    sol = solve_conic(P, tolerances)
    if not polish or sol.status != OPTIMAL or polish_pressures(net, sol, gv):
        return sol, gv, P
    for eps in RESTORE_STEPS:
        P2, gv2 = build_gas_program(net, gamma, T, weymouth_scale=1.0 + eps)
        s2 = solve_conic(P2, tolerances)
        if s2.status == OPTIMAL and polish_pressures(net, s2, gv2):
            s2.info = dict(s2.info, weymouth_restore=eps)
            return s2, gv2, P
    log.warning("pressures could not be polished; Weymouth residuals may be slightly negative")
    return sol, gv, P


def nodal_prices(solution: Solution, net: GasSystem, T: int = 1) -> dict:
    """``{(junction, t): price}`` from the balance-row multipliers."""
    if solution.status != OPTIMAL:
        raise SolutionError(f"nodal prices need an optimal solution, got {solution.status}")
    return {(j.id, t): dual_of(solution, f"gbal:{j.id}:{t}") for j in net.junctions for t in range(1, T + 1)}


def weymouth_residual(solution: Solution, gv: GasVariables, net: GasSystem) -> dict:
    """``{(pipe, t): pi_head - pi_tail - W phi^2}`` at the solution's primal point."""
    out = {}
    for a in net.edges:
        if a.kind != PIPE:
            continue
        for t in range(1, gv.T + 1):
            ph = solution.value(gv.pi[(a.head, t)])
            pt = solution.value(gv.pi[(a.tail, t)])
            f = solution.value(gv.phi[(a.id, t)])
            out[(a.id, t)] = ph - pt - a.weymouth * f * f
    return out


def pressure_drop_residual(pi_head: float, pi_tail: float, weymouth: float, flow: float) -> float:
    return pi_head - pi_tail - weymouth * flow * flow


def polish_pressures(net: GasSystem, solution: Solution, gv: GasVariables) -> bool:
    """Re-choose pressures for the solved flows, minimizing total pipe pressure drop.

    Pressures enter no cost and no balance row, so any pressure vector that
    is feasible for the fixed flows keeps the solution optimal and leaves the
    balance multipliers untouched.  Updates ``solution.x`` in place and
    returns True on success.
    """
    from scipy.optimize import linprog

    jidx = {key: k for k, key in enumerate([(j.id, t) for j in net.junctions for t in range(1, gv.T + 1)])}
    n = len(jidx)
    c = np.zeros(n)
    A_ub, b_ub = [], []
    for a in net.edges:
        for t in range(1, gv.T + 1):
            h, tl = jidx[(a.head, t)], jidx[(a.tail, t)]
            row = np.zeros(n)
            if a.kind == PIPE:
                f = solution.value(gv.phi[(a.id, t)])
                c[h] += 1.0
                c[tl] -= 1.0
                row[h], row[tl] = -1.0, 1.0          # pi_t - pi_h <= -W f^2
                A_ub.append(row)
                b_ub.append(-a.weymouth * f * f)
            else:
                r1 = np.zeros(n)
                r1[h], r1[tl] = a.ratio_min, -1.0    # ratio_min pi_h - pi_t <= 0
                r2 = np.zeros(n)
                r2[h], r2[tl] = -a.ratio_max, 1.0    # pi_t - ratio_max pi_h <= 0
                A_ub += [r1, r2]
                b_ub += [0.0, 0.0]
    bounds = []
    for (jid, t) in jidx:
        j = net.junction(jid)
        bounds.append((j.pressure_min, None if math.isinf(j.pressure_max) else j.pressure_max))
    if not A_ub:
        return True
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=bounds, method="highs")
    if res.status != 0:
        return False
    cols = {r: k for k, r in enumerate(solution.columns)}
    for (jid, t), k in jidx.items():
        solution.x[cols[gv.pi[(jid, t)]]] = res.x[k]
    # keep the auxiliary cone coordinates consistent with the new pressures
    for a in net.edges:
        if a.kind != PIPE:
            continue
        for t in range(1, gv.T + 1):
            d = res.x[jidx[(a.head, t)]] - res.x[jidx[(a.tail, t)]]
            c0, c1, c2 = gv.wey[(a.id, t)]
            solution.x[cols[c0]] = d + 1.0
            solution.x[cols[c1]] = d - 1.0
            solution.x[cols[c2]] = 2.0 * math.sqrt(a.weymouth) * solution.value(gv.phi[(a.id, t)])
    return True


def gas_cost(solution: Solution, gv: GasVariables, net: GasSystem) -> float:
    """Supply cost plus shedding penalty at the solution's primal point."""
    total = 0.0
    for j in net.junctions:
        for t in range(1, gv.T + 1):
            for k, (_, slope) in enumerate(j.supply):
                total += slope * solution.value(gv.seg[(j.id, k, t)])
            if (j.id, t) in gv.q:
                total += j.shed_penalty * solution.value(gv.q[(j.id, t)])
    return total


def shed_amounts(solution: Solution, gv: GasVariables) -> dict:
    return {k: max(0.0, solution.value(v)) for k, v in gv.q.items()}
