"""Unit commitment and DC economic dispatch builders.

Periods are numbered ``1..T``; period 0 holds initial conditions.  The
builders append blocks and tagged rows to a shared :class:`ConicProgram`:

* :func:`build_uc_block` declares the commitment binaries ``u``, ``v+``,
  ``v-`` and the start-up cost ``r`` and emits start-up epigraph, initial
  status, minimum up/down and on/off linking rows;
* :func:`build_ed_block` declares bid outputs, unit outputs, line flows and
  bus angles and emits balance, bid aggregation, output bounds, ramping,
  DC flow, thermal and angle rows.

Row tags used for dual inspection: ``ebal:{bus}:{t}``, ``thermal:{line}:{t}:max``,
``thermal:{line}:{t}:min``, ``dcpf:{line}:{t}``, ``pmin:{unit}:{t}``,
``pmax:{unit}:{t}``, ``rup:{unit}:{t}``, ``rdn:{unit}:{t}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import FREE_CONE, NONNEG_CONE, ConicProgram, LinearExpr, ModelError, VarRef

FUELS = ("gas", "oil", "coal", "hydro", "nuclear", "refuse", "other")


@dataclass(frozen=True)
class Bid:
    price: float
    quantity: float


@dataclass
class Generator:
    id: str
    bus: str
    fuel: str = "other"
    no_load_cost: float = 0.0
    # (offline periods threshold, start-up cost), thresholds increasing
    startup: list = field(default_factory=list)
    p_min: float = 0.0
    p_max: float = 0.0
    ramp_down: float = math.inf
    ramp_up: float = math.inf
    initial_status: int = 0
    initial_output: float = 0.0
    min_up: int = 1
    min_down: int = 1
    forced_on: int = 0
    forced_off: int = 0
    bids: list = field(default_factory=list)


@dataclass
class Bus:
    id: str
    theta_min: float = -math.pi
    theta_max: float = math.pi
    load: list = field(default_factory=list)

    def demand(self, t: int) -> float:
        return float(self.load[t - 1]) if t - 1 < len(self.load) else 0.0


@dataclass
class Line:
    id: str
    head: str
    tail: str
    susceptance: float
    limit: float
    angle_diff: float = math.pi / 2


@dataclass
class PowerSystem:
    buses: list
    lines: list
    generators: list
    reference_bus: str | None = None

    def bus(self, bid: str) -> Bus:
        for b in self.buses:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def generator(self, gid: str) -> Generator:
        for g in self.generators:
            if g.id == gid:
                return g
        raise KeyError(gid)

    def scaled(self, eta: float) -> "PowerSystem":
        buses = [Bus(b.id, b.theta_min, b.theta_max, [eta * float(v) for v in b.load]) for b in self.buses]
        return PowerSystem(buses, list(self.lines), list(self.generators), self.reference_bus)


def validate_network(net: PowerSystem) -> list[str]:
    """Return human-readable violations of the power data invariants."""
    out = []
    bus_ids = [b.id for b in net.buses]
    if len(set(bus_ids)) != len(bus_ids):
        out.append("duplicate bus ids")
    known = set(bus_ids)
    for b in net.buses:
        if b.theta_min > b.theta_max:
            out.append(f"bus {b.id}: theta_min > theta_max")
    for ln in net.lines:
        if ln.head not in known or ln.tail not in known:
            out.append(f"line {ln.id}: unknown endpoint")
        if not ln.limit > 0:
            out.append(f"line {ln.id}: thermal limit must be positive")
        if not ln.angle_diff > 0:
            out.append(f"line {ln.id}: angle difference limit must be positive")
        if ln.susceptance == 0:
            out.append(f"line {ln.id}: zero susceptance")
    if net.reference_bus is not None and net.reference_bus not in known:
        out.append(f"reference bus {net.reference_bus} unknown")
    ids = [g.id for g in net.generators]
    if len(set(ids)) != len(ids):
        out.append("duplicate generator ids")
    for g in net.generators:
        tag = f"generator {g.id}"
        if g.bus not in known:
            out.append(f"{tag}: unknown bus {g.bus}")
        if g.fuel not in FUELS:
            out.append(f"{tag}: unknown fuel {g.fuel!r}")
        if g.p_min > g.p_max:
            out.append(f"{tag}: p_min > p_max")
        if g.p_min < 0:
            out.append(f"{tag}: negative p_min")
        if g.initial_status not in (0, 1):
            out.append(f"{tag}: initial status must be 0 or 1")
        thresholds = [h for h, _ in g.startup]
        costs = [c for _, c in g.startup]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            out.append(f"{tag}: start-up thresholds not increasing")
        if any(b < a for a, b in zip(costs, costs[1:])):
            out.append(f"{tag}: start-up costs not nondecreasing")
        if any(h < 1 for h in thresholds):
            out.append(f"{tag}: start-up threshold below 1")
        if not g.bids:
            out.append(f"{tag}: bid ladder missing")
            continue
        prices = [b.price for b in g.bids]
        if any(b < a for a, b in zip(prices, prices[1:])):
            out.append(f"{tag}: bids not sorted by price")
        if any(not b.quantity > 0 for b in g.bids):
            out.append(f"{tag}: bid quantity must be positive")
        if any(not math.isfinite(b.price) for b in g.bids):
            out.append(f"{tag}: non-finite bid price")
        if sum(b.quantity for b in g.bids) < g.p_max - 1e-9:
            out.append(f"{tag}: bid quantities do not cover p_max")
        if min(g.min_up, g.min_down) < 1:
            out.append(f"{tag}: minimum up/down times must be >= 1")
    # connectivity (warning-level; reported as a diagnostic string)
    if net.buses:
        adj = {b: set() for b in known}
        for ln in net.lines:
            if ln.head in adj and ln.tail in adj:
                adj[ln.head].add(ln.tail)
                adj[ln.tail].add(ln.head)
        seen, stack = set(), [bus_ids[0]]
        while stack:
            b = stack.pop()
            if b not in seen:
                seen.add(b)
                stack.extend(adj[b] - seen)
        if len(seen) != len(known):
            out.append("warning: power network is not connected")
    return out


def check_horizon(net: PowerSystem, T: int) -> None:
    if T < 1:
        raise ModelError("horizon must be at least one period")
    for g in net.generators:
        if g.forced_on + g.forced_off >= T and (g.forced_on or g.forced_off):
            raise ModelError(f"generator {g.id}: forced status window {g.forced_on + g.forced_off} "
                             f"reaches the horizon T={T}")


@dataclass
class UCVariables:
    units: list
    T: int
    u: dict
    vp: dict
    vm: dict
    r: dict
    w: dict = field(default_factory=dict)

    def binaries(self) -> list[VarRef]:
        out = []
        for d in (self.u, self.vp, self.vm, self.w):
            out.extend(d.values())
        return out


@dataclass
class EDVariables:
    T: int
    s: dict
    p: dict
    f: dict
    theta: dict
    uon: dict = field(default_factory=dict)


def _index(keys):
    return {k: i for i, k in enumerate(keys)}


def build_uc_block(program: ConicProgram, net: PowerSystem, T: int, gfpp_ids=()) -> UCVariables:
    """Commitment binaries, start-up costs and commitment logic rows.

    Bid-selection binaries ``w`` are declared here for the units listed in
    ``gfpp_ids`` so that all leader variables live in one place; their rows
    are emitted by :func:`ucgna.coupling.bid_logic_rows`.
    """
    check_horizon(net, T)
    units = [g.id for g in net.generators]
    keys = [(g, t) for g in units for t in range(1, T + 1)]
    ix = _index(keys)
    ub = program.add_block("u", len(keys), NONNEG_CONE, integer=True, role="leader")
    vpb = program.add_block("vp", len(keys), NONNEG_CONE, integer=True, role="leader")
    vmb = program.add_block("vm", len(keys), NONNEG_CONE, integer=True, role="leader")
    rb = program.add_block("r", len(keys), NONNEG_CONE, role="leader")
    u = {k: ub[i] for k, i in ix.items()}
    vp = {k: vpb[i] for k, i in ix.items()}
    vm = {k: vmb[i] for k, i in ix.items()}
    r = {k: rb[i] for k, i in ix.items()}
    wkeys = [(g.id, b, t) for g in net.generators if g.id in set(gfpp_ids)
             for b in range(len(g.bids)) for t in range(1, T + 1)]
    w = {}
    if wkeys:
        wb = program.add_block("w", len(wkeys), NONNEG_CONE, integer=True, role="leader")
        w = {k: wb[i] for i, k in enumerate(wkeys)}

    for g in net.generators:
        gid = g.id
        u0 = int(g.initial_status)

        def U(t, gid=gid, u0=u0):
            # u at period t as an expression; t <= 0 is the initial status
            return LinearExpr.of(u[(gid, t)]) if t >= 1 else LinearExpr(constant=u0 if t == 0 else 0.0)

        for t in range(1, T + 1):
            program.add_objective(g.no_load_cost * u[(gid, t)] + r[(gid, t)])
            # start-up cost epigraph; look-back clipped at period 0
            for h, (thr, cost) in enumerate(g.startup):
                expr = LinearExpr.of(u[(gid, t)])
                for n in range(1, int(thr) + 1):
                    if t - n < 0:
                        break
                    expr = expr - U(t - n)
                program.add_ge(f"su:{gid}:{t}:{h}", r[(gid, t)] - cost * expr, 0.0)
            # on/off/start/stop linking
            program.add_eq(f"logic:{gid}:{t}", vp[(gid, t)] - vm[(gid, t)] - U(t) + U(t - 1), 0.0)
            program.add_le(f"excl:{gid}:{t}", vp[(gid, t)] + vm[(gid, t)], 1.0)
            program.set_bounds(u[(gid, t)], 0.0, 1.0)
            program.set_bounds(vp[(gid, t)], 0.0, 1.0)
            program.set_bounds(vm[(gid, t)], 0.0, 1.0)
        # initial status window; transitions are fixed wherever both ends are
        forced = g.forced_on + g.forced_off
        for t in range(1, min(T, forced) + 1):
            program.fix(u[(gid, t)], u0)
        for t in range(1, T + 1):
            if t - 1 > forced:
                break
            if t <= forced:
                program.fix(vp[(gid, t)], 0.0)
                program.fix(vm[(gid, t)], 0.0)
            elif u0 == 0:
                program.fix(vm[(gid, t)], 0.0)
            else:
                program.fix(vp[(gid, t)], 0.0)
        # minimum up time
        for t in range(max(g.min_up, g.forced_on + 1), T + 1):
            window = [vp[(gid, s)] for s in range(t - g.min_up + 1, t + 1) if s >= 1]
            program.add_ge(f"minup:{gid}:{t}", u[(gid, t)] - LinearExpr.sum(window), 0.0)
        # minimum down time, as printed: start-ups in (t - tau, t] need u_{t - tau} = 0
        for t in range(max(g.min_down, g.forced_off + 1), T + 1):
            window = [vp[(gid, s)] for s in range(t - g.min_down + 1, t + 1) if s >= 1]
            program.add_ge(f"mindn:{gid}:{t}", 1.0 - U(t - g.min_down) - LinearExpr.sum(window), 0.0)
    return UCVariables(units, T, u, vp, vm, r, w)


def build_ed_block(program: ConicProgram, net: PowerSystem, T: int, uc: UCVariables,
                   gfpp_ids=()) -> EDVariables:
    """Dispatch variables and rows.  GFPP bid bounds are left to the coupling rows."""
    gfpp = set(gfpp_ids)
    skeys = [(g.id, b, t) for g in net.generators for b in range(len(g.bids)) for t in range(1, T + 1)]
    pkeys = [(g.id, t) for g in net.generators for t in range(1, T + 1)]
    fkeys = [(ln.id, t) for ln in net.lines for t in range(1, T + 1)]
    tkeys = [(b.id, t) for b in net.buses for t in range(1, T + 1)]
    for g in net.generators:
        if not g.bids:
            raise ModelError(f"generator {g.id}: bid ladder missing")
    sb = program.add_block("s_e", len(skeys), NONNEG_CONE, role="power")
    pb = program.add_block("p", len(pkeys), NONNEG_CONE, role="power")
    s = {k: sb[i] for i, k in enumerate(skeys)}
    p = {k: pb[i] for i, k in enumerate(pkeys)}
    f, theta = {}, {}
    if fkeys:
        fb = program.add_block("f", len(fkeys), FREE_CONE, role="power")
        f = {k: fb[i] for i, k in enumerate(fkeys)}
    thb = program.add_block("theta", len(tkeys), FREE_CONE, role="power")
    theta = {k: thb[i] for i, k in enumerate(tkeys)}
    uon = {}
    gkeys = [(g.id, t) for g in net.generators if g.id in gfpp for t in range(1, T + 1)]
    if gkeys:
        ob = program.add_block("uon", len(gkeys), NONNEG_CONE, role="power")
        uon = {k: ob[i] for i, k in enumerate(gkeys)}

    for g in net.generators:
        for t in range(1, T + 1):
            for b, bid in enumerate(g.bids):
                program.add_objective(bid.price * s[(g.id, b, t)])
                if g.id not in gfpp:
                    program.set_bounds(s[(g.id, b, t)], 0.0, bid.quantity)

    for t in range(1, T + 1):
        for bus in net.buses:
            expr = LinearExpr()
            for g in net.generators:
                if g.bus == bus.id:
                    expr.add(p[(g.id, t)])
            for ln in net.lines:
                if ln.tail == bus.id:
                    expr.add(f[(ln.id, t)], -1.0)
                if ln.head == bus.id:
                    expr.add(f[(ln.id, t)], 1.0)
            program.add_eq(f"ebal:{bus.id}:{t}", expr, bus.demand(t))
            program.set_bounds(theta[(bus.id, t)], bus.theta_min, bus.theta_max)
        if net.reference_bus is not None:
            program.fix(theta[(net.reference_bus, t)], 0.0)

    for g in net.generators:
        gid = g.id
        for t in range(1, T + 1):
            pt = p[(gid, t)]
            ut = uc.u[(gid, t)]
            program.add_eq(f"bid:{gid}:{t}", pt - LinearExpr.sum(s[(gid, b, t)] for b in range(len(g.bids))), 0.0)
            program.add_ge(f"pmin:{gid}:{t}", pt - g.p_min * ut, 0.0)
            program.add_ge(f"pmax:{gid}:{t}", g.p_max * ut - pt, 0.0)
            prev_p = LinearExpr.of(p[(gid, t - 1)]) if t > 1 else LinearExpr(constant=g.initial_output)
            prev_u = LinearExpr.of(uc.u[(gid, t - 1)]) if t > 1 else LinearExpr(constant=g.initial_status)
            if math.isfinite(g.ramp_up):
                program.add_ge(f"rup:{gid}:{t}", g.ramp_up * prev_u + g.p_max * uc.vp[(gid, t)] - pt + prev_p, 0.0)
            if math.isfinite(g.ramp_down):
                program.add_ge(f"rdn:{gid}:{t}", g.ramp_down * prev_u + g.p_min * uc.vm[(gid, t)] - prev_p + pt, 0.0)
            if gid in gfpp:
                program.add_ge(f"uon:{gid}:{t}:lo", uon[(gid, t)] - ut, 0.0)
                program.add_ge(f"uon:{gid}:{t}:hi", ut - uon[(gid, t)], 0.0)

    for ln in net.lines:
        for t in range(1, T + 1):
            ft = f[(ln.id, t)]
            dth = theta[(ln.head, t)] - theta[(ln.tail, t)]
            program.add_eq(f"dcpf:{ln.id}:{t}", ft + ln.susceptance * dth, 0.0)
            program.add_le(f"thermal:{ln.id}:{t}:max", ft, ln.limit)
            program.add_ge(f"thermal:{ln.id}:{t}:min", ft, -ln.limit)
            program.add_le(f"adiff:{ln.id}:{t}:max", dth, ln.angle_diff)
            program.add_ge(f"adiff:{ln.id}:{t}:min", dth, -ln.angle_diff)
    return EDVariables(T, s, p, f, theta, uon)


def dc_flow(susceptance: float, theta_head: float, theta_tail: float) -> float:
    """Line flow of the DC approximation."""
    return -susceptance * (theta_head - theta_tail)


def trajectory_violations(g: Generator, u) -> list[str]:
    """Check a commitment trajectory ``u[0..T-1]`` (periods 1..T) without building rows.

    Start-ups are read off the trajectory and counted over the same look-back
    windows the minimum up/down rows use, including their horizon limits.
    """
    T = len(u)
    full = [int(g.initial_status)] + [int(round(v)) for v in u]
    out = []
    forced = g.forced_on + g.forced_off
    for t in range(1, min(T, forced) + 1):
        if full[t] != g.initial_status:
            out.append(f"period {t}: initial status window violated")
    starts = {t for t in range(1, T + 1) if full[t] == 1 and full[t - 1] == 0}

    def count(lo, hi):
        return sum(1 for k in range(lo, hi + 1) if k in starts)

    for t in range(max(g.min_up, g.forced_on + 1), T + 1):
        if count(t - g.min_up + 1, t) > full[t]:
            out.append(f"period {t}: minimum up time {g.min_up} violated")
    for t in range(max(g.min_down, g.forced_off + 1), T + 1):
        if count(t - g.min_down + 1, t) > 1 - full[t - g.min_down]:
            out.append(f"period {t}: minimum down time {g.min_down} violated")
    return out


def build_power_program(net: PowerSystem, T: int = 1, name: str = "uc_ed"):
    """Commitment and dispatch with no gas coupling; returns ``(program, uc, ed)``.

    Every bid, GFPP bids included, is bounded by its quantity.
    """
    P = ConicProgram(name)
    uc = build_uc_block(P, net, T)
    ed = build_ed_block(P, net, T, uc)
    return P, uc, ed
