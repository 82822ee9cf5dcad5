"""Coupling between the power and gas systems.

* heat-rate rows turning GFPP output into gas use,
* bid-selection logic and the marginal bid price ``rho``,
* zonal gas prices,
* bid-validity rows: a committed GFPP must satisfy
  ``alpha_u * rho >= (2 p H2 + H1) * psi`` where ``psi`` is its zonal gas price.

Validity rows depend on gas duals, so this module only describes them
(:class:`ValidityRow`); :mod:`ucgna.reformulation` wires ``psi`` to the
dual variables of the gas balance rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import NONNEG_CONE, ConicProgram, LinearExpr, ModelError, soc

DEFAULT_PRICE_CAP = 200.0


@dataclass(frozen=True)
class HeatRateCurve:
    h0: float
    h1: float
    h2: float = 0.0

    def gas_use(self, p: float, on: float = 1.0) -> float:
        return self.h2 * p * p + self.h1 * p + self.h0 * on

    def marginal(self, p: float) -> float:
        return 2.0 * self.h2 * p + self.h1


@dataclass
class PriceZone:
    id: str
    members: list
    averaging: list | None = None

    @property
    def subset(self) -> list:
        return list(self.averaging) if self.averaging else list(self.members)


@dataclass(frozen=True)
class BidValidityParams:
    alpha_u: float = 1.0
    price_cap: float = DEFAULT_PRICE_CAP


@dataclass(frozen=True)
class GFPPLink:
    generator: str
    bus: str
    junction: str
    zone: str


@dataclass
class CouplingSpec:
    links: list
    curves: dict
    zones: list
    validity: dict = field(default_factory=dict)
    price_cap: float = DEFAULT_PRICE_CAP

    @property
    def gfpp_ids(self) -> list[str]:
        return [lk.generator for lk in self.links]

    def link(self, gid: str) -> GFPPLink:
        for lk in self.links:
            if lk.generator == gid:
                return lk
        raise KeyError(gid)

    def zone(self, zid: str) -> PriceZone:
        for z in self.zones:
            if z.id == zid:
                return z
        raise KeyError(zid)

    def params(self, gid: str) -> BidValidityParams:
        return self.validity.get(gid, BidValidityParams(price_cap=self.price_cap))


def validate_coupling(spec: CouplingSpec, power, gas) -> list[str]:
    out = []
    gens = {g.id: g for g in power.generators}
    buses = {b.id for b in power.buses}
    junctions = {j.id for j in gas.junctions}
    zones = {z.id: z for z in spec.zones}
    for z in spec.zones:
        if not z.subset:
            out.append(f"zone {z.id}: empty averaging subset")
        for j in z.subset:
            if j not in junctions:
                out.append(f"zone {z.id}: unknown junction {j}")
        if z.averaging and not set(z.averaging) <= set(z.members):
            out.append(f"zone {z.id}: averaging subset not within members")
    seen = set()
    for lk in spec.links:
        tag = f"link {lk.generator}"
        if lk.generator in seen:
            out.append(f"{tag}: duplicate")
        seen.add(lk.generator)
        g = gens.get(lk.generator)
        if g is None:
            out.append(f"{tag}: unknown generator")
            continue
        if g.fuel != "gas":
            out.append(f"{tag}: generator fuel is {g.fuel}, not gas")
        if lk.bus not in buses or g.bus != lk.bus:
            out.append(f"{tag}: bus {lk.bus} does not match generator bus {g.bus}")
        if lk.junction not in junctions:
            out.append(f"{tag}: unknown junction {lk.junction}")
        if lk.zone not in zones:
            out.append(f"{tag}: unknown zone {lk.zone}")
        c = spec.curves.get(lk.generator)
        if c is None:
            out.append(f"{tag}: heat-rate curve missing")
        elif c.h2 < 0:
            out.append(f"{tag}: negative quadratic heat-rate coefficient")
    for gid, prm in spec.validity.items():
        if prm.alpha_u <= 0:
            out.append(f"validity {gid}: alpha_u must be positive")
        if prm.price_cap <= 0:
            out.append(f"validity {gid}: price cap must be positive")
    return out


def marginal_bid_price(prices, w) -> float:
    """Telescoping form of the marginal bid price for a selection ladder ``w``."""
    B = len(prices)
    if B == 0:
        return 0.0
    rho = sum(prices[b] * (w[b] - w[b + 1]) for b in range(B - 1))
    return float(rho + prices[-1] * w[-1])


def zonal_price(nodal: dict, zone: PriceZone, t: int | None = None) -> float:
    """Mean nodal price over the zone's averaging subset.

    ``nodal`` maps junction ids (or ``(junction, t)`` pairs when ``t`` is
    given) to prices.
    """
    sub = zone.subset
    if not sub:
        raise ModelError(f"zone {zone.id}: empty averaging subset")
    keys = sub if t is None else [(j, t) for j in sub]
    return float(sum(nodal[k] for k in keys) / len(keys))


def big_m(curve: HeatRateCurve, p_max: float, price_cap: float = DEFAULT_PRICE_CAP) -> float:
    return price_cap * (2.0 * p_max * curve.h2 + curve.h1)


def envelope(curve: HeatRateCurve, p_max: float) -> float:
    """Largest marginal heat rate over the output range."""
    return 2.0 * p_max * curve.h2 + curve.h1


def validity_slack(alpha_u: float, rho: float, p: float, curve: HeatRateCurve, psi: float,
                   u: float = 1.0, M: float = 0.0) -> float:
    return alpha_u * rho + M * (1.0 - u) - curve.marginal(p) * psi


def gas_demand_rows(program: ConicProgram, power, spec: CouplingSpec, ed, gas_vars, T: int) -> dict:
    """Gas use of every GFPP and its link to the junction consumption ``gamma``.

    ``gu >= H2 p^2 + H1 p + H0 u`` is written as a 3-dimensional cone
    ``(e + k, e - k, 2 sqrt(k H2) p)`` with ``e = gu - H1 p - H0 u`` and a
    conditioning constant ``k``; it is tight at optimum because gas cost
    increases with consumption.  Returns ``{(gid, t): gu ref}``.
    """
    links = spec.links
    if not links:
        return {}
    gens = {g.id: g for g in power.generators}
    for lk in links:
        if gens[lk.generator].fuel != "gas":
            raise ModelError(f"link to non-gas generator {lk.generator!r}")
    keys = [(lk.generator, t) for lk in links for t in range(1, T + 1)]
    gb = program.add_block("gu", len(keys), NONNEG_CONE, role="gas")
    gu = {k: gb[i] for i, k in enumerate(keys)}
    quad = [k for k in keys if spec.curves[k[0]].h2 > 0]
    cones = {}
    if quad:
        cb = program.add_block("hr_cone", 3 * len(quad), soc(3), role="gas")
        cones = {k: (cb[3 * i], cb[3 * i + 1], cb[3 * i + 2]) for i, k in enumerate(quad)}
    for (gid, t) in keys:
        c = spec.curves[gid]
        p = ed.p[(gid, t)]
        on = ed.uon[(gid, t)]
        e = gu[(gid, t)] - c.h1 * p - c.h0 * on
        if (gid, t) in cones:
            k = max(1.0, c.h2 * gens[gid].p_max ** 2)
            c0, c1, c2 = cones[(gid, t)]
            program.add_eq(f"hr:{gid}:{t}:0", c0 - e, k)
            program.add_eq(f"hr:{gid}:{t}:1", c1 - e, -k)
            program.add_eq(f"hr:{gid}:{t}:2", c2 - 2.0 * math.sqrt(k * c.h2) * p, 0.0)
        else:
            program.add_ge(f"hr:{gid}:{t}", e, 0.0)
    for t in range(1, T + 1):
        for j in sorted({lk.junction for lk in links}):
            expr = LinearExpr.of(gas_vars.gamma[(j, t)])
            for lk in links:
                if lk.junction == j:
                    expr.add(gu[(lk.generator, t)], -1.0)
            program.add_eq(f"gamma:{j}:{t}", expr, 0.0)
    return gu


def bid_logic_rows(program: ConicProgram, power, gfpp_ids, uc, ed, T: int) -> dict:
    """Bid-selection rows for GFPPs; returns ``{(gid, t): rho expression}``.

    A bid is selected only for a committed unit, carries output only when
    selected, and a higher bid may be selected only when the one below is
    fully used.  ``bidseq`` rows make the ladder order explicit on the
    binaries alone; they are implied by the other rows at integer points.
    """
    rho = {}
    for gid in gfpp_ids:
        g = power.generator(gid)
        prices = [bd.price for bd in g.bids]
        if any(b < a for a, b in zip(prices, prices[1:])):
            raise ModelError(f"generator {gid}: bids not sorted by price")
        B = len(g.bids)
        for t in range(1, T + 1):
            w = [uc.w[(gid, b, t)] for b in range(B)]
            s = [ed.s[(gid, b, t)] for b in range(B)]
            for b, bid in enumerate(g.bids):
                program.add_ge(f"bidw:{gid}:{b}:{t}", bid.quantity * w[b] - s[b], 0.0)
                program.add_ge(f"bidu:{gid}:{b}:{t}", uc.u[(gid, t)] - w[b], 0.0)
                if b + 1 < B:
                    program.add_ge(f"bidfull:{gid}:{b}:{t}", s[b] - bid.quantity * w[b + 1], 0.0)
                    program.add_ge(f"bidseq:{gid}:{b}:{t}", w[b] - w[b + 1], 0.0)
                program.set_bounds(w[b], 0.0, 1.0)
            expr = LinearExpr()
            for b in range(B):
                expr.add(w[b], prices[b])
                if b + 1 < B:
                    expr.add(w[b + 1], -prices[b])
            rho[(gid, t)] = expr
    return rho


@dataclass
class ValidityRow:
    """``alpha_u * rho - M * u - K * psi >= -M`` for one GFPP and period.

    ``psi`` is the mean of the gas balance multipliers over ``junctions`` in
    period ``t``; ``K`` is the marginal heat rate used for the row.
    """
    tag: str
    generator: str
    t: int
    zone: str
    junctions: list
    alpha_u: float
    rho: LinearExpr
    u: object
    K: float
    M: float

    def balance_tags(self) -> list[str]:
        return [f"gbal:{j}:{self.t}" for j in self.junctions]


def bid_validity_rows(power, spec: CouplingSpec, uc, rho: dict, T: int) -> list[ValidityRow]:
    """Describe the validity rows at the upper envelope of the marginal heat rate."""
    rows = []
    for lk in spec.links:
        if not lk.zone:
            raise ModelError(f"GFPP {lk.generator} without pricing zone")
        g = power.generator(lk.generator)
        c = spec.curves[lk.generator]
        prm = spec.params(lk.generator)
        zone = spec.zone(lk.zone)
        K = envelope(c, g.p_max)
        M = big_m(c, g.p_max, prm.price_cap)
        for t in range(1, T + 1):
            rows.append(ValidityRow(f"valid:{lk.generator}:{t}", lk.generator, t, zone.id, zone.subset,
                                    prm.alpha_u, rho[(lk.generator, t)], uc.u[(lk.generator, t)], K, M))
    return rows
