"""Elimination of bids that can never pass the bid-validity test.

Solving the gas program without any GFPP consumption gives nodal prices
that bound the zonal prices from below.  A bid whose price satisfies
``alpha_u * beta_b < (2 p_min H2 + H1) * psi_lb`` can never be the
marginal bid of a valid commitment.

Because bids are sorted by price the eliminated bids of a unit form a
prefix ``0..k-1``.  Fixing their selection variables to zero would also
forbid the higher bids (a higher bid is only selected above a fully used
lower one), so the restriction written into the leader set is:

* ``k == B``: every bid of the unit is off in that period;
* otherwise: ``w_b = w_k`` for ``b < k``, i.e. an eliminated bid is only
  selected together with the first bid that may still be marginal.

Both restrictions keep every valid leader point.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..config import Tolerances
from ..coupling import zonal_price
from ..gas import nodal_prices, solve_gas
from ..model import OPTIMAL
from ..reformulation import TriLevelProgram


class PreprocessError(RuntimeError):
    pass


@dataclass
class PreprocessResult:
    eliminated: list                     # (generator, bid index, period)
    psi_lb: dict                         # (zone, period) -> price bound
    program: TriLevelProgram
    fixed_units: list = field(default_factory=list)   # (generator, period) with every bid eliminated

    @property
    def count(self) -> int:
        return len(self.eliminated)


def zonal_price_bounds(gas, coupling, T: int, tolerances: Tolerances | None = None) -> dict:
    """Zonal prices of the gas program with no GFPP consumption."""
    sol, _, _ = solve_gas(gas, None, T, tolerances, polish=False)
    if sol.status != OPTIMAL:
        raise PreprocessError(f"gas program without GFPP demand is {sol.status}")
    nodal = nodal_prices(sol, gas, T)
    return {(z.id, t): zonal_price(nodal, z, t) for z in coupling.zones for t in range(1, T + 1)}


def invalid_bids(power, coupling, psi_lb: dict, T: int) -> list:
    """Bids failing the test at the price bound, as ``(generator, bid, period)``."""
    out = []
    for lk in coupling.links:
        g = power.generator(lk.generator)
        c = coupling.curves[lk.generator]
        au = coupling.params(lk.generator).alpha_u
        floor = 2.0 * g.p_min * c.h2 + c.h1
        for t in range(1, T + 1):
            psi = psi_lb[(lk.zone, t)]
            for b, bid in enumerate(g.bids):
                if au * bid.price < floor * psi:
                    out.append((lk.generator, b, t))
    return out


def preprocess_invalid_bids(tri: TriLevelProgram, tolerances: Tolerances | None = None) -> PreprocessResult:
    """Restrict the leader set of ``tri`` using bids that can never be valid."""
    power, gas, coupling, T = (tri.meta[k] for k in ("power", "gas_system", "coupling", "T"))
    uc = tri.meta["uc"]
    psi_lb = zonal_price_bounds(gas, coupling, T, tolerances)
    elim = invalid_bids(power, coupling, psi_lb, T)
    by_unit: dict = {}
    for gid, b, t in elim:
        by_unit.setdefault((gid, t), []).append(b)
    hi = tri.lead_hi.copy()
    rows, tags = [], []
    fixed = []
    for (gid, t), bids in sorted(by_unit.items()):
        nb = len(power.generator(gid).bids)
        k = len(bids)
        if sorted(bids) != list(range(k)):
            raise PreprocessError(f"eliminated bids of {gid} are not a price prefix")
        if k == nb:
            for b in range(nb):
                hi[tri.leader_index(uc.w[(gid, b, t)])] = 0.0
            fixed.append((gid, t))
            continue
        jk = tri.leader_index(uc.w[(gid, k, t)])
        for b in range(k):
            row = np.zeros(tri.n_leader)
            row[tri.leader_index(uc.w[(gid, b, t)])] = 1.0
            row[jk] = -1.0
            rows.append(row)
            tags.append(f"pre:{gid}:{b}:{t}")
    out = tri.with_leader_bounds(tri.lead_lo, np.maximum(hi, tri.lead_lo))
    if rows:
        out = out.with_extra_z_rows(sp.csr_matrix(np.array(rows)), np.zeros(len(rows)),
                                    np.ones(len(rows), dtype=bool), tags)
    return PreprocessResult(elim, psi_lb, out, fixed)
