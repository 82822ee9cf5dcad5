"""Repair heuristic for leader points that fail only the bid-validity rows.

The GFPP whose validity row is most violated (judged at the gas prices of
the evaluated point) is decommitted together with its bid ladder, the
remaining leader columns are completed to the nearest point of the leader
set, and the result is evaluated.  Repeats until a valid point is found or
no GFPP is left to switch off.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

log = logging.getLogger(__name__)


def validity_slacks(tri, z, yg) -> np.ndarray:
    """Slack of every validity row at ``z`` with unscaled gas multipliers ``yg``."""
    return tri.E @ yg + tri.M @ z - tri.h_rhs


def _row_columns(tri, row) -> list[int]:
    cols = [tri.leader_index(row.u)]
    cols += [tri.leader_index(ref) for ref in row.rho.terms]
    return cols


def nearest_leader_point(tri, z, lo, hi):
    """Leader point within ``[lo, hi]`` closest to ``z`` in Hamming distance (ties by leader cost)."""
    n = tri.n_leader
    fb = tri.lead_int
    c = np.where(fb, np.where(np.round(z) > 0.5, -1.0, 1.0), 0.0)
    c = c + 1e-6 * tri.h_cost / max(1.0, float(np.abs(tri.h_cost).max(initial=0.0)))
    cons = []
    if tri.Z.shape[0]:
        cons.append(LinearConstraint(tri.Z, tri.z_rhs, np.where(tri.z_eq, tri.z_rhs, np.inf)))
    res = milp(c, constraints=cons, bounds=Bounds(lo, hi), integrality=fb.astype(int),
               options={"disp": False})
    if res.status != 0 or res.x is None:
        return None
    out = res.x[:n].copy()
    out[fb] = np.round(out[fb])
    return out


def repair_heuristic(solver, z, res, state, fh=None):
    """Switch off GFPPs until the validity rows hold; offers any valid point as incumbent.

    Returns the repaired leader point, ``z`` itself when no row is violated
    at the multipliers of ``res``, or ``None``.
    """
    tri = solver.tri
    if res.yg is None:
        return None
    z = np.asarray(z, dtype=float).copy()
    # phase-1 multipliers carry the gas weight
    unscale = 1.0 / (1.0 - solver.alpha)
    yg = res.yg * unscale
    if tri.E.shape[0] == 0 or validity_slacks(tri, z, yg).min() >= 0:
        return z
    lo, hi = tri.lead_lo.copy(), tri.lead_hi.copy()
    for _ in range(len(tri.validity)):
        slack = validity_slacks(tri, z, yg)
        order = np.argsort(slack, kind="stable")
        k = next((int(i) for i in order if slack[i] < 0 and hi[tri.leader_index(tri.validity[i].u)] > 0), None)
        if k is None:
            return None
        for j in _row_columns(tri, tri.validity[k]):
            if lo[j] > 0:
                return None      # the unit is forced on
            hi[j] = 0.0
        z2 = nearest_leader_point(tri, z, lo, hi)
        if z2 is None:
            return None
        r2 = solver.evaluate(z2)
        if r2.dispatch_ok:
            state.cuts.append(solver.optimality_cut(r2.yp, r2.yg, state.iteration, "heuristic"))
        if r2.feasible:
            solver.offer(state, z2, r2, fh, source="heuristic")
            return z2
        if not r2.dispatch_ok:
            return None
        z, yg = z2, r2.yg * unscale
    return None
