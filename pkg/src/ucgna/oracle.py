"""Brute-force reference for the tri-level program.

Every binary point of the leader set is enumerated.  At each point the
dispatch is chosen lexicographically (dispatch cost first, then gas cost
among dispatch-optimal points), the gas multipliers are taken from the
gas program at that dispatch, and the point is kept when some optimal gas
multiplier satisfies the validity rows.  All conic programs here go
through cvxpy so that this route shares no solver code with the
single-level program and branch-and-bound.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .reformulation import TriLevelProgram


class OracleError(RuntimeError):
    pass


@dataclass
class OraclePoint:
    z: np.ndarray
    leader_objective: float
    dispatch_cost: float
    gas_cost: float
    x_p: np.ndarray
    valid: bool
    margin: float


@dataclass
class OracleResult:
    best: OraclePoint | None
    points: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return np.inf if self.best is None else self.best.leader_objective


def _cp():
    try:
        import cvxpy as cp
    except ImportError as exc:  # pragma: no cover
        raise OracleError("the enumeration oracle needs cvxpy") from exc
    return cp


def _rows(cp, expr, rhs, eq):
    out = []
    eq = np.asarray(eq, dtype=bool)
    if eq.any():
        out.append(expr[np.flatnonzero(eq)] == rhs[eq])
    if (~eq).any():
        out.append(expr[np.flatnonzero(~eq)] >= rhs[~eq])
    return out


def _solve(cp, prob, solver):
    try:
        prob.solve(solver=solver)
    except cp.error.SolverError:
        return False
    return prob.status in ("optimal", "optimal_inaccurate")


class LexOracle:
    def __init__(self, tri: TriLevelProgram, solver: str = "CLARABEL", rel_tol: float = 1e-7):
        self.tri = tri
        self.solver = solver
        self.rel_tol = rel_tol

    def _primal(self, cp, z):
        tri = self.tri
        xp = cp.Variable(len(tri.p_cols))
        xg = cp.Variable(len(tri.g_cols))
        cons = []
        if tri.p_nonneg.any():
            cons.append(xp[np.flatnonzero(tri.p_nonneg)] >= 0)
        if tri.g_nonneg.any():
            cons.append(xg[np.flatnonzero(tri.g_nonneg)] >= 0)
        for s, d in tri.g_soc:
            cons.append(cp.SOC(xg[s], xg[s + 1:s + d]))
        cons += _rows(cp, tri.A @ xp, tri.b - tri.B @ z, tri.e_eq)
        cons += _rows(cp, tri.Dp @ xp + tri.Dg @ xg, tri.d, tri.g_eq)
        return xp, xg, cons

    def leader_cost(self, z_bin: np.ndarray):
        """Cheapest completion of the continuous leader columns; ``None`` if the point is outside the set."""
        cp = _cp()
        tri = self.tri
        z = cp.Variable(tri.n_leader)
        cons = [z >= tri.lead_lo, z <= np.where(np.isfinite(tri.lead_hi), tri.lead_hi, 1e12)]
        ints = np.flatnonzero(tri.lead_int)
        cons.append(z[ints] == z_bin[ints])
        if tri.Z.shape[0]:
            cons += _rows(cp, tri.Z @ z, tri.z_rhs, tri.z_eq)
        prob = cp.Problem(cp.Minimize(tri.h_cost @ z), cons)
        if not _solve(cp, prob, self.solver):
            return None
        # snap the binaries and bounds: solver noise on a fixed commitment can
        # make the dispatch program look infeasible
        zv = np.clip(np.asarray(z.value, dtype=float), tri.lead_lo, tri.lead_hi)
        zv[ints] = z_bin[ints]
        return zv, float(tri.h_cost @ zv)

    def evaluate(self, z: np.ndarray) -> OraclePoint | None:
        cp = _cp()
        tri = self.tri
        xp, xg, cons = self._primal(cp, z)
        p1 = cp.Problem(cp.Minimize(tri.c_p @ xp), cons)
        if not _solve(cp, p1, self.solver):
            return None
        v1 = float(p1.value)
        cap = v1 + self.rel_tol * (1.0 + abs(v1))
        p2 = cp.Problem(cp.Minimize(tri.c_g @ xg), cons + [tri.c_p @ xp <= cap])
        if not _solve(cp, p2, self.solver):
            return None
        xbar = np.asarray(xp.value, dtype=float)
        v2 = float(p2.value)
        margin = self._validity_margin(cp, z, xbar, v2)
        return OraclePoint(z, float(tri.h_cost @ z) + v1 + tri.c0, v1, v2, xbar, margin >= -1e-6, margin)

    def _validity_margin(self, cp, z, xbar, v_gas) -> float:
        """Largest uniform slack of the validity rows over optimal gas multipliers at ``xbar``."""
        tri = self.tri
        if tri.E.shape[0] == 0:
            return np.inf
        y = cp.Variable(len(tri.g_tags))
        t = cp.Variable()
        rhs = tri.d - tri.Dp @ xbar
        cons = []
        if (~tri.g_eq).any():
            cons.append(y[np.flatnonzero(~tri.g_eq)] >= 0)
        reduced = tri.c_g - tri.Dg.T @ y
        in_soc = np.zeros(len(tri.g_cols), dtype=bool)
        for s, d in tri.g_soc:
            in_soc[s:s + d] = True
            cons.append(cp.SOC(reduced[s], reduced[s + 1:s + d]))
        nn = np.flatnonzero(tri.g_nonneg & ~in_soc)
        fr = np.flatnonzero(~tri.g_nonneg & ~in_soc)
        if len(nn):
            cons.append(reduced[nn] >= 0)
        if len(fr):
            cons.append(reduced[fr] == 0)
        cons.append(rhs @ y >= v_gas - self.rel_tol * (1.0 + abs(v_gas)))
        cons.append(tri.E @ y + tri.M @ z - tri.h_rhs >= t)
        cons.append(t <= 1.0)
        prob = cp.Problem(cp.Maximize(t), cons)
        if not _solve(cp, prob, self.solver):
            return -np.inf
        return float(t.value)

    def enumerate(self, cap: int = 12) -> OracleResult:
        tri = self.tri
        free = tri.free_binaries
        if len(free) > cap:
            raise OracleError(f"{len(free)} free binaries exceed the enumeration cap of {cap}")
        base = np.where(tri.lead_lo >= tri.lead_hi, tri.lead_lo, 0.0)
        res = OracleResult(None)
        for bits in itertools.product((0.0, 1.0), repeat=len(free)):
            zb = base.copy()
            zb[free] = bits
            lead = self.leader_cost(zb)
            if lead is None:
                continue
            z, _ = lead
            pt = self.evaluate(z)
            if pt is None:
                continue
            res.points.append(pt)
            if pt.valid and (res.best is None or pt.leader_objective < res.best.leader_objective - 1e-9):
                res.best = pt
        return res


def enumerate_trilevel(tri: TriLevelProgram, cap: int = 12, solver: str = "CLARABEL") -> OracleResult:
    return LexOracle(tri, solver).enumerate(cap)
