"""Benders decomposition of the single-level weighted program.

The master holds the leader columns ``z`` and one epigraph column
``theta``; the subproblem at a binary master point ``z_hat`` is the
continuous part of the single-level program.  That continuous part has no
strict interior (strong duality plus complementarity), so it is evaluated
in two well-posed phases:

1. the weighted dispatch + gas program with ``z`` fixed gives its value
   ``v`` and multipliers ``(y_p, y_g)``;
2. the dual of the same program, with the validity rows at ``z_hat`` and
   the ``ybar`` caps, is maximized.  The point is feasible iff the maximum
   reaches ``v``.

Cuts
----
* optimality: ``theta >= y_p'(b - B z) + y_g'd`` from phase 1.  The dual
  feasible set does not depend on ``z``, so the cut is valid everywhere.
* feasibility: an elastic program (every row relaxed by nonnegative
  slack) gives ``coef'z >= rhs``.  Points without any dispatch use the
  dispatch + gas rows alone, which yields capacity-type cuts; points that
  fail only validity use the full continuous part.  When the cut does not
  separate ``z_hat`` a no-good cut on the free binaries is used.
* perturbation: an extra optimality cut at ``(1 - w) z_hat + w z_core``.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

from ..config import Config
from ..conic.solve import solve_conic
from ..model import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED
from ..reformulation import DualTemplate, ElasticTemplate, TriLevelProgram, inner_program, reformulate

log = logging.getLogger(__name__)

THETA_FLOOR = -1e9


class BendersError(RuntimeError):
    pass


@dataclass
class Cut:
    """``coef' z + theta_coef * theta >= rhs``."""
    kind: str
    coef: np.ndarray
    rhs: float
    theta_coef: float = 0.0
    iteration: int = 0

    def violation(self, z, theta=0.0) -> float:
        return float(self.rhs - self.coef @ z - self.theta_coef * theta)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "iteration": self.iteration, "rhs": self.rhs, "theta": self.theta_coef,
                "coef": {int(j): float(v) for j, v in enumerate(self.coef) if v != 0.0}}


@dataclass
class SubproblemResult:
    feasible: bool
    value: float = np.inf          # weighted dispatch + gas cost
    yp: np.ndarray | None = None
    yg: np.ndarray | None = None
    dispatch_ok: bool = True       # phase 1 solved
    validity_gap: float = 0.0      # v - max dual objective under validity


@dataclass
class BendersState:
    lower: float = -np.inf
    upper: float = np.inf
    z: np.ndarray | None = None
    iteration: int = 0
    cuts: list = field(default_factory=list)
    history: list = field(default_factory=list)
    status: str = LIMIT
    wall: float = 0.0
    seen: set = field(default_factory=set)

    @property
    def gap(self) -> float:
        if not np.isfinite(self.upper):
            return np.inf
        return max(0.0, (self.upper - self.lower) / max(1.0, abs(self.upper)))

    @property
    def objective(self) -> float:
        return self.upper


class BendersSolver:
    """Single-subproblem Benders loop over the leader columns of a tri-level program."""

    def __init__(self, tri: TriLevelProgram, config: Config | None = None, ybar: float | None = None,
                 log_path=None, dump_dir=None):
        self.tri = tri
        self.cfg = config or Config()
        self.alpha = self.cfg.alpha
        self.tol = self.cfg.tolerances
        self.ybar = tri.default_ybar() if ybar is None else float(ybar)
        self.inner = inner_program(tri, self.alpha)
        self.zs = self.inner.block_slice("z")
        self.dual = DualTemplate(tri, self.alpha, self.ybar, validity=True)
        self._elastic = None
        self.dispatch_elastic = ElasticTemplate(self.inner)
        self.free = tri.free_binaries
        self.log_path = Path(log_path) if log_path else None
        self.dump_dir = Path(dump_dir) if dump_dir else None
        self.h = self.alpha * tri.h_cost
        self.c0 = self.alpha * tri.c0

    @property
    def elastic(self) -> ElasticTemplate:
        if self._elastic is None:
            self._elastic = ElasticTemplate(reformulate(self.tri, self.alpha, self.ybar))
        return self._elastic

    # -- subproblem ------------------------------------------------------

    def _fix(self, z):
        lo, hi = self.inner.lower.copy(), self.inner.upper.copy()
        lo[self.zs] = hi[self.zs] = z
        return lo, hi

    def phase_one(self, z, strict=True):
        lo, hi = self._fix(z)
        sol = solve_conic(self.inner, self.tol, lo, hi)
        if sol.status != OPTIMAL:
            if strict and sol.status != INFEASIBLE:
                # an unresolved subproblem cannot be cut off safely
                raise BendersError(f"subproblem ended {sol.status}: {sol.info.get('error', '')}")
            return None
        ne = len(self.tri.e_tags)
        return sol.objective, sol.y[:ne].copy(), sol.y[ne:].copy()

    def optimality_cut(self, yp, yg, iteration=0, kind="optimality") -> Cut:
        tri = self.tri
        # theta >= yp'(b - B z) + yg'd
        coef = np.asarray(tri.B.T @ yp).ravel()
        return Cut(kind, coef, float(yp @ tri.b + yg @ tri.d), 1.0, iteration)

    def evaluate(self, z) -> SubproblemResult:
        z = np.asarray(z, dtype=float)
        p1 = self.phase_one(z)
        if p1 is None:
            return SubproblemResult(False, dispatch_ok=False)
        v, yp, yg = p1
        if not self.dual.validity:
            return SubproblemResult(True, v, yp, yg)
        best, _, _, dsol = self.dual.solve(z, self.tol)
        if best is None:
            if dsol.status not in (INFEASIBLE, UNBOUNDED):
                raise BendersError(f"validity subproblem ended {dsol.status}")
            return SubproblemResult(False, v, yp, yg, validity_gap=np.inf)
        gap = v - best
        ok = gap <= 1e-6 * (1.0 + abs(v))
        return SubproblemResult(ok, v, yp, yg, validity_gap=max(gap, 0.0))

    def feasibility_cut(self, z, iteration=0, dispatch=False) -> Cut:
        """Elastic cut from the dispatch + gas rows (``dispatch``) or from the full continuous part."""
        template = self.dispatch_elastic if dispatch else self.elastic
        viol, coef, rhs = template.solve(z, self.tol)
        if viol is not None and viol > 1e-7:
            scale = float(np.max(np.abs(coef))) if coef.size else 0.0
            if scale > 1e-9:
                cut = Cut("feasibility", coef / scale, rhs / scale, 0.0, iteration)
                if cut.violation(z) > 1e-6:
                    return cut
        return self.no_good(z, iteration)

    def no_good(self, z, iteration=0) -> Cut:
        coef = np.zeros(self.tri.n_leader)
        zb = np.round(z[self.free])
        coef[self.free] = np.where(zb > 0.5, -1.0, 1.0)
        # sum_{z_hat=1} (1 - z) + sum_{z_hat=0} z >= 1
        return Cut("no_good", coef, float(1.0 - zb.sum()), 0.0, iteration)

    def core_point(self, z):
        tri = self.tri
        core = np.where(tri.lead_lo >= tri.lead_hi, tri.lead_lo, self.cfg.core_point)
        core[~tri.lead_int] = z[~tri.lead_int]
        w = self.cfg.core_weight
        return (1.0 - w) * z + w * core

    # -- master ----------------------------------------------------------

    def _theta_floor(self) -> float:
        """Inner value minimized over the box of leader columns: a valid lower bound for theta."""
        sol = solve_conic(self.inner, self.tol)
        if sol.status == OPTIMAL:
            return sol.objective - 1e-6 * (1.0 + abs(sol.objective))
        return THETA_FLOOR

    def solve_master(self, state: BendersState, theta_lo: float):
        tri = self.tri
        n = tri.n_leader
        c = np.concatenate([self.h, [1.0]])
        cons = []
        if tri.Z.shape[0]:
            Zc = sp.hstack([tri.Z, sp.csr_matrix((tri.Z.shape[0], 1))], format="csr")
            ub = np.where(tri.z_eq, tri.z_rhs, np.inf)
            cons.append(LinearConstraint(Zc, tri.z_rhs, ub))
        if state.cuts:
            C = np.array([np.concatenate([ct.coef, [ct.theta_coef]]) for ct in state.cuts])
            cons.append(LinearConstraint(C, np.array([ct.rhs for ct in state.cuts]), np.inf))
        bounds = Bounds(np.concatenate([tri.lead_lo, [theta_lo]]), np.concatenate([tri.lead_hi, [np.inf]]))
        integrality = np.concatenate([tri.lead_int.astype(int), [0]])
        res = milp(c, constraints=cons, bounds=bounds, integrality=integrality,
                   options={"mip_rel_gap": 1e-10, "disp": False})
        if res.status != 0 or res.x is None:
            return None, None
        z = res.x[:n].copy()
        z[tri.lead_int] = np.round(z[tri.lead_int])
        return z, float(res.fun) + self.c0

    def _dump(self, state: BendersState) -> str | None:
        if self.dump_dir is None:
            return None
        self.dump_dir.mkdir(parents=True, exist_ok=True)
        path = self.dump_dir / "benders_cuts.json"
        path.write_text(json.dumps([ct.to_dict() for ct in state.cuts], indent=1))
        return str(path)

    # -- heuristic -------------------------------------------------------

    def repair(self, z, res: SubproblemResult, state: BendersState):
        from .heuristic import repair_heuristic

        return repair_heuristic(self, z, res, state)

    # -- loop ------------------------------------------------------------

    def _record(self, state: BendersState, event: dict, fh):
        event = dict(event, iteration=state.iteration, lower=state.lower, upper=state.upper)
        state.history.append(event)
        if fh is not None:
            fh.write(json.dumps(event, sort_keys=True, default=float) + "\n")

    def offer(self, state: BendersState, z, res: SubproblemResult, fh=None, source="master") -> bool:
        if not res.feasible:
            return False
        obj = float(self.h @ z) + res.value + self.c0
        if obj < state.upper:
            state.upper = obj
            state.z = z.copy()
            self._record(state, {"event": "incumbent", "source": source, "objective": obj}, fh)
            return True
        return False

    def solve(self) -> BendersState:
        lim = self.cfg.limits
        state = BendersState()
        start = time.perf_counter()
        theta_lo = self._theta_floor()
        fh = open(self.log_path, "w") if self.log_path else None
        try:
            while state.iteration < lim.benders_iterations:
                if time.perf_counter() - start > lim.time_limit:
                    break
                state.iteration += 1
                z, lb = self.solve_master(state, theta_lo)
                if z is None:
                    if np.isfinite(state.upper):
                        # cuts exclude every point better than the incumbent
                        state.lower = state.upper
                        state.status = OPTIMAL
                        break
                    path = self._dump(state)
                    state.status = INFEASIBLE
                    raise BendersError(f"master infeasible at iteration {state.iteration}"
                                       + (f"; cut pool written to {path}" if path else ""))
                state.lower = max(state.lower, min(lb, state.upper))
                if state.gap <= lim.benders_gap:
                    state.status = OPTIMAL
                    break
                key = tuple(np.round(z, 9))
                if key in state.seen and np.isfinite(state.upper):
                    # the cut taken at this point is tight there, so the
                    # remaining gap is solver noise
                    log.debug("master revisited an evaluated point at iteration %d", state.iteration)
                    state.lower = state.upper
                    state.status = OPTIMAL
                    break
                res = self.evaluate(z)
                if res.dispatch_ok:
                    state.cuts.append(self.optimality_cut(res.yp, res.yg, state.iteration))
                if res.feasible:
                    self.offer(state, z, res, fh)
                else:
                    state.cuts.append(self.feasibility_cut(z, state.iteration, dispatch=not res.dispatch_ok))
                state.seen.add(key)
                zc = self.core_point(z)
                p1 = self.phase_one(zc, strict=False)
                if p1 is not None:
                    state.cuts.append(self.optimality_cut(p1[1], p1[2], state.iteration, "perturbation"))
                if (res.dispatch_ok and not res.feasible) or state.iteration % self.cfg.heuristic_every == 0:
                    self.repair(z, res, state)
                self._record(state, {"event": "iteration", "master": lb, "feasible": res.feasible,
                                     "value": res.value if res.feasible else None, "cuts": len(state.cuts)}, fh)
                if state.gap <= lim.benders_gap:
                    state.status = OPTIMAL
                    break
        finally:
            if fh is not None:
                fh.close()
        state.wall = time.perf_counter() - start
        return state


def benders_solve(tri: TriLevelProgram, config: Config | None = None, ybar: float | None = None,
                  log_path=None, dump_dir=None) -> BendersState:
    """Solve the single-level weighted program by Benders decomposition.

    The returned objective is comparable with branch-and-bound on
    :func:`ucgna.reformulation.reformulate` at the same weight and ``ybar``.
    """
    return BendersSolver(tri, config, ybar, log_path, dump_dir).solve()
