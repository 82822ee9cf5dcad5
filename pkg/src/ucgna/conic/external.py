"""Adapter that solves a standard-form program with cvxpy.

Used as an independent second route for cross-checks: the enumeration
oracle and several tests compare it against the embedded interior-point
method.  cvxpy is an optional dependency.
"""
from __future__ import annotations

import numpy as np

from ..model import INFEASIBLE, LIMIT, NONNEG, OPTIMAL, SOC, UNBOUNDED, ConicProgram, Solution, StandardForm


def available() -> bool:
    try:
        import cvxpy  # noqa: F401
    except ImportError:
        return False
    return True


def solve_external(program: ConicProgram | StandardForm, lower=None, upper=None, solver: str = "CLARABEL",
                   integer: bool = False) -> Solution:
    """Solve with cvxpy; with ``integer=True`` binary columns are enforced (needs a MI-capable solver)."""
    import cvxpy as cp

    sf = program.to_standard_form() if isinstance(program, ConicProgram) else program
    lo = sf.lower if lower is None else np.asarray(lower, dtype=float)
    hi = sf.upper if upper is None else np.asarray(upper, dtype=float)
    n = sf.A.shape[1]
    x = cp.Variable(n)
    cons = []
    eq = np.flatnonzero(sf.is_eq)
    ge = np.flatnonzero(~sf.is_eq)
    row_cons = {}
    if len(eq):
        row_cons["eq"] = sf.A[eq] @ x == sf.b[eq]
        cons.append(row_cons["eq"])
    if len(ge):
        row_cons["ge"] = sf.A[ge] @ x >= sf.b[ge]
        cons.append(row_cons["ge"])
    for kind, start, dim in sf.cones:
        if kind == SOC:
            cons.append(cp.SOC(x[start], x[start + 1:start + dim]))
        elif kind == NONNEG:
            cons.append(x[start:start + dim] >= 0)
    fin_lo = np.flatnonzero(np.isfinite(lo))
    fin_hi = np.flatnonzero(np.isfinite(hi))
    if len(fin_lo):
        cons.append(x[fin_lo] >= lo[fin_lo])
    if len(fin_hi):
        cons.append(x[fin_hi] <= hi[fin_hi])
    if integer and sf.integer.any():
        zb = cp.Variable(int(sf.integer.sum()), boolean=True)
        cons.append(x[np.flatnonzero(sf.integer)] == zb)
    prob = cp.Problem(cp.Minimize(sf.c @ x + sf.c0), cons)
    try:
        prob.solve(solver=solver)
    except cp.SolverError as exc:
        return Solution(LIMIT, columns=sf.columns, row_tags=sf.row_tags, info={"error": str(exc)})
    st = prob.status
    if st in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return Solution(INFEASIBLE, columns=sf.columns, row_tags=sf.row_tags, info={"solver": solver})
    if st in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        return Solution(UNBOUNDED, columns=sf.columns, row_tags=sf.row_tags, info={"solver": solver})
    if st not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return Solution(LIMIT, columns=sf.columns, row_tags=sf.row_tags, info={"solver": solver, "status": st})
    y = np.zeros(sf.A.shape[0])
    if not integer:
        # cvxpy reports nonnegative multipliers for >= rows; equality duals follow d(obj)/d(rhs) up to sign
        if len(eq):
            y[eq] = -np.asarray(row_cons["eq"].dual_value).ravel()
        if len(ge):
            y[ge] = np.asarray(row_cons["ge"].dual_value).ravel()
    return Solution(OPTIMAL, x=np.asarray(x.value).ravel(), y=y, objective=float(prob.value), gap=0.0,
                    columns=sf.columns, row_tags=sf.row_tags, info={"solver": solver, "status": st})
