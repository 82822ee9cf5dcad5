"""Solve a :class:`~ucgna.model.ConicProgram` with the embedded interior-point method.

The wrapper converts the row/column form of a program into the
``A x = b, G x + s = h, s in K`` form of :mod:`ucgna.conic.ipm`:

* equality rows go to ``A``; ``>=`` rows, column bounds and nonnegative
  columns become orthant rows of ``G``; second-order blocks become cone rows;
* columns fixed by their bounds (outside second-order blocks) are
  substituted out, and rows left empty are checked and dropped.

Row multipliers are returned with the minimization convention of
:class:`~ucgna.model.Solution`.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..config import Tolerances
from ..model import INFEASIBLE, LIMIT, NONNEG, OPTIMAL, SOC, UNBOUNDED, ConicProgram, Solution, StandardForm
from . import ipm
from .kernels import BACKEND


def settings_from(tol: Tolerances | None = None, **overrides) -> ipm.IPMSettings:
    tol = tol or Tolerances()
    st = ipm.IPMSettings(
        feastol=min(1e-9, tol.feasibility),
        abstol=min(1e-9, tol.duality_gap),
        reltol=min(1e-9, tol.duality_gap),
        reduced_tol=tol.duality_gap,
    )
    for k, v in overrides.items():
        setattr(st, k, v)
    return st


def solve_conic(program: ConicProgram | StandardForm, tolerances: Tolerances | None = None,
                lower=None, upper=None, settings: ipm.IPMSettings | None = None) -> Solution:
    """Solve a program (or its standard form) to optimality.

    ``lower``/``upper`` optionally override the column bounds, which lets a
    branch-and-bound driver fix binaries without rebuilding the program.
    Numerical trouble is reported through ``status`` and never raised.
    """
    sf = program.to_standard_form() if isinstance(program, ConicProgram) else program
    st = settings or settings_from(tolerances)
    lo = sf.lower if lower is None else np.asarray(lower, dtype=float)
    hi = sf.upper if upper is None else np.asarray(upper, dtype=float)
    sol = _guarded(sf, lo, hi, st, tolerances)
    if sol.status == LIMIT and settings is None:
        # one retry with a more cautious method before giving up
        retry = settings_from(tolerances, regularization=1e-8, step_fraction=0.95, max_iter=200)
        again = _guarded(sf, lo, hi, retry, tolerances)
        if again.status != LIMIT:
            again.info = dict(again.info, retried=True)
            return again
    return sol


def _guarded(sf, lo, hi, st, tolerances) -> Solution:
    try:
        return _solve(sf, lo, hi, st, tolerances or Tolerances())
    except (ValueError, RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return Solution(LIMIT, columns=sf.columns, row_tags=sf.row_tags, info={"error": str(exc)})


def _solve(sf: StandardForm, lo, hi, st, tol) -> Solution:
    n = sf.A.shape[1]
    nrows = sf.A.shape[0]
    if np.any(lo > hi + 1e-12):
        bad = int(np.flatnonzero(lo > hi + 1e-12)[0])
        return Solution(INFEASIBLE, columns=sf.columns, row_tags=sf.row_tags,
                        info={"reason": f"empty bounds on column {sf.columns[bad]!r}"})
    in_soc = np.zeros(n, dtype=bool)
    nonneg = np.zeros(n, dtype=bool)
    for kind, start, dim in sf.cones:
        if kind == SOC:
            in_soc[start:start + dim] = True
        elif kind == NONNEG:
            nonneg[start:start + dim] = True
    fixed = (lo == hi) & np.isfinite(lo) & ~in_soc
    if np.any(fixed & nonneg & (lo < -1e-12)):
        return Solution(INFEASIBLE, columns=sf.columns, row_tags=sf.row_tags,
                        info={"reason": "nonnegative column fixed to a negative value"})
    free_cols = np.flatnonzero(~fixed)
    xfix = np.where(fixed, lo, 0.0)

    A = sf.A.tocsc()
    Af = A[:, free_cols].tocsr()
    rhs = sf.b - A @ xfix
    c0 = sf.c0 + float(sf.c @ xfix)
    c = sf.c[free_cols]

    # drop rows with no free column left
    nnz_row = np.diff(Af.indptr)
    empty = nnz_row == 0
    feas_tol = max(tol.feasibility, 1e-9) * (1.0 + np.abs(sf.b))
    for i in np.flatnonzero(empty):
        bad = abs(rhs[i]) > feas_tol[i] if sf.is_eq[i] else rhs[i] > feas_tol[i]
        if bad:
            return Solution(INFEASIBLE, columns=sf.columns, row_tags=sf.row_tags,
                            info={"reason": f"row {sf.row_tags[i]!r} cannot be satisfied by fixed columns",
                                  "certificate_rows": {sf.row_tags[i]: 1.0}})
    if len(free_cols) == 0:
        # nothing left to optimize: the fixed point is the solution
        return Solution(OPTIMAL, x=xfix, y=np.zeros(nrows), objective=c0, gap=0.0, columns=sf.columns,
                        row_tags=sf.row_tags, info={"iterations": 0, "backend": BACKEND,
                                                    "bound_duals": np.zeros(n), "cone_duals": np.zeros(0)})
    eq_rows = np.flatnonzero(sf.is_eq & ~empty)
    ge_rows = np.flatnonzero(~sf.is_eq & ~empty)

    # orthant rows of G: >= rows, then bounds
    nf = len(free_cols)
    local = np.full(n, -1)
    local[free_cols] = np.arange(nf)
    lo_f, hi_f = lo[free_cols], hi[free_cols]
    nn_f = nonneg[free_cols]
    lb_val = np.where(nn_f, np.maximum(np.where(np.isfinite(lo_f), lo_f, 0.0), 0.0), lo_f)
    has_lb = nn_f | np.isfinite(lo_f)
    has_ub = np.isfinite(hi_f)
    lb_cols = np.flatnonzero(has_lb)
    ub_cols = np.flatnonzero(has_ub)

    G_ge = -Af[ge_rows]
    h_ge = -rhs[ge_rows]
    G_lb = sp.csr_matrix((-np.ones(len(lb_cols)), (np.arange(len(lb_cols)), lb_cols)), shape=(len(lb_cols), nf))
    h_lb = -lb_val[lb_cols]
    G_ub = sp.csr_matrix((np.ones(len(ub_cols)), (np.arange(len(ub_cols)), ub_cols)), shape=(len(ub_cols), nf))
    h_ub = hi_f[ub_cols]

    soc_blocks = []
    q_dims = []
    for kind, start, dim in sf.cones:
        if kind != SOC:
            continue
        cols = local[start:start + dim]
        soc_blocks.append(sp.csr_matrix((-np.ones(dim), (np.arange(dim), cols)), shape=(dim, nf)))
        q_dims.append(dim)
    l = G_ge.shape[0] + G_lb.shape[0] + G_ub.shape[0]
    G = sp.vstack([G_ge, G_lb, G_ub] + soc_blocks, format="csr")
    h = np.concatenate([h_ge, h_lb, h_ub, np.zeros(sum(q_dims))])
    Aeq = Af[eq_rows]
    beq = rhs[eq_rows]

    res = ipm.solve_ipm(c, Aeq, beq, G, h, l, q_dims, st)
    info = {"iterations": res.iterations, "backend": BACKEND, **{k: v for k, v in res.info.items()
                                                                 if k not in ("certificate", "ray")}}
    y = np.zeros(nrows)
    if res.status == INFEASIBLE:
        cert = np.zeros(nrows)
        cert[ge_rows] = res.z[: len(ge_rows)]
        cert[eq_rows] = -res.y
        zb = res.z[len(ge_rows):l]
        info["certificate_bounds"] = {"lower": dict(zip(free_cols[lb_cols].tolist(), zb[:len(lb_cols)].tolist())),
                                      "upper": dict(zip(free_cols[ub_cols].tolist(), zb[len(lb_cols):].tolist()))}
        return Solution(INFEASIBLE, columns=sf.columns, row_tags=sf.row_tags, iterations=res.iterations,
                        info=info, certificate=cert)
    if res.status == UNBOUNDED:
        ray = np.zeros(n)
        ray[free_cols] = res.x
        return Solution(UNBOUNDED, columns=sf.columns, row_tags=sf.row_tags, iterations=res.iterations,
                        info=info, certificate=ray)
    x = xfix.copy()
    x[free_cols] = res.x
    y[ge_rows] = res.z[: len(ge_rows)]
    y[eq_rows] = -res.y
    zb = res.z[len(ge_rows):l]
    # column multipliers: lower-bound minus upper-bound duals, by original column
    red = np.zeros(n)
    red[free_cols[lb_cols]] += zb[: len(lb_cols)]
    red[free_cols[ub_cols]] -= zb[len(lb_cols):]
    info["bound_duals"] = red
    info["cone_duals"] = res.z[l:]
    info.update(pres=res.pres, dres=res.dres)
    pobj = float(c @ res.x) + c0
    dobj = res.dcost + c0
    gap = abs(pobj - dobj) / max(1.0, abs(pobj))
    status = OPTIMAL if res.status == ipm.OPTIMAL else LIMIT
    return Solution(status, x=x, y=y, objective=pobj, gap=gap, columns=sf.columns, row_tags=sf.row_tags,
                    iterations=res.iterations, info=info)


def check_kkt(sf: StandardForm, sol: Solution) -> dict:
    """Independent residuals of an optimal solution (row form, bounds included)."""
    ax = sf.A @ sol.x
    viol_eq = np.abs(ax - sf.b)[sf.is_eq]
    viol_ge = np.maximum(sf.b - ax, 0.0)[~sf.is_eq]
    dual_sign = np.minimum(sol.y[~sf.is_eq], 0.0)
    comp = np.abs(sol.y[~sf.is_eq] * (ax - sf.b)[~sf.is_eq])
    return {
        "primal": float(max(viol_eq.max(initial=0.0), viol_ge.max(initial=0.0))),
        "dual_sign": float(-dual_sign.min(initial=0.0)),
        "complementarity": float(comp.max(initial=0.0)),
        "gap": sol.gap,
    }


__all__ = ["solve_conic", "settings_from", "check_kkt", "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "LIMIT"]
