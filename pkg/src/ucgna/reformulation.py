"""Tri-level block structure and its single-level reformulations.

:func:`assemble_trilevel` builds the joint power/gas program and splits it
into the blocks of the leader/dispatch/gas chain:

* leader: binaries ``z`` (and start-up costs) with cost ``h_cost`` and rows ``Z``;
* dispatch: ``A x_p + B z >= b`` with cost ``c_p``;
* gas: ``D_p x_p + D_g x_g >= d``, ``x_g`` in a product of cones, cost ``c_g``;
* validity: ``E y_g + M z >= h_rhs`` on the gas balance multipliers ``y_g``.

Rows may also be equalities and columns may be free; their multipliers
are then free and their dual rows equalities.

From these blocks the module builds the single-level program
(:func:`reformulate`), the joint program without dual rows
(:func:`joint_misocp`) and the continuous pieces used by decomposition
(:func:`inner_program`, :class:`DualTemplate`, :class:`ElasticTemplate`).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .coupling import CouplingSpec, bid_logic_rows, bid_validity_rows, gas_demand_rows
from .gas import GasSystem, build_gas_program
from .model import FREE, NONNEG, SOC, ConicProgram, MatrixBuilder, ModelError, StandardForm
from .power import PowerSystem, build_ed_block, build_uc_block

log = logging.getLogger(__name__)


@dataclass
class TriLevelProgram:
    # leader
    leader_cols: list
    lead_lo: np.ndarray
    lead_hi: np.ndarray
    lead_int: np.ndarray
    h_cost: np.ndarray
    Z: sp.csr_matrix
    z_rhs: np.ndarray
    z_eq: np.ndarray
    z_tags: list
    # dispatch
    p_cols: list
    p_nonneg: np.ndarray
    c_p: np.ndarray
    A: sp.csr_matrix
    B: sp.csr_matrix
    b: np.ndarray
    e_eq: np.ndarray
    e_tags: list
    # gas
    g_cols: list
    g_nonneg: np.ndarray
    g_soc: list
    c_g: np.ndarray
    Dp: sp.csr_matrix
    Dg: sp.csr_matrix
    d: np.ndarray
    g_eq: np.ndarray
    g_tags: list
    # validity
    E: sp.csr_matrix
    M: sp.csr_matrix
    h_rhs: np.ndarray
    v_tags: list
    validity: list
    c0: float = 0.0
    program: ConicProgram | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_leader(self) -> int:
        return len(self.leader_cols)

    @property
    def free_binaries(self) -> np.ndarray:
        return np.flatnonzero(self.lead_int & (self.lead_lo < self.lead_hi))

    def leader_index(self, ref) -> int:
        idx = self.meta.setdefault("_lead_index", {r: k for k, r in enumerate(self.leader_cols)})
        return idx[ref]

    def gas_row(self, tag: str) -> int:
        idx = self.meta.setdefault("_gas_index", {t: k for k, t in enumerate(self.g_tags)})
        return idx[tag]

    def ed_row(self, tag: str) -> int:
        idx = self.meta.setdefault("_ed_index", {t: k for k, t in enumerate(self.e_tags)})
        return idx[tag]

    def b_coupled(self) -> np.ndarray:
        """Dispatch rows whose right-hand side moves with a free leader column."""
        free = np.zeros(self.n_leader, dtype=bool)
        free[self.lead_lo < self.lead_hi] = True
        Bf = self.B[:, np.flatnonzero(free)]
        return np.diff(Bf.tocsr().indptr) > 0

    def default_ybar(self) -> float:
        return float(self.meta.get("ybar_factor", 10.0) * self.meta.get("max_bid_price", 1.0))

    def with_leader_bounds(self, lo, hi) -> "TriLevelProgram":
        return replace(self, lead_lo=np.asarray(lo, dtype=float), lead_hi=np.asarray(hi, dtype=float),
                       meta={k: v for k, v in self.meta.items() if not k.startswith("_")})

    def with_extra_z_rows(self, Z, rhs, eq, tags) -> "TriLevelProgram":
        return replace(self, Z=sp.vstack([self.Z, sp.csr_matrix(Z)], format="csr"),
                       z_rhs=np.concatenate([self.z_rhs, rhs]), z_eq=np.concatenate([self.z_eq, eq]),
                       z_tags=self.z_tags + list(tags),
                       meta={k: v for k, v in self.meta.items() if not k.startswith("_")})

    def dimensions(self) -> dict:
        return {"leader": self.n_leader, "free_binaries": int(len(self.free_binaries)), "Z": self.Z.shape[0],
                "x_p": len(self.p_cols), "ed_rows": self.A.shape[0], "x_g": len(self.g_cols),
                "gas_rows": self.Dg.shape[0], "validity": self.E.shape[0]}


def build_joint_program(power: PowerSystem, gas: GasSystem, coupling: CouplingSpec, T: int = 1):
    """Joint program with every physical row; returns ``(program, handles)``."""
    P = ConicProgram("ucgna")
    gf = coupling.gfpp_ids
    uc = build_uc_block(P, power, T, gf)
    ed = build_ed_block(P, power, T, uc, gf)
    _, gv = build_gas_program(gas, None, T, P, [lk.junction for lk in coupling.links])
    gu = gas_demand_rows(P, power, coupling, ed, gv, T)
    rho = bid_logic_rows(P, power, gf, uc, ed, T)
    vrows = bid_validity_rows(power, coupling, uc, rho, T)
    return P, dict(uc=uc, ed=ed, gas=gv, gu=gu, rho=rho, validity=vrows)


def assemble_trilevel(power: PowerSystem, gas: GasSystem, coupling: CouplingSpec, T: int = 1,
                      ybar_factor: float = 10.0) -> TriLevelProgram:
    P, handles = build_joint_program(power, gas, coupling, T)
    tri = split_program(P, handles["validity"])
    tri.meta.update(handles)
    tri.meta.update(power=power, gas_system=gas, coupling=coupling, T=T, ybar_factor=ybar_factor,
                    max_bid_price=max((bd.price for g in power.generators for bd in g.bids), default=1.0))
    return tri


def _kinds(sf: StandardForm) -> np.ndarray:
    kind = np.full(sf.A.shape[1], FREE, dtype=object)
    for k, start, dim in sf.cones:
        kind[start:start + dim] = k
    return kind


def split_program(P: ConicProgram, validity=()) -> TriLevelProgram:
    """Split a joint program into tri-level blocks using block roles.

    Column bounds of dispatch and gas columns become rows (``lb:``, ``ub:``,
    ``fix:``) so that every restriction has a multiplier.
    """
    sf = P.to_standard_form()
    n = sf.A.shape[1]
    role = np.empty(n, dtype=object)
    for name, (off, size) in sf.blocks.items():
        r = P.blocks[name].role
        if r not in ("leader", "power", "gas"):
            raise ModelError(f"block {name!r} has no tri-level role")
        role[off:off + size] = r
    kind = _kinds(sf)
    L = np.flatnonzero(role == "leader")
    Pc = np.flatnonzero(role == "power")
    Gc = np.flatnonzero(role == "gas")
    if np.any(kind[Pc] == SOC):
        raise ModelError("cone blocks are only supported among gas columns")
    if np.any(kind[L] == SOC) or np.any(kind[L] == FREE):
        raise ModelError("leader columns must be nonnegative")

    A = sf.A.tocsc()
    AL, AP, AG = A[:, L].tocsr(), A[:, Pc].tocsr(), A[:, Gc].tocsr()
    nL, nP, nG = (np.diff(M.indptr) > 0 for M in (AL, AP, AG))
    bad = nG & nL
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ModelError(f"row {sf.row_tags[i]!r} links gas columns to leader columns directly")
    empty = ~(nL | nP | nG)
    for i in np.flatnonzero(empty):
        if (sf.is_eq[i] and abs(sf.b[i]) > 1e-12) or (not sf.is_eq[i] and sf.b[i] > 1e-12):
            raise ModelError(f"row {sf.row_tags[i]!r} has no columns and cannot hold")
    zr = np.flatnonzero(nL & ~nP & ~nG)
    er = np.flatnonzero(nP & ~nG)
    gr = np.flatnonzero(nG)

    def bound_rows(cols):
        rows, rhs, eq, tags = [], [], [], []
        for k, j in enumerate(cols):
            lo, hi = sf.lower[j], sf.upper[j]
            name = repr(sf.columns[j])
            if np.isfinite(lo) and lo == hi:
                rows.append((k, 1.0)); rhs.append(lo); eq.append(True); tags.append(f"fix:{name}")
                continue
            if np.isfinite(lo) and not (kind[j] == NONNEG and lo <= 0.0):
                rows.append((k, 1.0)); rhs.append(lo); eq.append(False); tags.append(f"lb:{name}")
            if np.isfinite(hi):
                rows.append((k, -1.0)); rhs.append(-hi); eq.append(False); tags.append(f"ub:{name}")
        m = len(rows)
        mat = sp.csr_matrix(([v for _, v in rows], (np.arange(m), [k for k, _ in rows])), shape=(m, len(cols)))
        return mat, np.array(rhs, dtype=float), np.array(eq, dtype=bool), tags

    PB, pb, peq, ptags = bound_rows(Pc)
    GB, gb, geq, gtags = bound_rows(Gc)
    zero = lambda m, k: sp.csr_matrix((m, k))

    Amat = sp.vstack([AP[er], PB], format="csr")
    Bmat = sp.vstack([AL[er], zero(PB.shape[0], len(L))], format="csr")
    bvec = np.concatenate([sf.b[er], pb])
    Dp = sp.vstack([AP[gr], zero(GB.shape[0], len(Pc))], format="csr")
    Dg = sp.vstack([AG[gr], GB], format="csr")
    dvec = np.concatenate([sf.b[gr], gb])
    g_tags = [sf.row_tags[i] for i in gr] + gtags
    gidx = {t: k for k, t in enumerate(g_tags)}
    lidx = {int(j): k for k, j in enumerate(L)}

    # validity rows: E over gas-row multipliers (unscaled), M over leader columns
    Er, Ec, Ev, Mr, Mc, Mv, hv, vt = [], [], [], [], [], [], [], []
    for v, row in enumerate(validity):
        tags = row.balance_tags()
        for t in tags:
            Er.append(v); Ec.append(gidx[t]); Ev.append(-row.K / len(tags))
        for ref, coef in row.rho.terms.items():
            Mr.append(v); Mc.append(lidx[sf.col(ref)]); Mv.append(row.alpha_u * coef)
        Mr.append(v); Mc.append(lidx[sf.col(row.u)]); Mv.append(-row.M)
        hv.append(-row.M - row.alpha_u * row.rho.constant)
        vt.append(row.tag)
    nv = len(validity)
    E = sp.csr_matrix((Ev, (Er, Ec)), shape=(nv, len(g_tags)))
    Mm = sp.csr_matrix((Mv, (Mr, Mc)), shape=(nv, len(L)))
    Mm.sum_duplicates()

    g_nonneg = kind[Gc] == NONNEG
    g_soc = []
    pos = {int(j): k for k, j in enumerate(Gc)}
    for k_, start, dim in sf.cones:
        if k_ == SOC:
            g_soc.append((pos[start], dim))
    return TriLevelProgram(
        leader_cols=[sf.columns[j] for j in L], lead_lo=sf.lower[L].copy(), lead_hi=sf.upper[L].copy(),
        lead_int=sf.integer[L].copy(), h_cost=sf.c[L].copy(),
        Z=AL[zr], z_rhs=sf.b[zr].copy(), z_eq=sf.is_eq[zr].copy(), z_tags=[sf.row_tags[i] for i in zr],
        p_cols=[sf.columns[j] for j in Pc], p_nonneg=kind[Pc] == NONNEG, c_p=sf.c[Pc].copy(),
        A=Amat, B=Bmat, b=bvec, e_eq=np.concatenate([sf.is_eq[er], peq]),
        e_tags=[sf.row_tags[i] for i in er] + ptags,
        g_cols=[sf.columns[j] for j in Gc], g_nonneg=g_nonneg, g_soc=g_soc, c_g=sf.c[Gc].copy(),
        Dp=Dp, Dg=Dg, d=dvec, g_eq=np.concatenate([sf.is_eq[gr], geq]), g_tags=g_tags,
        E=E, M=Mm, h_rhs=np.array(hv, dtype=float), v_tags=vt, validity=list(validity),
        c0=sf.c0, program=P)


# -- programs built from the blocks -------------------------------------------

def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ModelError(f"alpha must lie in (0, 1), got {alpha}")


def _leader_group(mb: MatrixBuilder, tri: TriLevelProgram, alpha: float, cost: bool = True):
    mb.add_columns("z", tri.n_leader, lower=tri.lead_lo, upper=tri.lead_hi,
                   cost=alpha * tri.h_cost if cost else None, integer=tri.lead_int)


def _primal_groups(mb: MatrixBuilder, tri: TriLevelProgram, alpha: float):
    g_nn = tri.g_nonneg.copy()
    mb.add_columns("xp", len(tri.p_cols), nonneg=tri.p_nonneg, cost=alpha * tri.c_p)
    mb.add_columns("xg", len(tri.g_cols), nonneg=g_nn, soc_runs=tri.g_soc, cost=(1.0 - alpha) * tri.c_g)


def _primal_rows(mb: MatrixBuilder, tri: TriLevelProgram, with_z_rows: bool = True):
    if with_z_rows:
        mb.add_rows([f"Z:{t}" for t in tri.z_tags], {"z": tri.Z}, tri.z_rhs, tri.z_eq)
    mb.add_rows([f"ED:{t}" for t in tri.e_tags], {"xp": tri.A, "z": tri.B}, tri.b, tri.e_eq)
    mb.add_rows([f"G:{t}" for t in tri.g_tags], {"xp": tri.Dp, "xg": tri.Dg}, tri.d, tri.g_eq)


def joint_misocp(tri: TriLevelProgram, alpha: float) -> StandardForm:
    """Joint weighted program over leader, dispatch and gas columns (no dual rows)."""
    _check_alpha(alpha)
    mb = MatrixBuilder()
    _leader_group(mb, tri, alpha)
    _primal_groups(mb, tri, alpha)
    _primal_rows(mb, tri)
    return mb.build(alpha * tri.c0)


def inner_program(tri: TriLevelProgram, alpha: float) -> StandardForm:
    """Weighted dispatch + gas program with the leader block as fixable parameters.

    Leader columns carry no cost and no leader rows; fix them through the
    ``lower``/``upper`` arguments of the solver.
    """
    _check_alpha(alpha)
    mb = MatrixBuilder()
    _leader_group(mb, tri, alpha, cost=False)
    _primal_groups(mb, tri, alpha)
    _primal_rows(mb, tri, with_z_rows=False)
    return mb.build(0.0)


def _dual_cols(mb: MatrixBuilder, tri: TriLevelProgram, ybar: float | None):
    up = np.full(len(tri.e_tags), np.inf)
    lo = np.where(tri.e_eq, -np.inf, 0.0)
    if ybar is not None:
        cap = tri.b_coupled()
        up[cap] = ybar
        lo[cap & tri.e_eq] = -ybar
    mb.add_columns("yp", len(tri.e_tags), nonneg=~tri.e_eq, lower=lo, upper=up)
    mb.add_columns("yg", len(tri.g_tags), nonneg=~tri.g_eq)
    nsoc = sum(d for _, d in tri.g_soc)
    runs, k = [], 0
    for _, d in tri.g_soc:
        runs.append((k, d))
        k += d
    if nsoc:
        mb.add_columns("dsoc", nsoc, nonneg=False, soc_runs=runs)
    return nsoc


def _dual_rows(mb: MatrixBuilder, tri: TriLevelProgram, alpha: float, nsoc: int):
    """Dual feasibility: ``alpha c_p - A'y_p - D_p'y_g`` and ``(1-alpha) c_g - D_g'y_g`` in the dual cones."""
    ptags = [f"dp:{c!r}" for c in tri.p_cols]
    mb.add_rows(ptags, {"yp": -tri.A.T.tocsr(), "yg": -tri.Dp.T.tocsr()}, -alpha * tri.c_p, ~tri.p_nonneg)
    in_soc = np.zeros(len(tri.g_cols), dtype=bool)
    soc_cols = []
    for s, d in tri.g_soc:
        in_soc[s:s + d] = True
        soc_cols.extend(range(s, s + d))
    lin = np.flatnonzero(~in_soc)
    DgT = tri.Dg.T.tocsr()
    mb.add_rows([f"dg:{tri.g_cols[j]!r}" for j in lin], {"yg": -DgT[lin]}, -(1.0 - alpha) * tri.c_g[lin],
                ~tri.g_nonneg[lin])
    if nsoc:
        sc = np.array(soc_cols)
        mb.add_rows([f"dg:{tri.g_cols[j]!r}" for j in sc], {"yg": DgT[sc], "dsoc": sp.identity(nsoc, format="csr")},
                    (1.0 - alpha) * tri.c_g[sc], True)


def mccormick(y_lo: float, y_hi: float):
    """Rows of the exact linearization of ``w = y z`` for binary ``z`` and ``y`` in ``[y_lo, y_hi]``.

    Returns a list of ``(coef_w, coef_y, coef_z, rhs)`` meaning
    ``coef_w w + coef_y y + coef_z z >= rhs``.
    """
    if not (np.isfinite(y_lo) and np.isfinite(y_hi)) or y_lo > y_hi:
        raise ModelError(f"McCormick cell needs finite bounds, got [{y_lo}, {y_hi}]")
    return [
        (1.0, 0.0, -y_lo, 0.0),        # w >= y_lo z
        (-1.0, 0.0, y_hi, 0.0),        # w <= y_hi z
        (-1.0, 1.0, y_lo, y_lo),       # w <= y - y_lo (1 - z)
        (1.0, -1.0, -y_hi, -y_hi),     # w >= y - y_hi (1 - z)
    ]


@dataclass
class McCormickCell:
    row: int
    leader: int
    coef: float
    y_lo: float
    y_hi: float


def reformulate(tri: TriLevelProgram, alpha: float, ybar: float | None = None,
                validity: bool = True) -> StandardForm:
    """Single-level weighted program with strong duality, dual feasibility and validity rows.

    ``y_p' B z`` in the strong-duality row is replaced by one linearized
    cell per nonzero of ``B`` on a free leader column; fixed leader columns
    contribute constants.  Multipliers of rows with such cells are bounded
    by ``ybar``.
    """
    _check_alpha(alpha)
    ybar = tri.default_ybar() if ybar is None else float(ybar)
    if not ybar > 0:
        raise ModelError("ybar must be positive")
    mb = MatrixBuilder()
    _leader_group(mb, tri, alpha)
    _primal_groups(mb, tri, alpha)
    nsoc = _dual_cols(mb, tri, ybar)
    fixed = tri.lead_lo >= tri.lead_hi
    Bc = tri.B.tocoo()
    cells = []
    for i, j, v in zip(Bc.row, Bc.col, Bc.data):
        if v == 0.0 or fixed[j]:
            continue
        if not tri.lead_int[j]:
            raise ModelError(f"dispatch row {tri.e_tags[i]!r} depends on a continuous leader column")
        lo = -ybar if tri.e_eq[i] else 0.0
        cells.append(McCormickCell(int(i), int(j), float(v), lo, ybar))
    ncell = len(cells)
    if ncell:
        mb.add_columns("mc", ncell, nonneg=False)
    _primal_rows(mb, tri)
    _dual_rows(mb, tri, alpha, nsoc)

    # strong duality
    zfix = np.where(fixed, tri.lead_lo, 0.0)
    beff = tri.b - tri.B @ zfix
    blocks = {"yp": sp.csr_matrix(beff.reshape(1, -1)), "yg": sp.csr_matrix(tri.d.reshape(1, -1)),
              "xp": sp.csr_matrix(-alpha * tri.c_p.reshape(1, -1)),
              "xg": sp.csr_matrix(-(1.0 - alpha) * tri.c_g.reshape(1, -1))}
    if ncell:
        blocks["mc"] = sp.csr_matrix(np.array([[-c.coef for c in cells]]))
    mb.add_rows(["strong_duality"], blocks, [0.0], False)

    if validity and tri.E.shape[0]:
        mb.add_rows([f"V:{t}" for t in tri.v_tags], {"yg": tri.E / (1.0 - alpha), "z": tri.M}, tri.h_rhs, False)

    if ncell:
        tags, rw, ry, rz, rhs = [], [], [], [], []
        for k, c in enumerate(cells):
            for r, (cw, cy, cz, rr) in enumerate(mccormick(c.y_lo, c.y_hi)):
                tags.append(f"mc:{tri.e_tags[c.row]}:{tri.leader_cols[c.leader]!r}:{r}")
                rw.append((len(rhs), k, cw))
                ry.append((len(rhs), c.row, cy))
                rz.append((len(rhs), c.leader, cz))
                rhs.append(rr)
        m = len(rhs)

        def mat(entries, ncol):
            return sp.csr_matrix(([e[2] for e in entries], ([e[0] for e in entries], [e[1] for e in entries])),
                                 shape=(m, ncol))

        mb.add_rows(tags, {"mc": mat(rw, ncell), "yp": mat(ry, len(tri.e_tags)), "z": mat(rz, tri.n_leader)},
                    rhs, False)
    sf = mb.build(alpha * tri.c0)
    sf.blocks = dict(sf.blocks)
    return sf


def leader_values(sf: StandardForm, x: np.ndarray) -> np.ndarray:
    return x[sf.block_slice("z")]


class DualTemplate:
    """Dual of the weighted dispatch + gas program, re-targeted at any leader point.

    ``solve(z)`` maximizes ``y_p'(b - B z) + y_g' d`` over dual-feasible
    multipliers, optionally with the validity rows at ``z`` and the
    ``ybar`` caps; returns ``(value, y_p, y_g, solution)``.
    """

    def __init__(self, tri: TriLevelProgram, alpha: float, ybar: float | None = None, validity: bool = True):
        _check_alpha(alpha)
        self.tri, self.alpha = tri, alpha
        self.ybar = ybar
        mb = MatrixBuilder()
        nsoc = _dual_cols(mb, tri, ybar)
        _dual_rows(mb, tri, alpha, nsoc)
        self.validity = bool(validity and tri.E.shape[0])
        if self.validity:
            mb.add_rows([f"V:{t}" for t in tri.v_tags], {"yg": tri.E / (1.0 - alpha)}, tri.h_rhs, False)
        self.sf = mb.build()
        self.yp = self.sf.block_slice("yp")
        self.yg = self.sf.block_slice("yg")
        self.vrows = np.arange(self.sf.A.shape[0] - tri.E.shape[0], self.sf.A.shape[0]) if self.validity else None

    def at(self, z) -> StandardForm:
        z = np.asarray(z, dtype=float)
        c = np.zeros_like(self.sf.c)
        c[self.yp] = -(self.tri.b - self.tri.B @ z)
        c[self.yg] = -self.tri.d
        b = self.sf.b.copy()
        if self.validity:
            b[self.vrows] = self.tri.h_rhs - self.tri.M @ z
        return replace(self.sf, c=c, b=b)

    def solve(self, z, tolerances=None):
        from .conic.solve import solve_conic
        from .model import OPTIMAL

        sol = solve_conic(self.at(z), tolerances)
        if sol.status != OPTIMAL:
            return None, None, None, sol
        return -sol.objective, sol.x[self.yp].copy(), sol.x[self.yg].copy(), sol


class ElasticTemplate:
    """Continuous part of a single-level program with every row relaxed by slack.

    At a leader point ``z`` the optimal total slack is zero exactly when the
    program is feasible at ``z``; otherwise its multipliers give a cut
    ``coef' z >= rhs`` that every feasible leader point satisfies.
    """

    def __init__(self, single: StandardForm):
        self.src = single
        zs = single.block_slice("z")
        n = single.A.shape[1]
        cont = np.ones(n, dtype=bool)
        cont[zs] = False
        A = single.A.tocsc()
        Ac = A[:, cont].tocsr()
        keep = np.diff(Ac.indptr) > 0
        self.rows = np.flatnonzero(keep)
        self.AL = A[:, zs].tocsr()[self.rows]
        self.b = single.b[self.rows]
        eq = single.is_eq[self.rows]
        m = len(self.rows)
        nc = int(cont.sum())
        ncol_idx = np.flatnonzero(cont)
        mb = MatrixBuilder()
        nn = np.zeros(nc, dtype=bool)
        soc_runs = []
        pos = {int(j): k for k, j in enumerate(ncol_idx)}
        for kind, start, dim in single.cones:
            if start in pos:
                if kind == NONNEG:
                    nn[pos[start]:pos[start] + dim] = True
                elif kind == SOC:
                    soc_runs.append((pos[start], dim))
        mb.add_columns("x", nc, nonneg=nn, soc_runs=soc_runs, lower=single.lower[cont], upper=single.upper[cont])
        neq = int(eq.sum())
        mb.add_columns("sp", m, cost=np.ones(m))
        blocks = {"x": Ac[self.rows], "sp": sp.identity(m, format="csr")}
        if neq:
            mb.add_columns("sm", neq, cost=np.ones(neq))
            sel = np.flatnonzero(eq)
            blocks["sm"] = sp.csr_matrix((-np.ones(neq), (sel, np.arange(neq))), shape=(m, neq))
        mb.add_rows([single.row_tags[i] for i in self.rows], blocks, self.b, eq)
        self.sf = mb.build()

    def solve(self, z, tolerances=None):
        """Returns ``(violation, cut_coef, cut_rhs)``; the cut reads ``cut_coef' z >= cut_rhs``."""
        from .conic.solve import solve_conic
        from .model import OPTIMAL

        z = np.asarray(z, dtype=float)
        r = self.b - self.AL @ z
        sol = solve_conic(replace(self.sf, b=r), tolerances)
        if sol.status != OPTIMAL:
            return None, None, None
        u = sol.y
        kappa = sol.objective - float(u @ r)
        # value(z') >= u'(b - AL z') + kappa = 0 at every feasible z'
        coef = self.AL.T @ u
        rhs = float(u @ self.b + kappa)
        return sol.objective, np.asarray(coef).ravel(), rhs


@dataclass
class SweepRow:
    alpha: float
    leader_objective: float
    oracle_objective: float
    gap: float
    xp_distance: float
    z: np.ndarray


def leader_objective(tri: TriLevelProgram, sf: StandardForm, x: np.ndarray) -> float:
    """Commitment plus dispatch cost of a single-level or joint solution."""
    return float(tri.h_cost @ x[sf.block_slice("z")] + tri.c_p @ x[sf.block_slice("xp")] + tri.c0)


def alpha_sweep(tri: TriLevelProgram, alphas, cap: int = 12, ybar: float | None = None,
                limits=None, tolerances=None) -> list[SweepRow]:
    """Solve the single-level program at each weight and compare with the enumeration oracle.

    The gap is relative: ``|L(alpha) - L*| / max(1, |L*|)`` with ``L`` the
    leader objective (commitment plus dispatch cost).
    """
    from .oracle import enumerate_trilevel
    from .solver.bnb import branch_and_bound
    from .model import OPTIMAL

    ref = enumerate_trilevel(tri, cap)
    if ref.best is None:
        raise ModelError("the tri-level program has no valid leader point")
    rows = []
    for a in alphas:
        sf = reformulate(tri, a, ybar)
        sol = branch_and_bound(sf, limits, tolerances)
        if sol.status != OPTIMAL:
            rows.append(SweepRow(a, np.inf, ref.objective, np.inf, np.inf, np.empty(0)))
            continue
        L = leader_objective(tri, sf, sol.x)
        xp = sol.x[sf.block_slice("xp")]
        rows.append(SweepRow(a, L, ref.objective, abs(L - ref.objective) / max(1.0, abs(ref.objective)),
                             float(np.max(np.abs(xp - ref.best.x_p))) if len(xp) else 0.0,
                             sol.x[sf.block_slice("z")].copy()))
    return rows
